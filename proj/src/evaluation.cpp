#include "passauth/evaluation.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <set>

#include "passauth/errors.hpp"

namespace passauth::evaluation {

namespace {

void check_nonempty(const ScoreSet& scores, const char* who) {
    if (scores.genuine.empty() || scores.impostor.empty())
        throw DataError(std::string(who) + ": empty score population in '" +
                        scores.label + "'");
}

double fraction_above(std::span<const double> values, double threshold) {
    std::size_t count = 0;
    for (double v : values)
        if (v > threshold) ++count;
    return static_cast<double>(count) / static_cast<double>(values.size());
}

}  // namespace

ScoreSet score_pairs(const neuralnet::SiameseModel& model,
                     std::span<const dataset::SegmentPair> pairs,
                     const std::string& label) {
    ScoreSet out;
    out.label = label;
    for (const auto& p : pairs) {
        const double d = neuralnet::pair_distance(model, p.a.features, p.b.features);
        (p.label == 0 ? out.genuine : out.impostor).push_back(-d);
    }
    return out;
}

TarResult tar_at_far(const ScoreSet& scores, double far_target) {
    check_nonempty(scores, "tar_at_far");
    if (!(far_target > 0.0 && far_target < 1.0))
        throw ConfigError("tar_at_far: far_target must be in (0, 1)");

    std::vector<double> impostor(scores.impostor.begin(), scores.impostor.end());
    std::sort(impostor.begin(), impostor.end(), std::greater<>());
    const std::size_t allowed = static_cast<std::size_t>(
        std::floor(far_target * static_cast<double>(impostor.size())));
    const double threshold = impostor[std::min(allowed, impostor.size() - 1)];
    return {100.0 * fraction_above(scores.genuine, threshold), threshold};
}

double tar_at_threshold(std::span<const double> genuine, double threshold) {
    if (genuine.empty()) throw DataError("tar_at_threshold: empty genuine scores");
    return 100.0 * fraction_above(genuine, threshold);
}

double far_at_threshold(std::span<const double> impostor, double threshold) {
    if (impostor.empty()) throw DataError("far_at_threshold: empty impostor scores");
    return 100.0 * fraction_above(impostor, threshold);
}

double eer_percent(const ScoreSet& scores) {
    check_nonempty(scores, "eer");

    std::set<double> pooled(scores.genuine.begin(), scores.genuine.end());
    pooled.insert(scores.impostor.begin(), scores.impostor.end());
    std::vector<double> candidates;
    candidates.push_back(*pooled.begin() - 1.0);  // FAR=1, FRR=0 sentinel
    candidates.insert(candidates.end(), pooled.begin(), pooled.end());

    double prev_far = 0.0, prev_frr = 0.0, prev_diff = 0.0;
    bool have_prev = false;
    for (double tau : candidates) {
        const double far = fraction_above(scores.impostor, tau);
        const double frr = 1.0 - fraction_above(scores.genuine, tau);
        const double diff = far - frr;
        if (diff <= 0.0) {
            if (!have_prev) return 100.0 * far;  // crossing at the sentinel
            const double t = prev_diff / (prev_diff - diff);
            return 100.0 * (prev_far + t * (far - prev_far));
        }
        prev_far = far;
        prev_frr = frr;
        prev_diff = diff;
        have_prev = true;
    }
    (void)prev_frr;
    return 100.0;  // FAR stays above FRR everywhere; degenerate populations
}

RocSummary roc_summary(const ScoreSet& scores) {
    RocSummary roc;
    const auto t1 = tar_at_far(scores, 0.01);
    const auto t01 = tar_at_far(scores, 0.001);
    roc.tar_at_far_1pct = t1.tar_pct;
    roc.threshold_1pct = t1.threshold;
    roc.tar_at_far_0p1pct = t01.tar_pct;
    roc.threshold_0p1pct = t01.threshold;
    roc.eer_pct = eer_percent(scores);

    const auto all_equal = [](std::span<const double> v) {
        return std::all_of(v.begin(), v.end(), [&](double x) { return x == v[0]; });
    };
    roc.degenerate = !scores.genuine.empty() && !scores.impostor.empty() &&
                     all_equal(scores.genuine) && all_equal(scores.impostor) &&
                     scores.genuine[0] == scores.impostor[0];
    return roc;
}

ScoreSet euclidean_scores(std::span<const dataset::SegmentPair> pairs,
                          const std::string& label) {
    ScoreSet out;
    out.label = label;
    for (const auto& p : pairs) {
        if (!p.a.features.same_shape(p.b.features))
            throw ShapeError("euclidean_scores: mismatched segment shapes");
        double acc = 0.0;
        for (std::size_t k = 0; k < p.a.features.data().size(); ++k) {
            const double d = p.a.features.data()[k] - p.b.features.data()[k];
            acc += d * d;
        }
        (p.label == 0 ? out.genuine : out.impostor).push_back(-std::sqrt(acc));
    }
    return out;
}

RocSummary euclidean_baseline(std::span<const dataset::SegmentPair> train_pairs,
                              std::span<const dataset::SegmentPair> test_pairs) {
    const auto train_scores = euclidean_scores(train_pairs, "euclidean-train");
    const auto test_scores = euclidean_scores(test_pairs, "euclidean-test");
    check_nonempty(train_scores, "euclidean_baseline");
    check_nonempty(test_scores, "euclidean_baseline");

    RocSummary roc;
    roc.threshold_1pct = tar_at_far(train_scores, 0.01).threshold;
    roc.threshold_0p1pct = tar_at_far(train_scores, 0.001).threshold;
    roc.tar_at_far_1pct = tar_at_threshold(test_scores.genuine, roc.threshold_1pct);
    roc.tar_at_far_0p1pct = tar_at_threshold(test_scores.genuine, roc.threshold_0p1pct);
    roc.eer_pct = eer_percent(test_scores);

    const auto all_zero = [](std::span<const double> v) {
        return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
    };
    roc.degenerate = all_zero(test_scores.genuine) && all_zero(test_scores.impostor);
    return roc;
}

NormStats score_range(const ScoreSet& training_scores) {
    check_nonempty(training_scores, "score_range");
    NormStats stats;
    stats.min = std::numeric_limits<double>::infinity();
    stats.max = -std::numeric_limits<double>::infinity();
    for (const auto* pop : {&training_scores.genuine, &training_scores.impostor}) {
        for (double v : *pop) {
            stats.min = std::min(stats.min, v);
            stats.max = std::max(stats.max, v);
        }
    }
    stats.degenerate = stats.min == stats.max;
    return stats;
}

ScoreSet normalize_scores(const ScoreSet& scores, const NormStats& reference) {
    if (reference.degenerate)
        throw DataError("normalize_scores: degenerate reference for '" +
                        scores.label + "'");
    const double span = reference.max - reference.min;
    auto apply = [&](double v) {
        return std::clamp((v - reference.min) / span, 0.0, 1.0);
    };
    ScoreSet out;
    out.label = scores.label;
    out.genuine.reserve(scores.genuine.size());
    out.impostor.reserve(scores.impostor.size());
    for (double v : scores.genuine) out.genuine.push_back(apply(v));
    for (double v : scores.impostor) out.impostor.push_back(apply(v));
    return out;
}

ScoreSet fuse_sum(std::span<const ScoreSet> sets) {
    if (sets.empty()) throw DataError("fuse_sum: empty modality subset");
    ScoreSet fused;
    fused.genuine.assign(sets[0].genuine.size(), 0.0);
    fused.impostor.assign(sets[0].impostor.size(), 0.0);
    std::string label;
    for (const auto& s : sets) {
        if (s.genuine.size() != fused.genuine.size() ||
            s.impostor.size() != fused.impostor.size())
            throw DataError("fuse_sum: misaligned score sets (" + s.label + ")");
        for (std::size_t k = 0; k < s.genuine.size(); ++k)
            fused.genuine[k] += s.genuine[k];
        for (std::size_t k = 0; k < s.impostor.size(); ++k)
            fused.impostor[k] += s.impostor[k];
        label += label.empty() ? s.label : "+" + s.label;
    }
    fused.label = label;
    return fused;
}

std::vector<SubsetResult> enumerate_subsets(
    const std::map<std::string, ScoreSet>& normalized_sets) {
    std::vector<const ScoreSet*> sets;
    std::vector<std::string> names;
    for (const auto& [name, s] : normalized_sets) {
        names.push_back(name);
        sets.push_back(&s);
    }
    const std::size_t m = names.size();
    if (m == 0) throw DataError("enumerate_subsets: no score sets");

    std::vector<std::vector<std::string>> subsets;
    std::vector<std::uint32_t> masks;
    for (std::uint32_t mask = 1; mask < (1u << m); ++mask) masks.push_back(mask);
    std::sort(masks.begin(), masks.end(), [&](std::uint32_t a, std::uint32_t b) {
        const int pa = std::popcount(a), pb = std::popcount(b);
        if (pa != pb) return pa < pb;
        // lexicographic on member names; names[] is sorted, so compare by
        // lowest set bits in order
        for (std::size_t k = 0; k < m; ++k) {
            const bool ina = a & (1u << k), inb = b & (1u << k);
            if (ina != inb) return ina;
        }
        return false;
    });

    std::vector<SubsetResult> results;
    results.reserve(masks.size());
    std::vector<ScoreSet> members;
    for (std::uint32_t mask : masks) {
        members.clear();
        SubsetResult r;
        for (std::size_t k = 0; k < m; ++k) {
            if (mask & (1u << k)) {
                r.modalities.push_back(names[k]);
                members.push_back(*sets[k]);
            }
        }
        r.roc = roc_summary(fuse_sum(members));
        results.push_back(std::move(r));
    }
    return results;
}

std::map<std::size_t, double> per_size_average(std::span<const SubsetResult> results) {
    std::map<std::size_t, std::pair<double, std::size_t>> acc;
    for (const auto& r : results) {
        if (r.modalities.size() < 2) continue;
        auto& [sum, count] = acc[r.modalities.size()];
        sum += r.roc.tar_at_far_0p1pct;
        ++count;
    }
    std::map<std::size_t, double> out;
    for (const auto& [size, sc] : acc)
        out[size] = sc.first / static_cast<double>(sc.second);
    return out;
}

std::optional<double> contribution(double tar_all, double tar_without) {
    if (tar_all < 0.0 || tar_all > 100.0 || tar_without < 0.0 || tar_without > 100.0)
        throw DataError("contribution: TARs must be percentages in [0, 100]");
    if (tar_without == 100.0) return std::nullopt;
    return (tar_all - tar_without) / (100.0 - tar_without);
}

}  // namespace passauth::evaluation
