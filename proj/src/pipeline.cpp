#include "passauth/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "passauth/errors.hpp"
#include "passauth/signal.hpp"

namespace passauth::pipeline {

namespace {

using dataset::IndexPair;
using evaluation::ScoreSet;

std::string fold_tag(const dataset::FoldSpec& fold) {
    return "fold" + std::to_string(fold.fold_index);
}

// (user, window-start-timestamp) -> position in that user's segment vector
using KeyIndex = std::map<std::string, std::map<std::size_t, std::size_t>>;

KeyIndex index_by_start(const SegmentsByUser& segments) {
    KeyIndex idx;
    for (const auto& [user, segs] : segments)
        for (std::size_t i = 0; i < segs.size(); ++i)
            idx[user][segs[i].start_index] = i;
    return idx;
}

double segment_distance(const signal::FeatureSegment& a,
                        const signal::FeatureSegment& b) {
    double acc = 0.0;
    for (std::size_t k = 0; k < a.features.data().size(); ++k) {
        const double d = a.features.data()[k] - b.features.data()[k];
        acc += d * d;
    }
    return std::sqrt(acc);
}

std::string format_pct(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string subset_label(const std::vector<std::string>& names) {
    std::string label = "fuse:";
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i) label += "+";
        label += names[i];
    }
    return label;
}

void emit_line(std::ostream& out, const std::string& label, std::size_t fold,
               std::size_t window, const evaluation::RocSummary& roc) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%s\t%zu\t%zu\t%.4f\t%.4f\t%.4f", label.c_str(),
                  fold, window, roc.tar_at_far_1pct, roc.tar_at_far_0p1pct,
                  roc.eer_pct);
    out << buf << '\n';
}

}  // namespace

SegmentsByUser build_feature_segments(const dataset::Corpus& corpus,
                                      const std::string& modality,
                                      std::size_t window, std::size_t shift) {
    const auto& desc = dataset::descriptor_for(modality);
    SegmentsByUser out;
    for (const auto& [key, raw_stream] : corpus) {
        if (key.second != modality) continue;
        auto stream = dataset::aggregate_to_grid(raw_stream);
        if (stream.empty()) continue;

        if (modality == "gps") {
            // Local normalization: raw coordinates carry the user's home
            // location, which would trivialize verification.
            Vector mean(desc.channel_count, 0.0);
            for (const auto& rec : stream)
                for (std::size_t d = 0; d < mean.size(); ++d)
                    mean[d] += rec.channels[d];
            for (double& m : mean) m /= static_cast<double>(stream.size());
            for (auto& rec : stream)
                for (std::size_t d = 0; d < mean.size(); ++d)
                    rec.channels[d] -= mean[d];
        }

        auto& segments = out[key.first];
        for (const auto& run : dataset::split_runs(stream)) {
            Matrix values(run.size(), desc.channel_count);
            for (std::size_t r = 0; r < run.size(); ++r)
                for (std::size_t d = 0; d < desc.channel_count; ++d)
                    values(r, d) = run[r].channels[d];
            const auto base = static_cast<std::size_t>(run.front().timestamp);
            for (auto& seg : signal::segment_stream(values, window, shift, key.first,
                                                    modality, base))
                segments.push_back(signal::assemble_features(seg, desc.is_movement));
        }
        if (segments.empty()) out.erase(key.first);
    }
    return out;
}

TrainedModels train_fold(const dataset::Corpus& corpus,
                         const std::vector<std::string>& modalities,
                         const dataset::FoldSpec& fold,
                         const training::TrainConfig& config) {
    TrainedModels models;
    for (const auto& modality : modalities) {
        auto segments =
            build_feature_segments(corpus, modality, config.window, config.window_shift);
        SegmentsByUser train_segments;
        for (const auto& user : fold.train_users) {
            auto it = segments.find(user);
            if (it != segments.end()) train_segments[user] = std::move(it->second);
        }
        if (train_segments.empty())
            throw DataError("train_fold: no training segments for " + modality);

        auto pairs = dataset::make_pairs(
            train_segments, config.max_genuine_per_user,
            dataset::derive_seed(config.rng_seed, "train-pairs:" + modality,
                                 fold_tag(fold)));

        training::TrainConfig modality_config = config;
        modality_config.rng_seed =
            dataset::derive_seed(config.rng_seed, "train:" + modality, fold_tag(fold));
        auto result = training::train_modality(pairs, modality_config);
        models.by_modality[modality] = std::move(result.model);
        models.reports[modality] = std::move(result.report);
    }
    return models;
}

FoldEvaluation evaluate_fold(const dataset::Corpus& corpus,
                             const TrainedModels& models,
                             const std::vector<std::string>& modalities,
                             const dataset::FoldSpec& fold,
                             const training::TrainConfig& config,
                             const EvalOptions& options) {
    if (modalities.empty()) throw ConfigError("evaluate_fold: no modalities");

    // Per-modality segments and the cross-modality window roster: only
    // windows present in every modality can be fused per pair.
    std::map<std::string, SegmentsByUser> segments;
    std::map<std::string, KeyIndex> indices;
    for (const auto& modality : modalities) {
        segments[modality] =
            build_feature_segments(corpus, modality, config.window, config.window_shift);
        indices[modality] = index_by_start(segments[modality]);
    }

    auto common_keys_for = [&](const std::vector<std::string>& users) {
        std::map<std::string, std::vector<std::size_t>> keys_by_user;
        for (const auto& user : users) {
            std::vector<std::size_t> keys;
            bool first = true;
            for (const auto& modality : modalities) {
                const auto& idx = indices[modality];
                auto it = idx.find(user);
                std::set<std::size_t> present;
                if (it != idx.end())
                    for (const auto& [k, i] : it->second) present.insert(k);
                if (first) {
                    keys.assign(present.begin(), present.end());
                    first = false;
                } else {
                    std::vector<std::size_t> merged;
                    std::set_intersection(keys.begin(), keys.end(), present.begin(),
                                          present.end(), std::back_inserter(merged));
                    keys = std::move(merged);
                }
            }
            if (!keys.empty()) keys_by_user[user] = std::move(keys);
        }
        return keys_by_user;
    };

    const auto test_keys = common_keys_for(fold.test_users);
    const auto train_keys = common_keys_for(fold.train_users);
    if (test_keys.size() < 2)
        throw DataError("evaluate_fold: fewer than 2 test users with segments");
    if (train_keys.size() < 2)
        throw DataError("evaluate_fold: fewer than 2 training users with segments");

    auto make_roster = [&](const std::map<std::string, std::vector<std::size_t>>& keys,
                           const std::string& purpose) {
        std::map<std::string, std::size_t> counts;
        for (const auto& [user, ks] : keys) counts[user] = ks.size();
        return dataset::make_index_pairs(
            counts, options.max_genuine_per_user_eval,
            dataset::derive_seed(config.rng_seed, purpose, fold_tag(fold)));
    };
    const auto test_roster = make_roster(test_keys, "eval-pairs");
    const auto train_roster = make_roster(train_keys, "norm-pairs");

    // Leakage audit: the evaluated roster must touch test users only.
    std::set<std::string> train_set(fold.train_users.begin(), fold.train_users.end());
    for (const auto& p : test_roster)
        if (train_set.count(p.user_a) || train_set.count(p.user_b))
            throw DataError("evaluate_fold: training user leaked into test roster");

    FoldEvaluation eval;
    eval.fold_index = fold.fold_index;
    eval.window = config.window;
    for (const auto& [user, ks] : test_keys) eval.evaluated_users.push_back(user);

    // Score one roster against one modality, via either the trained model's
    // embedding distance or the raw-feature Euclidean distance.
    auto score_roster = [&](const std::vector<IndexPair>& roster,
                            const std::map<std::string, std::vector<std::size_t>>& keys,
                            const std::string& modality, bool use_model) {
        const auto& segs = segments[modality];
        const auto& idx = indices[modality];
        const neuralnet::SiameseModel* model = nullptr;
        std::map<std::pair<std::string, std::size_t>, Vector> embeddings;
        if (use_model) {
            auto it = models.by_modality.find(modality);
            if (it == models.by_modality.end())
                throw DataError("evaluate_fold: missing model for " + modality);
            model = &it->second;
            for (const auto& [user, ks] : keys)
                for (std::size_t k : ks)
                    embeddings[{user, k}] =
                        neuralnet::embed(*model, segs.at(user)[idx.at(user).at(k)]
                                                     .features);
        }

        ScoreSet scores;
        scores.label = modality;
        for (const auto& p : roster) {
            const std::size_t key_a = keys.at(p.user_a)[p.index_a];
            const std::size_t key_b = keys.at(p.user_b)[p.index_b];
            double d;
            if (use_model) {
                const auto& ea = embeddings.at({p.user_a, key_a});
                const auto& eb = embeddings.at({p.user_b, key_b});
                double acc = 0.0;
                for (std::size_t k = 0; k < ea.size(); ++k) {
                    const double diff = ea[k] - eb[k];
                    acc += diff * diff;
                }
                d = std::sqrt(acc);
            } else {
                d = segment_distance(segs.at(p.user_a)[idx.at(p.user_a).at(key_a)],
                                     segs.at(p.user_b)[idx.at(p.user_b).at(key_b)]);
            }
            (p.label == 0 ? scores.genuine : scores.impostor).push_back(-d);
        }
        return scores;
    };

    std::map<std::string, ScoreSet> normalized;
    for (const auto& modality : modalities) {
        ModalityResult result;
        result.modality = modality;

        const auto test_scores = score_roster(test_roster, test_keys, modality, true);
        const auto train_scores = score_roster(train_roster, train_keys, modality, true);
        result.model_roc = evaluation::roc_summary(test_scores);

        // Baseline: thresholds from training-roster raw distances, applied to
        // the test roster.
        const auto base_train = score_roster(train_roster, train_keys, modality, false);
        const auto base_test = score_roster(test_roster, test_keys, modality, false);
        result.baseline_roc.threshold_1pct =
            evaluation::tar_at_far(base_train, 0.01).threshold;
        result.baseline_roc.threshold_0p1pct =
            evaluation::tar_at_far(base_train, 0.001).threshold;
        result.baseline_roc.tar_at_far_1pct = evaluation::tar_at_threshold(
            base_test.genuine, result.baseline_roc.threshold_1pct);
        result.baseline_roc.tar_at_far_0p1pct = evaluation::tar_at_threshold(
            base_test.genuine, result.baseline_roc.threshold_0p1pct);
        result.baseline_roc.eer_pct = evaluation::eer_percent(base_test);

        const auto stats = evaluation::score_range(train_scores);
        if (stats.degenerate) {
            result.excluded_from_fusion = true;
        } else {
            normalized[modality] = evaluation::normalize_scores(test_scores, stats);
        }
        eval.per_modality.push_back(std::move(result));
    }

    if (normalized.size() >= 1) {
        std::vector<ScoreSet> all_sets;
        for (const auto& [name, s] : normalized) all_sets.push_back(s);
        eval.fused_all = evaluation::roc_summary(evaluation::fuse_sum(all_sets));
    }
    if (options.fusion) eval.subsets = evaluation::enumerate_subsets(normalized);
    if (options.contributions && eval.fused_all && normalized.size() >= 2) {
        const double tar_all = eval.fused_all->tar_at_far_0p1pct;
        for (const auto& [name, s] : normalized) {
            std::vector<ScoreSet> without;
            for (const auto& [other, os] : normalized)
                if (other != name) without.push_back(os);
            const auto roc = evaluation::roc_summary(evaluation::fuse_sum(without));
            eval.contributions[name] =
                evaluation::contribution(tar_all, roc.tar_at_far_0p1pct);
        }
    }
    return eval;
}

std::vector<SweepEntry> temporal_sweep(const dataset::Corpus& corpus,
                                       const std::vector<std::string>& modalities,
                                       const dataset::FoldSpec& fold,
                                       const training::TrainConfig& base_config,
                                       const std::vector<std::size_t>& windows) {
    std::vector<SweepEntry> entries;
    for (std::size_t window : windows) {
        SweepEntry entry;
        entry.window = window;
        training::TrainConfig config = base_config;
        config.window = window;
        try {
            const auto models = train_fold(corpus, modalities, fold, config);
            entry.detail =
                evaluate_fold(corpus, models, modalities, fold, config, EvalOptions{});
            if (!entry.detail.fused_all)
                throw DataError("temporal_sweep: no fusable modality at T=" +
                                std::to_string(window));
            entry.fused_tar_0p1pct = entry.detail.fused_all->tar_at_far_0p1pct;
        } catch (const DataError&) {
            entry.skipped = true;
        }
        entries.push_back(std::move(entry));
    }
    return entries;
}

std::string structured_report(const std::vector<FoldEvaluation>& folds,
                              const std::vector<SweepEntry>& sweep,
                              const std::string& manifest_hash) {
    std::ostringstream out;
    out << "# manifest " << manifest_hash << '\n';
    out << "# label\tfold\twindow\ttar_at_1pct_far\ttar_at_0p1pct_far\teer\n";
    for (const auto& fe : folds) {
        for (const auto& m : fe.per_modality) {
            emit_line(out, m.modality, fe.fold_index, fe.window, m.model_roc);
            emit_line(out, "baseline:" + m.modality, fe.fold_index, fe.window,
                      m.baseline_roc);
        }
        if (fe.fused_all)
            emit_line(out, "fuse:all", fe.fold_index, fe.window, *fe.fused_all);
        for (const auto& s : fe.subsets)
            emit_line(out, subset_label(s.modalities), fe.fold_index, fe.window, s.roc);
        for (const auto& [name, c] : fe.contributions) {
            out << "contribution:" << name << '\t' << fe.fold_index << '\t'
                << fe.window << '\t';
            if (c)
                out << *c << "\t-\t-\n";
            else
                out << "n/a\t-\t-\n";
        }
    }
    for (const auto& s : sweep) {
        if (s.skipped) {
            out << "sweep:T=" << s.window << "\t-\t" << s.window
                << "\tskipped\tskipped\tskipped\n";
        } else if (s.detail.fused_all) {
            emit_line(out, "sweep:T=" + std::to_string(s.window),
                      s.detail.fold_index, s.window, *s.detail.fused_all);
        }
    }
    return out.str();
}

std::string human_report(const std::vector<FoldEvaluation>& folds,
                         const std::vector<SweepEntry>& sweep,
                         const std::string& manifest_hash) {
    std::ostringstream out;
    out << "manifest: " << manifest_hash << "\n\n";
    for (const auto& fe : folds) {
        out << "fold " << fe.fold_index << ", T=" << fe.window << "\n";
        out << "  modality                TAR@1%    TAR@0.1%  EER       (baseline TAR@1% / TAR@0.1%)\n";
        for (const auto& m : fe.per_modality) {
            char buf[200];
            std::snprintf(buf, sizeof(buf),
                          "  %-22s  %-8s  %-8s  %-8s  (%s / %s)%s",
                          m.modality.c_str(), format_pct(m.model_roc.tar_at_far_1pct).c_str(),
                          format_pct(m.model_roc.tar_at_far_0p1pct).c_str(),
                          format_pct(m.model_roc.eer_pct).c_str(),
                          format_pct(m.baseline_roc.tar_at_far_1pct).c_str(),
                          format_pct(m.baseline_roc.tar_at_far_0p1pct).c_str(),
                          m.excluded_from_fusion ? "  [excluded from fusion]" : "");
            out << buf << '\n';
        }
        if (fe.fused_all)
            out << "  fused (all)             TAR@1% " << format_pct(fe.fused_all->tar_at_far_1pct)
                << "  TAR@0.1% " << format_pct(fe.fused_all->tar_at_far_0p1pct)
                << "  EER " << format_pct(fe.fused_all->eer_pct) << "\n";
        if (!fe.subsets.empty()) {
            const auto averages = evaluation::per_size_average(fe.subsets);
            out << "  per-size mean TAR@0.1%:";
            for (const auto& [size, avg] : averages)
                out << "  |S|=" << size << ": " << format_pct(avg);
            out << "\n";
        }
        for (const auto& [name, c] : fe.contributions) {
            out << "  contribution " << name << ": ";
            if (c) {
                char buf[32];
                std::snprintf(buf, sizeof(buf), "%.4f", *c);
                out << buf << "\n";
            } else {
                out << "n/a (TAR without is 100%)\n";
            }
        }
        out << "\n";
    }
    if (!sweep.empty()) {
        out << "temporal sweep (fused TAR@0.1% FAR)\n";
        for (const auto& s : sweep) {
            out << "  T=" << s.window << ": ";
            if (s.skipped)
                out << "skipped (insufficient data)\n";
            else
                out << format_pct(s.fused_tar_0p1pct) << "\n";
        }
    }
    return out.str();
}

}  // namespace passauth::pipeline
