#ifndef PASSAUTH_EVALUATION_HPP
#define PASSAUTH_EVALUATION_HPP

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "passauth/dataset.hpp"
#include "passauth/lstm.hpp"

namespace passauth::evaluation {

// Similarity scores (higher = more genuine) for one modality or fused subset.
// Orderings are stable so per-pair fusion across modalities is well defined.
struct ScoreSet {
    std::string label;
    std::vector<double> genuine;
    std::vector<double> impostor;
};

struct RocSummary {
    double tar_at_far_1pct = 0.0;    // percentage
    double tar_at_far_0p1pct = 0.0;  // percentage
    double eer_pct = 0.0;
    double threshold_1pct = 0.0;
    double threshold_0p1pct = 0.0;
    bool degenerate = false;
};

// d_theta per pair, similarity = -d. Label 0 pairs populate genuine scores.
ScoreSet score_pairs(const neuralnet::SiameseModel& model,
                     std::span<const dataset::SegmentPair> pairs,
                     const std::string& label);

struct TarResult {
    double tar_pct = 0.0;
    double threshold = 0.0;
};

// Smallest threshold tau with (fraction of impostor scores > tau) <= target;
// TAR = % of genuine scores strictly above tau.
TarResult tar_at_far(const ScoreSet& scores, double far_target);

// TAR of a score set at a fixed, externally supplied threshold.
double tar_at_threshold(std::span<const double> genuine, double threshold);
double far_at_threshold(std::span<const double> impostor, double threshold);

// Equal error rate (%), linearly interpolated at the FAR/FRR crossing.
double eer_percent(const ScoreSet& scores);

RocSummary roc_summary(const ScoreSet& scores);

// Raw-feature Euclidean distance classifier: thresholds fixed on training
// pairs at the FAR targets, applied to test pairs.
RocSummary euclidean_baseline(std::span<const dataset::SegmentPair> train_pairs,
                              std::span<const dataset::SegmentPair> test_pairs);

ScoreSet euclidean_scores(std::span<const dataset::SegmentPair> pairs,
                          const std::string& label);

struct NormStats {
    double min = 0.0;
    double max = 0.0;
    bool degenerate = false;  // min == max, modality excluded from fusion
};

NormStats score_range(const ScoreSet& training_scores);

// Min-max normalization with training statistics; outputs clamped to [0,1].
ScoreSet normalize_scores(const ScoreSet& scores, const NormStats& reference);

// Per-pair sum of aligned normalized score sets.
ScoreSet fuse_sum(std::span<const ScoreSet> sets);

struct SubsetResult {
    std::vector<std::string> modalities;
    RocSummary roc;
};

// All subsets of size >= 2 (247 for eight modalities) plus singletons for
// context, in (size, lexicographic) order.
std::vector<SubsetResult> enumerate_subsets(
    const std::map<std::string, ScoreSet>& normalized_sets);

// Mean TAR@0.1%FAR per subset size over multi-modality subsets.
std::map<std::size_t, double> per_size_average(std::span<const SubsetResult> results);

// (tar_all - tar_without) / (100 - tar_without); empty when tar_without = 100.
std::optional<double> contribution(double tar_all, double tar_without);

}  // namespace passauth::evaluation

#endif
