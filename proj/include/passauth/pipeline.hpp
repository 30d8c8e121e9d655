#ifndef PASSAUTH_PIPELINE_HPP
#define PASSAUTH_PIPELINE_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "passauth/dataset.hpp"
#include "passauth/evaluation.hpp"
#include "passauth/training.hpp"

namespace passauth::pipeline {

using SegmentsByUser =
    std::map<std::string, std::vector<signal::FeatureSegment>>;

// Raw streams -> feature segments: 1 Hz aggregation, GPS per-stream mean
// centering, gap splitting, windowing, time+frequency assembly. Segment
// start_index is the absolute start timestamp so windows align across
// modalities.
SegmentsByUser build_feature_segments(const dataset::Corpus& corpus,
                                      const std::string& modality,
                                      std::size_t window, std::size_t shift);

struct TrainedModels {
    std::map<std::string, neuralnet::SiameseModel> by_modality;
    std::map<std::string, training::TrainReport> reports;
};

// One model per modality, trained on the fold's training users only.
TrainedModels train_fold(const dataset::Corpus& corpus,
                         const std::vector<std::string>& modalities,
                         const dataset::FoldSpec& fold,
                         const training::TrainConfig& config);

struct EvalOptions {
    bool fusion = false;        // all 247 multi-modality subsets
    bool contributions = false; // leave-one-out contribution per modality
    std::size_t max_genuine_per_user_eval = 150;
};

struct ModalityResult {
    std::string modality;
    evaluation::RocSummary model_roc;
    evaluation::RocSummary baseline_roc;
    bool excluded_from_fusion = false;  // degenerate normalization reference
};

struct FoldEvaluation {
    std::size_t fold_index = 0;
    std::size_t window = 0;
    std::vector<ModalityResult> per_modality;
    std::optional<evaluation::RocSummary> fused_all;
    std::vector<evaluation::SubsetResult> subsets;  // when fusion requested
    std::map<std::string, std::optional<double>> contributions;
    std::vector<std::string> evaluated_users;  // audit trail, test users only
};

FoldEvaluation evaluate_fold(const dataset::Corpus& corpus,
                             const TrainedModels& models,
                             const std::vector<std::string>& modalities,
                             const dataset::FoldSpec& fold,
                             const training::TrainConfig& config,
                             const EvalOptions& options);

struct SweepEntry {
    std::size_t window = 0;
    bool skipped = false;
    double fused_tar_0p1pct = 0.0;
    FoldEvaluation detail;
};

// Full retrain + rescore per window size.
std::vector<SweepEntry> temporal_sweep(const dataset::Corpus& corpus,
                                       const std::vector<std::string>& modalities,
                                       const dataset::FoldSpec& fold,
                                       const training::TrainConfig& base_config,
                                       const std::vector<std::size_t>& windows);

// One metric tuple per line: label, fold, window, TAR@1%, TAR@0.1%, EER.
std::string structured_report(const std::vector<FoldEvaluation>& folds,
                              const std::vector<SweepEntry>& sweep,
                              const std::string& manifest_hash);
std::string human_report(const std::vector<FoldEvaluation>& folds,
                         const std::vector<SweepEntry>& sweep,
                         const std::string& manifest_hash);

}  // namespace passauth::pipeline

#endif
