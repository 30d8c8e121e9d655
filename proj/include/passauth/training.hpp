#ifndef PASSAUTH_TRAINING_HPP
#define PASSAUTH_TRAINING_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "passauth/dataset.hpp"
#include "passauth/lstm.hpp"

namespace passauth::training {

struct TrainConfig {
    std::size_t window = 20;         // T, seconds
    std::size_t window_shift = 1;    // T_shift
    std::size_t embedding_width = 16;
    double margin = 1.0;
    double learning_rate = 0.05;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::size_t batch_size = 256;
    std::size_t epochs = 50;
    std::uint64_t rng_seed = 0;
    std::size_t max_genuine_per_user = 2000;
    double grad_clip = 0.0;  // global-norm clip, 0 disables

    void validate() const;
};

// Flat key=value text; unknown keys are fatal.
TrainConfig parse_train_config(const std::string& text);
TrainConfig load_train_config(const std::string& path);
std::string serialize_train_config(const TrainConfig& config);

struct TrainReport {
    std::vector<double> epoch_losses;
    std::size_t total_batches = 0;
    std::string checkpoint_path;
    TrainConfig config;
    double seconds = 0.0;
};

struct TrainResult {
    neuralnet::SiameseModel model;
    TrainReport report;
};

// One modality, one model: shuffle per epoch, mean contrastive loss per
// batch, Adam updates. Deterministic for fixed (pairs, config).
TrainResult train_modality(const std::vector<dataset::SegmentPair>& pairs,
                           const TrainConfig& config);

}  // namespace passauth::training

#endif
