#ifndef PASSAUTH_DATASET_HPP
#define PASSAUTH_DATASET_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "passauth/linalg.hpp"
#include "passauth/signal.hpp"

namespace passauth::dataset {

struct ModalityDescriptor {
    std::string name;
    std::size_t channel_count = 0;
    bool is_movement = false;
    double nominal_rate_hz = 1.0;
};

// The eight supported modalities, fixed order: keystroke, gps, accelerometer,
// gyroscope, magnetometer, linear_accelerometer, gravity, rotation.
const std::vector<ModalityDescriptor>& all_modalities();
const ModalityDescriptor& descriptor_for(const std::string& name);
bool is_known_modality(const std::string& name);

struct SensorRecord {
    std::string user_id;
    std::string modality;
    std::int64_t timestamp = 0;  // seconds since epoch
    Vector channels;
};

using RecordStream = std::vector<SensorRecord>;

// (user_id, modality) -> ordered records
using StreamKey = std::pair<std::string, std::string>;
using Corpus = std::map<StreamKey, RecordStream>;

// Per-user generative parameters for one modality of the synthetic corpus.
struct UserModalityProfile {
    Vector base_offsets;             // per channel
    Vector oscillation_frequencies;  // cycles/sample, in (0, 0.5)
    Vector oscillation_amplitudes;   // per channel
    double noise_scale = 0.01;
    double drift_scale = 0.2;
    double gap_probability = 0.02;
};

struct SyntheticConfig {
    std::size_t n_users = 8;
    std::size_t days = 2;
    std::size_t samples_per_day = 600;  // active seconds emitted per day
    double noise_scale = 0.01;
    double drift_scale = 0.2;
    double gap_probability = 0.02;
    std::uint64_t seed = 0;
    std::vector<std::string> modalities;  // empty = all eight
};

// Deterministic per (seed, user, modality). User identity lives in channel
// offsets, oscillation frequencies/amplitudes; a shared slow drift and
// Gaussian noise are uninformative nuisances. Gap pattern is per user and
// shared across modalities so windows align for fusion.
Corpus generate_synthetic(const SyntheticConfig& config);

UserModalityProfile profile_for(const SyntheticConfig& config,
                                std::size_t user_index, const std::string& modality);

// Line format: user_id<TAB>modality<TAB>timestamp<TAB>v1,v2,...
void save_records(const RecordStream& stream, const std::string& path);
RecordStream load_records(const std::string& path);

// Directory layout: one <user>__<modality>.tsv per stream plus manifest.json.
void save_corpus(const Corpus& corpus, const std::string& dir);
Corpus load_corpus(const std::string& dir);

std::vector<std::string> corpus_users(const Corpus& corpus);

// Collapses records sharing a timestamp to their per-channel mean (puts
// event-driven keystrokes on the 1 Hz grid).
RecordStream aggregate_to_grid(const RecordStream& stream);

// Splits at chronological gaps > 1 second; each run is contiguous at 1 Hz.
std::vector<RecordStream> split_runs(const RecordStream& stream);

struct FoldSpec {
    std::size_t fold_index = 0;
    std::vector<std::string> train_users;
    std::vector<std::string> test_users;
};

// Shuffle once, chunk into k near-equal disjoint test groups.
std::vector<FoldSpec> split_folds(std::vector<std::string> users, std::size_t k,
                                  std::uint64_t seed);

struct SegmentPair {
    signal::FeatureSegment a;
    signal::FeatureSegment b;
    int label = 0;  // 0 same user, 1 different users
};

// Pairing over abstract per-user element indices; reused for both segment
// pairs and the cross-modality roster.
struct IndexPair {
    std::string user_a;
    std::size_t index_a = 0;
    std::string user_b;
    std::size_t index_b = 0;
    int label = 0;
};

std::vector<IndexPair> make_index_pairs(
    const std::map<std::string, std::size_t>& count_by_user,
    std::size_t max_genuine_per_user, std::uint64_t seed);

std::vector<SegmentPair> make_pairs(
    const std::map<std::string, std::vector<signal::FeatureSegment>>& by_user,
    std::size_t max_genuine_per_user, std::uint64_t seed);

// Sub-seed derivation so per-stream generation is order independent.
std::uint64_t derive_seed(std::uint64_t base, const std::string& a,
                          const std::string& b = {});

}  // namespace passauth::dataset

#endif
