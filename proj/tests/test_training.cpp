#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <random>

#include "passauth/checkpoint.hpp"
#include "passauth/errors.hpp"
#include "passauth/training.hpp"

using namespace passauth;
using namespace passauth::training;

namespace {

signal::FeatureSegment make_segment(const std::string& user, std::size_t index,
                                    double level, double jitter_seed = 0.0) {
    signal::FeatureSegment seg;
    seg.user_id = user;
    seg.modality = "keystroke";
    seg.start_index = index;
    seg.features = Matrix(4, 2);
    for (std::size_t r = 0; r < 4; ++r)
        for (std::size_t c = 0; c < 2; ++c)
            seg.features(r, c) =
                level + 0.01 * std::sin(jitter_seed + double(r * 2 + c));
    return seg;
}

// Two users at well separated constant feature levels; genuine pairs within a
// level, one impostor pair across.
std::vector<dataset::SegmentPair> separable_pairs() {
    std::vector<dataset::SegmentPair> pairs;
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = i + 1; j < 3; ++j) {
            pairs.push_back({make_segment("ua", i, -1.0, double(i)),
                             make_segment("ua", j, -1.0, double(j)), 0});
            pairs.push_back({make_segment("ub", i, 1.0, double(i)),
                             make_segment("ub", j, 1.0, double(j)), 0});
            pairs.push_back({make_segment("ua", i, -1.0, double(i)),
                             make_segment("ub", j, 1.0, double(j)), 1});
        }
    return pairs;
}

TrainConfig tiny_config() {
    TrainConfig cfg;
    cfg.window = 4;
    cfg.embedding_width = 4;
    cfg.epochs = 30;
    cfg.batch_size = 64;
    cfg.rng_seed = 3;
    return cfg;
}

}  // namespace

TEST_CASE("config parser: defaults, comments, round trip") {
    const TrainConfig defaults = parse_train_config("");
    CHECK(defaults.window == 20);
    CHECK(defaults.window_shift == 1);
    CHECK(defaults.embedding_width == 16);
    CHECK(defaults.margin == 1.0);
    CHECK(defaults.learning_rate == 0.05);
    CHECK(defaults.beta1 == 0.9);
    CHECK(defaults.beta2 == 0.999);
    CHECK(defaults.epsilon == 1e-8);

    const auto cfg = parse_train_config(
        "# comment\nwindow=10\nembedding_width=8\nlearning_rate=0.01\n");
    CHECK(cfg.window == 10);
    CHECK(cfg.embedding_width == 8);
    CHECK(cfg.learning_rate == 0.01);

    const auto round = parse_train_config(serialize_train_config(cfg));
    CHECK(round.window == cfg.window);
    CHECK(round.embedding_width == cfg.embedding_width);
    CHECK(round.learning_rate == cfg.learning_rate);
    CHECK(round.rng_seed == cfg.rng_seed);
    CHECK(round.batch_size == cfg.batch_size);
}

TEST_CASE("config parser: unknown keys and bad values are fatal") {
    CHECK_THROWS_WITH_AS(parse_train_config("widnow=10\n"),
                         doctest::Contains("unknown config key"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_train_config("margin=fast\n"),
                         doctest::Contains("line 1"), ConfigError);
    CHECK_THROWS_AS(parse_train_config("just some text\n"), ConfigError);
    CHECK_THROWS_AS(parse_train_config("margin=-1\n"), ConfigError);
    CHECK_THROWS_AS(parse_train_config("epochs=0\n"), ConfigError);
}

TEST_CASE("a batch size covering all pairs gives one step per epoch") {
    auto cfg = tiny_config();
    cfg.epochs = 7;
    cfg.batch_size = 1000;
    const auto result = train_modality(separable_pairs(), cfg);
    CHECK(result.report.total_batches == 7);
    CHECK(result.report.epoch_losses.size() == 7);
}

TEST_CASE("training is deterministic for a fixed seed") {
    const auto pairs = separable_pairs();
    auto cfg = tiny_config();
    const auto a = train_modality(pairs, cfg);
    const auto b = train_modality(pairs, cfg);
    CHECK(a.report.epoch_losses == b.report.epoch_losses);

    std::vector<double> fa(neuralnet::parameter_count(a.model));
    std::vector<double> fb(fa.size());
    neuralnet::flatten_params(a.model, fa);
    neuralnet::flatten_params(b.model, fb);
    CHECK(fa == fb);

    cfg.rng_seed = 4;
    const auto c = train_modality(pairs, cfg);
    std::vector<double> fc(fa.size());
    neuralnet::flatten_params(c.model, fc);
    CHECK(fa != fc);
}

TEST_CASE("loss decreases on a separable toy problem") {
    const auto result = train_modality(separable_pairs(), tiny_config());
    REQUIRE(result.report.epoch_losses.size() == 30);
    CHECK(result.report.epoch_losses.back() < result.report.epoch_losses.front());
    for (double loss : result.report.epoch_losses) CHECK(std::isfinite(loss));
}

TEST_CASE("a noiseless separable set trains to near-zero loss") {
    auto cfg = tiny_config();
    cfg.epochs = 200;
    const auto result = train_modality(separable_pairs(), cfg);
    CHECK(result.report.epoch_losses.back() <
          0.02 * result.report.epoch_losses.front());
}

TEST_CASE("a trained model survives a checkpoint round trip") {
    const auto result = train_modality(separable_pairs(), tiny_config());
    const auto path =
        (std::filesystem::temp_directory_path() / "pa_train_ck.bin").string();
    neuralnet::save_checkpoint(result.model, path);
    const auto loaded = neuralnet::load_checkpoint(path);

    const auto seg = make_segment("ua", 0, -1.0);
    CHECK(neuralnet::embed(result.model, seg.features) ==
          neuralnet::embed(loaded, seg.features));
    std::filesystem::remove(path);
}

TEST_CASE("inconsistent pair sets are rejected") {
    auto pairs = separable_pairs();
    CHECK_THROWS_AS(
        train_modality(std::vector<dataset::SegmentPair>{}, tiny_config()),
        DataError);

    auto mixed = pairs;
    mixed[1].a.modality = "gps";
    CHECK_THROWS_AS(train_modality(mixed, tiny_config()), DataError);

    auto ragged = pairs;
    ragged[2].b.features = Matrix(4, 3);
    CHECK_THROWS_AS(train_modality(ragged, tiny_config()), ShapeError);
}

TEST_CASE("non-finite losses abort with the batch index") {
    auto pairs = separable_pairs();
    pairs[0].a.features(1, 1) = std::nan("");
    CHECK_THROWS_WITH_AS(train_modality(pairs, tiny_config()),
                         doctest::Contains("batch"), NumericError);
}
