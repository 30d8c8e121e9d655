#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "passauth/errors.hpp"
#include "passauth/pipeline.hpp"

using namespace passauth;
using namespace passauth::pipeline;

namespace {

dataset::Corpus small_corpus(const std::vector<std::string>& modalities,
                             std::uint64_t seed = 21) {
    dataset::SyntheticConfig cfg;
    cfg.n_users = 4;
    cfg.days = 1;
    cfg.samples_per_day = 260;
    cfg.seed = seed;
    cfg.modalities = modalities;
    return dataset::generate_synthetic(cfg);
}

training::TrainConfig quick_config() {
    training::TrainConfig cfg;
    cfg.window = 5;
    cfg.window_shift = 2;
    cfg.embedding_width = 6;
    cfg.epochs = 4;
    cfg.batch_size = 64;
    cfg.max_genuine_per_user = 60;
    cfg.rng_seed = 13;
    return cfg;
}

dataset::FoldSpec two_way_fold(const dataset::Corpus& corpus) {
    return dataset::split_folds(dataset::corpus_users(corpus), 2, 3).front();
}

bool pct_ok(double v) { return std::isfinite(v) && v >= 0.0 && v <= 100.0; }

}  // namespace

TEST_CASE("feature segments align across modalities via start timestamps") {
    const std::vector<std::string> mods = {"keystroke", "gps", "accelerometer"};
    const auto corpus = small_corpus(mods);
    std::map<std::string, SegmentsByUser> by_modality;
    for (const auto& m : mods) by_modality[m] = build_feature_segments(corpus, m, 5, 2);

    for (const auto& m : mods) REQUIRE(by_modality[m].count("u0") == 1);

    // the gap timeline is shared per user, so the window-start sets coincide
    auto starts = [&](const std::string& m, const std::string& user) {
        std::set<std::size_t> s;
        for (const auto& seg : by_modality[m].at(user)) s.insert(seg.start_index);
        return s;
    };
    const auto base = starts("keystroke", "u0");
    CHECK_FALSE(base.empty());
    CHECK(starts("gps", "u0") == base);
    CHECK(starts("accelerometer", "u0") == base);

    // feature widths: pass-through for the point modalities, doubled for
    // movement sensors
    CHECK(by_modality["keystroke"].at("u0").front().features.cols() == 3);
    CHECK(by_modality["gps"].at("u0").front().features.cols() == 2);
    CHECK(by_modality["accelerometer"].at("u0").front().features.cols() == 6);
    for (const auto& seg : by_modality["accelerometer"].at("u0"))
        CHECK(seg.features.rows() == 5);
}

TEST_CASE("gps features are centered per stream") {
    const auto corpus = small_corpus({"gps"});
    const auto segments = build_feature_segments(corpus, "gps", 5, 1);
    for (const auto& [user, segs] : segments) {
        double mean = 0.0;
        std::size_t count = 0;
        for (const auto& seg : segs) {
            for (double v : seg.features.data()) mean += v;
            count += seg.features.data().size();
        }
        mean /= static_cast<double>(count);
        // raw coordinates are tens of degrees; centering leaves only the loop
        CHECK(std::abs(mean) < 2.0);
    }
}

TEST_CASE("fold training and evaluation run end to end") {
    const std::vector<std::string> mods = {"keystroke", "accelerometer"};
    const auto corpus = small_corpus(mods);
    const auto fold = two_way_fold(corpus);
    const auto cfg = quick_config();

    const auto models = train_fold(corpus, mods, fold, cfg);
    REQUIRE(models.by_modality.size() == 2);
    for (const auto& m : mods) {
        CHECK(models.by_modality.at(m).feature_width() > 0);
        CHECK(models.by_modality.at(m).embedding_width() == 6);
        CHECK_FALSE(models.reports.at(m).epoch_losses.empty());
    }

    EvalOptions opts;
    opts.fusion = true;
    opts.contributions = true;
    opts.max_genuine_per_user_eval = 40;
    const auto eval = evaluate_fold(corpus, models, mods, fold, cfg, opts);

    CHECK(eval.window == cfg.window);
    REQUIRE(eval.per_modality.size() == 2);
    for (const auto& m : eval.per_modality) {
        CHECK(pct_ok(m.model_roc.tar_at_far_1pct));
        CHECK(pct_ok(m.model_roc.tar_at_far_0p1pct));
        CHECK(pct_ok(m.model_roc.eer_pct));
        CHECK(pct_ok(m.baseline_roc.tar_at_far_1pct));
        CHECK(pct_ok(m.baseline_roc.eer_pct));
    }
    REQUIRE(eval.fused_all.has_value());
    CHECK(pct_ok(eval.fused_all->tar_at_far_0p1pct));
    CHECK(eval.subsets.size() == 3);  // {a}, {b}, {a,b}
    CHECK(eval.contributions.size() == 2);

    // no-leakage audit: every evaluated user is a held-out test user
    const std::set<std::string> test_users(fold.test_users.begin(),
                                           fold.test_users.end());
    CHECK_FALSE(eval.evaluated_users.empty());
    for (const auto& u : eval.evaluated_users) {
        CHECK(test_users.count(u) == 1);
        CHECK(std::find(fold.train_users.begin(), fold.train_users.end(), u) ==
              fold.train_users.end());
    }
}

TEST_CASE("evaluation is deterministic for a fixed seed") {
    const std::vector<std::string> mods = {"keystroke"};
    const auto corpus = small_corpus(mods);
    const auto fold = two_way_fold(corpus);
    const auto cfg = quick_config();
    const auto models = train_fold(corpus, mods, fold, cfg);

    const auto a = evaluate_fold(corpus, models, mods, fold, cfg, EvalOptions{});
    const auto b = evaluate_fold(corpus, models, mods, fold, cfg, EvalOptions{});
    CHECK(a.per_modality[0].model_roc.tar_at_far_1pct ==
          b.per_modality[0].model_roc.tar_at_far_1pct);
    CHECK(a.per_modality[0].model_roc.eer_pct == b.per_modality[0].model_roc.eer_pct);
    REQUIRE(a.fused_all.has_value());
    REQUIRE(b.fused_all.has_value());
    CHECK(a.fused_all->tar_at_far_0p1pct == b.fused_all->tar_at_far_0p1pct);
}

TEST_CASE("temporal sweep marks infeasible window sizes as skipped") {
    const std::vector<std::string> mods = {"keystroke"};
    const auto corpus = small_corpus(mods);
    const auto fold = two_way_fold(corpus);
    const auto entries = temporal_sweep(corpus, mods, fold, quick_config(),
                                        {5, 100000});
    REQUIRE(entries.size() == 2);
    CHECK_FALSE(entries[0].skipped);
    CHECK(pct_ok(entries[0].fused_tar_0p1pct));
    CHECK(entries[1].skipped);
}

TEST_CASE("reports carry the manifest hash and one metric tuple per line") {
    const std::vector<std::string> mods = {"keystroke", "gps"};
    const auto corpus = small_corpus(mods);
    const auto fold = two_way_fold(corpus);
    const auto cfg = quick_config();
    const auto models = train_fold(corpus, mods, fold, cfg);
    EvalOptions opts;
    opts.contributions = true;
    const auto eval = evaluate_fold(corpus, models, mods, fold, cfg, opts);

    const auto text = structured_report({eval}, {}, "deadbeef");
    std::istringstream lines(text);
    std::string line;
    std::size_t data_lines = 0;
    bool saw_hash = false;
    while (std::getline(lines, line)) {
        if (line.rfind("# manifest deadbeef", 0) == 0) saw_hash = true;
        if (line.empty() || line[0] == '#') continue;
        CHECK(std::count(line.begin(), line.end(), '\t') == 5);
        ++data_lines;
    }
    CHECK(saw_hash);
    // 2 modalities x (model + baseline) + fused + 2 contributions
    CHECK(data_lines == 7);
    CHECK(text.find("baseline:keystroke") != std::string::npos);
    CHECK(text.find("fuse:all") != std::string::npos);

    const auto pretty = human_report({eval}, {}, "deadbeef");
    CHECK(pretty.find("manifest: deadbeef") != std::string::npos);
    CHECK(pretty.find("fold 0") != std::string::npos);
    CHECK(pretty.find("keystroke") != std::string::npos);
}
