// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Self-contained oracles (naive DFT, finite differences, brute-force
// threshold sweeps) are reimplemented here rather than shared with the
// library under test.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "passauth/checkpoint.hpp"
#include "passauth/dataset.hpp"
#include "passauth/evaluation.hpp"
#include "passauth/pipeline.hpp"
#include "passauth/signal.hpp"
#include "passauth/training.hpp"

using namespace passauth;
namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------- oracles --

std::vector<double> oracle_dft(const std::vector<double>& x) {
    const std::size_t n = x.size();
    std::vector<double> mag(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::complex<double> acc{0.0, 0.0};
        for (std::size_t t = 0; t < n; ++t) {
            const double a =
                -2.0 * std::numbers::pi * double(k) * double(t) / double(n);
            acc += x[t] * std::complex<double>(std::cos(a), std::sin(a));
        }
        mag[k] = std::abs(acc);
    }
    return mag;
}

double oracle_tar(const evaluation::ScoreSet& s, double target,
                  double* tau_out) {
    std::set<double> candidates(s.genuine.begin(), s.genuine.end());
    candidates.insert(s.impostor.begin(), s.impostor.end());
    for (double tau : candidates) {
        std::size_t fa = 0;
        for (double v : s.impostor)
            if (v > tau) ++fa;
        if (double(fa) / double(s.impostor.size()) <= target) {
            std::size_t hits = 0;
            for (double v : s.genuine)
                if (v > tau) ++hits;
            *tau_out = tau;
            return 100.0 * (double(hits) / double(s.genuine.size()));
        }
    }
    *tau_out = *candidates.rbegin();
    return 0.0;
}

double oracle_eer(const evaluation::ScoreSet& s) {
    std::set<double> pooled(s.genuine.begin(), s.genuine.end());
    pooled.insert(s.impostor.begin(), s.impostor.end());
    std::vector<double> taus(pooled.begin(), pooled.end());
    taus.insert(taus.begin(), taus.front() - 1.0);
    auto above = [](const std::vector<double>& v, double tau) {
        std::size_t n = 0;
        for (double x : v)
            if (x > tau) ++n;
        return double(n) / double(v.size());
    };
    double pf = 0.0, pd = 0.0;
    bool first = true;
    for (double tau : taus) {
        const double far = above(s.impostor, tau);
        const double frr = 1.0 - above(s.genuine, tau);
        const double diff = far - frr;
        if (diff <= 0.0) {
            if (first) return 100.0 * far;
            const double t = pd / (pd - diff);
            return 100.0 * (pf + t * (far - pf));
        }
        pf = far;
        pd = diff;
        first = false;
    }
    return 100.0;
}

// Forward-only mean batch loss, for finite differencing.
double batch_loss(const neuralnet::SiameseModel& model,
                  const std::vector<neuralnet::PairExample>& batch) {
    double total = 0.0;
    for (const auto& p : batch) {
        const double d = neuralnet::pair_distance(model, *p.a, *p.b);
        total += neuralnet::contrastive_loss(d, p.label, model.margin);
    }
    return total / double(batch.size());
}

std::uint64_t fnv1a_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : buf.str()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// ------------------------------------------------------------- criterion 1 --

bool check_gradients(std::string& detail) {
    std::mt19937_64 rng(101);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double step = 1e-5, tol = 1e-4;
    double worst = 0.0;

    for (int trial = 0; trial < 20; ++trial) {
        auto model = neuralnet::init_params(rng(), {.feature_width = 2,
                                                    .embedding_width = 3});
        std::vector<Matrix> features;
        for (int s = 0; s < 8; ++s) {
            Matrix m(4, 2);
            for (auto& v : m.data()) v = gauss(rng);
            features.push_back(std::move(m));
        }
        std::vector<neuralnet::PairExample> batch;
        for (int p = 0; p < 4; ++p)
            batch.push_back({&features[2 * p], &features[2 * p + 1], p % 2});

        auto grads = neuralnet::SiameseGradients::zeros_like(model);
        neuralnet::backward(model, batch, grads);

        const std::size_t n = neuralnet::parameter_count(model);
        std::vector<double> flat(n), grad_flat(n);
        neuralnet::flatten_params(model, flat);
        neuralnet::flatten_grads(grads, grad_flat);

        for (std::size_t k = 0; k < n; ++k) {
            auto probe = flat;
            probe[k] = flat[k] + step;
            neuralnet::unflatten_params(probe, model);
            const double up = batch_loss(model, batch);
            probe[k] = flat[k] - step;
            neuralnet::unflatten_params(probe, model);
            const double down = batch_loss(model, batch);
            neuralnet::unflatten_params(flat, model);

            const double numeric = (up - down) / (2.0 * step);
            const double rel = std::abs(grad_flat[k] - numeric) /
                               (std::abs(grad_flat[k]) + std::abs(numeric) + 1e-8);
            worst = std::max(worst, rel);
            if (rel > tol) {
                detail = "worst relative error " + std::to_string(rel);
                return false;
            }
        }
    }
    detail = "20 models, worst relative error " + std::to_string(worst);
    return true;
}

// ------------------------------------------------------------- criterion 2 --

bool check_dft(std::string& detail) {
    std::mt19937_64 rng(202);
    std::normal_distribution<double> gauss(0.0, 1.5);
    const std::vector<std::size_t> lengths = {3, 5, 8, 10, 16, 20};
    double worst_abs = 0.0, worst_parseval = 0.0;
    int signals = 0;
    while (signals < 100) {
        for (std::size_t n : lengths) {
            std::vector<double> x(n);
            for (auto& v : x) v = gauss(rng);
            const auto got = signal::dft_magnitude(x);
            const auto want = oracle_dft(x);
            for (std::size_t k = 0; k < n; ++k)
                worst_abs = std::max(worst_abs, std::abs(got[k] - want[k]));

            double te = 0.0, fe = 0.0;
            for (double v : x) te += v * v;
            for (double v : got) fe += v * v;
            worst_parseval =
                std::max(worst_parseval, std::abs(fe - te * double(n)) /
                                             (te * double(n)));
            ++signals;
        }
    }
    detail = "abs err " + std::to_string(worst_abs) + ", parseval rel " +
             std::to_string(worst_parseval);
    return worst_abs < 1e-9 && worst_parseval < 1e-6;
}

// ------------------------------------------------------------- criterion 3 --

bool check_metric_oracles(std::string& detail) {
    std::mt19937_64 rng(303);
    std::normal_distribution<double> gauss(0.0, 1.0);
    double worst_eer = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        evaluation::ScoreSet s;
        const std::size_t ng = 5 + rng() % 196, ni = 5 + rng() % 196;
        const double sep = 0.4 * double(trial % 8);
        for (std::size_t i = 0; i < ng; ++i) s.genuine.push_back(sep + gauss(rng));
        for (std::size_t i = 0; i < ni; ++i) s.impostor.push_back(gauss(rng));

        for (double target : {0.01, 0.001, 0.05}) {
            double tau = 0.0;
            const double want = oracle_tar(s, target, &tau);
            const auto got = evaluation::tar_at_far(s, target);
            if (got.tar_pct != want || got.threshold != tau) {
                detail = "TAR mismatch at trial " + std::to_string(trial);
                return false;
            }
        }
        const double de =
            std::abs(evaluation::eer_percent(s) - oracle_eer(s));
        worst_eer = std::max(worst_eer, de);
        if (de >= 1e-9) {
            detail = "EER mismatch at trial " + std::to_string(trial);
            return false;
        }
    }
    detail = "200 score sets, worst EER diff " + std::to_string(worst_eer);
    return true;
}

// ------------------------------------------------------------- criterion 4 --

bool check_loss_identities(std::string& detail) {
    const double alpha = 1.0;
    if (neuralnet::contrastive_loss(0.0, 0, alpha) != 0.0) {
        detail = "loss(y=0,d=0) != 0";
        return false;
    }
    for (double d : {1.0, 1.5, 7.0}) {
        if (neuralnet::contrastive_loss(d, 1, alpha) != 0.0) {
            detail = "loss(y=1,d>=margin) != 0";
            return false;
        }
    }
    const double at_04 = neuralnet::contrastive_loss(0.4, 1, alpha);
    if (at_04 != 0.18) {
        detail = "loss(y=1,d=0.4) = " + std::to_string(at_04);
        return false;
    }
    const double eps = 1e-7;
    const double left = neuralnet::contrastive_loss(alpha - eps, 1, alpha);
    const double right = neuralnet::contrastive_loss(alpha + eps, 1, alpha);
    if (std::abs(left - right) >= 1e-12) {
        detail = "discontinuity at d=margin";
        return false;
    }
    detail = "all identities hold";
    return true;
}

// ------------------------------------------------------------- criterion 5 --

struct E2eOutcome {
    bool ok = false;
    std::string detail;
    std::size_t multi_subsets = 0;  // reused by criterion 6
};

training::TrainConfig e2e_config() {
    training::TrainConfig cfg;
    cfg.window = 20;
    cfg.window_shift = 2;
    cfg.embedding_width = 16;
    cfg.learning_rate = 0.02;
    cfg.epochs = 40;
    cfg.batch_size = 256;
    cfg.max_genuine_per_user = 300;
    cfg.rng_seed = 7;
    return cfg;
}

E2eOutcome run_e2e() {
    E2eOutcome out;
    dataset::SyntheticConfig gen;
    gen.n_users = 8;
    gen.days = 2;
    gen.samples_per_day = 400;
    gen.seed = 42;
    const auto corpus = dataset::generate_synthetic(gen);

    std::vector<std::string> modalities;
    for (const auto& d : dataset::all_modalities()) modalities.push_back(d.name);
    const auto fold =
        dataset::split_folds(dataset::corpus_users(corpus), 4, 1).front();

    auto cfg = e2e_config();
    const auto models = pipeline::train_fold(corpus, modalities, fold, cfg);
    pipeline::EvalOptions opts;
    opts.fusion = true;
    const auto eval =
        pipeline::evaluate_fold(corpus, models, modalities, fold, cfg, opts);

    for (const auto& s : eval.subsets)
        if (s.modalities.size() >= 2) ++out.multi_subsets;

    // (a) every modality beats the raw baseline by >= 20 points at 1% FAR
    double worst_margin = 1e9;
    std::string worst_modality;
    for (const auto& m : eval.per_modality) {
        const double margin =
            m.model_roc.tar_at_far_1pct - m.baseline_roc.tar_at_far_1pct;
        if (margin < worst_margin) {
            worst_margin = margin;
            worst_modality = m.modality;
        }
    }
    if (worst_margin < 20.0) {
        out.detail = "(a) " + worst_modality + " beats baseline by only " +
                     std::to_string(worst_margin) + " points";
        return out;
    }

    // (b) full fusion >= best single modality at 0.1% FAR
    if (!eval.fused_all) {
        out.detail = "(b) no fused score set";
        return out;
    }
    double best_single = 0.0;
    for (const auto& m : eval.per_modality)
        best_single = std::max(best_single, m.model_roc.tar_at_far_0p1pct);
    if (eval.fused_all->tar_at_far_0p1pct < best_single) {
        out.detail = "(b) fused " +
                     std::to_string(eval.fused_all->tar_at_far_0p1pct) +
                     " < best single " + std::to_string(best_single);
        return out;
    }

    // (c) longer windows do not hurt: fused TAR@0.1% at T=20 >= at T=3
    auto cfg3 = cfg;
    cfg3.window = 3;
    const auto models3 = pipeline::train_fold(corpus, modalities, fold, cfg3);
    const auto eval3 = pipeline::evaluate_fold(corpus, models3, modalities, fold,
                                               cfg3, pipeline::EvalOptions{});
    if (!eval3.fused_all) {
        out.detail = "(c) no fused score set at T=3";
        return out;
    }
    if (eval.fused_all->tar_at_far_0p1pct < eval3.fused_all->tar_at_far_0p1pct) {
        out.detail = "(c) T=20 fused " +
                     std::to_string(eval.fused_all->tar_at_far_0p1pct) +
                     " < T=3 fused " +
                     std::to_string(eval3.fused_all->tar_at_far_0p1pct);
        return out;
    }

    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "margin(a) %.2f pts, fused %.2f vs best single %.2f, "
                  "T=20 %.2f vs T=3 %.2f",
                  worst_margin, eval.fused_all->tar_at_far_0p1pct, best_single,
                  eval.fused_all->tar_at_far_0p1pct,
                  eval3.fused_all->tar_at_far_0p1pct);
    out.detail = buf;
    out.ok = true;
    return out;
}

// ------------------------------------------------------------- criterion 7 --

bool check_contribution(std::string& detail) {
    const auto c = evaluation::contribution(99.98, 99.71);
    if (!c) {
        detail = "unexpected empty contribution";
        return false;
    }
    const double independent = (99.98 - 99.71) / (100.0 - 99.71);
    detail = "got " + std::to_string(*c);
    return std::abs(*c - 0.9310) <= 1e-4 && std::abs(*c - independent) < 1e-12;
}

// ------------------------------------------------------------- criterion 8 --

bool check_determinism(std::string& detail) {
    dataset::SyntheticConfig gen;
    gen.n_users = 4;
    gen.days = 1;
    gen.samples_per_day = 200;
    gen.seed = 11;
    gen.modalities = {"keystroke", "accelerometer"};

    training::TrainConfig cfg;
    cfg.window = 5;
    cfg.window_shift = 2;
    cfg.embedding_width = 6;
    cfg.epochs = 3;
    cfg.batch_size = 128;
    cfg.max_genuine_per_user = 60;
    cfg.rng_seed = 9;

    const auto dir = fs::temp_directory_path() / "pa_acceptance_det";
    fs::remove_all(dir);
    fs::create_directories(dir);

    std::vector<std::uint64_t> checkpoint_hashes[2];
    std::string reports[2];
    for (int run = 0; run < 2; ++run) {
        const auto corpus = dataset::generate_synthetic(gen);
        const auto fold =
            dataset::split_folds(dataset::corpus_users(corpus), 2, 5).front();
        const auto models =
            pipeline::train_fold(corpus, gen.modalities, fold, cfg);
        for (const auto& m : gen.modalities) {
            const auto path = dir / (m + "_run" + std::to_string(run) + ".ckpt");
            neuralnet::save_checkpoint(models.by_modality.at(m), path.string());
            checkpoint_hashes[run].push_back(fnv1a_file(path));
        }
        const auto eval = pipeline::evaluate_fold(corpus, models, gen.modalities,
                                                  fold, cfg, pipeline::EvalOptions{});
        reports[run] = pipeline::structured_report({eval}, {}, "fixed");
    }
    fs::remove_all(dir);

    if (checkpoint_hashes[0] != checkpoint_hashes[1]) {
        detail = "checkpoint bytes differ between runs";
        return false;
    }
    if (reports[0] != reports[1]) {
        detail = "reports differ between runs";
        return false;
    }
    detail = "checkpoints and reports bit-identical";
    return true;
}

// ------------------------------------------------------------- criterion 9 --

bool check_no_leakage(std::string& detail) {
    dataset::SyntheticConfig gen;
    gen.n_users = 6;
    gen.days = 1;
    gen.samples_per_day = 200;
    gen.modalities = {"keystroke", "gps"};

    training::TrainConfig cfg;
    cfg.window = 5;
    cfg.window_shift = 2;
    cfg.embedding_width = 4;
    cfg.epochs = 1;
    cfg.batch_size = 128;
    cfg.max_genuine_per_user = 40;

    std::size_t audited_pairs = 0;
    for (std::uint64_t seed : {3ULL, 17ULL}) {
        gen.seed = seed;
        cfg.rng_seed = seed;
        const auto corpus = dataset::generate_synthetic(gen);
        const auto folds =
            dataset::split_folds(dataset::corpus_users(corpus), 3, seed);
        for (const auto& fold : folds) {
            const std::set<std::string> train_set(fold.train_users.begin(),
                                                  fold.train_users.end());
            const std::set<std::string> test_set(fold.test_users.begin(),
                                                 fold.test_users.end());

            // the roster the evaluator scores, rebuilt independently
            std::map<std::string, std::size_t> counts;
            const auto segments =
                pipeline::build_feature_segments(corpus, "keystroke", cfg.window,
                                                 cfg.window_shift);
            for (const auto& user : fold.test_users)
                if (segments.count(user)) counts[user] = segments.at(user).size();
            const auto roster = dataset::make_index_pairs(
                counts, 40,
                dataset::derive_seed(cfg.rng_seed, "eval-pairs",
                                     "fold" + std::to_string(fold.fold_index)));
            for (const auto& p : roster) {
                if (train_set.count(p.user_a) || train_set.count(p.user_b) ||
                    !test_set.count(p.user_a) || !test_set.count(p.user_b)) {
                    detail = "roster pair touches a training user (fold " +
                             std::to_string(fold.fold_index) + ")";
                    return false;
                }
                ++audited_pairs;
            }

            const auto models =
                pipeline::train_fold(corpus, gen.modalities, fold, cfg);
            const auto eval =
                pipeline::evaluate_fold(corpus, models, gen.modalities, fold, cfg,
                                        pipeline::EvalOptions{});
            for (const auto& user : eval.evaluated_users) {
                if (train_set.count(user) || !test_set.count(user)) {
                    detail = "evaluated user " + user + " is not a held-out user";
                    return false;
                }
            }
        }
    }
    detail = std::to_string(audited_pairs) + " roster pairs audited clean";
    return true;
}

}  // namespace

int main() {
    bool all_ok = true;
    E2eOutcome e2e;

    struct Criterion {
        const char* name;
        std::function<bool(std::string&)> run;
    };
    const std::vector<Criterion> criteria = {
        {"1 gradient-check", check_gradients},
        {"2 dft-oracle", check_dft},
        {"3 metric-oracles", check_metric_oracles},
        {"4 loss-identities", check_loss_identities},
        {"5 end-to-end",
         [&](std::string& d) {
             e2e = run_e2e();
             d = e2e.detail;
             return e2e.ok;
         }},
        {"6 subset-count",
         [&](std::string& d) {
             d = std::to_string(e2e.multi_subsets) + " multi-modality subsets";
             return e2e.multi_subsets == 247;
         }},
        {"7 contribution-formula", check_contribution},
        {"8 determinism", check_determinism},
        {"9 no-leakage", check_no_leakage},
    };

    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        std::string detail;
        bool ok = false;
        try {
            ok = c.run(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                .count();
        char line[400];
        std::snprintf(line, sizeof(line), "%s criterion %s (%.1f s): %s",
                      ok ? "PASS" : "FAIL", c.name, secs, detail.c_str());
        std::cout << line << std::endl;
        all_ok = all_ok && ok;
    }
    return all_ok ? 0 : 1;
}
