// Command-line front end: corpus generation, per-modality Siamese training,
// and the evaluation/fusion/contribution/sweep reports.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "passauth/checkpoint.hpp"
#include "passauth/dataset.hpp"
#include "passauth/errors.hpp"
#include "passauth/pipeline.hpp"
#include "passauth/training.hpp"

namespace fs = std::filesystem;
using namespace passauth;

namespace {

constexpr const char* kToolVersion = "1.0.0";

std::uint64_t fnv1a_bytes(const std::string& data, std::uint64_t h) {
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Hash of the record files only, independent of generation wall clock.
std::string corpus_hash(const std::string& dir) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.path().extension() == ".tsv") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& f : files) {
        h = fnv1a_bytes(f.filename().string(), h);
        h = fnv1a_bytes(read_file(f), h);
    }
    return hex64(h);
}

std::string iso_now() {
    const auto t = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

// The manifest hash covers only run-defining fields, so identical runs carry
// identical hashes in their reports; wall-clock timestamps live beside it in
// the manifest file but are excluded from the hash.
std::string write_manifest(const fs::path& path, const std::string& command,
                           const nlohmann::ordered_json& config_echo,
                           std::uint64_t seed, const std::string& corpus_digest,
                           const std::string& started_at) {
    nlohmann::ordered_json m;
    m["command"] = command;
    m["tool_version"] = kToolVersion;
    m["seed"] = seed;
    m["config"] = config_echo;
    m["corpus_hash"] = corpus_digest;
    const std::string deterministic = m.dump();
    const std::string hash = hex64(fnv1a_bytes(deterministic, 0xcbf29ce484222325ULL));
    m["manifest_hash"] = hash;
    m["started_at"] = started_at;
    m["finished_at"] = iso_now();
    std::ofstream out(path);
    if (!out) throw DataError("cannot write manifest " + path.string());
    out << m.dump(2) << '\n';
    return hash;
}

std::vector<std::string> modality_names() {
    std::vector<std::string> names;
    for (const auto& d : dataset::all_modalities()) names.push_back(d.name);
    return names;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << text;
    if (!out) throw DataError("write failed for " + path.string());
}

int run(int argc, char** argv) {
    CLI::App app{"Passive smartphone authentication pipeline"};
    app.require_subcommand(1);

    // generate
    auto* gen = app.add_subcommand("generate", "Generate a synthetic sensor corpus");
    dataset::SyntheticConfig gen_cfg;
    std::string gen_out;
    gen->add_option("--n-users", gen_cfg.n_users, "Number of users")->required();
    gen->add_option("--days", gen_cfg.days, "Days of data per user")->required();
    gen->add_option("--out-dir", gen_out, "Output directory")->required();
    gen->add_option("--seed", gen_cfg.seed, "Master RNG seed")->required();
    gen->add_option("--samples-per-day", gen_cfg.samples_per_day,
                    "Active seconds per day per user");
    gen->add_option("--noise-scale", gen_cfg.noise_scale, "Gaussian noise sigma");
    gen->add_option("--drift-scale", gen_cfg.drift_scale,
                    "Common-mode drift sigma (uninformative nuisance)");
    gen->add_option("--gap-probability", gen_cfg.gap_probability,
                    "Per-second probability of a chronological gap");

    // train
    auto* train = app.add_subcommand("train", "Train one modality's Siamese model");
    std::string train_corpus, train_modality_name, train_config_path, train_out;
    std::size_t train_folds = 5, train_fold_index = 0;
    std::uint64_t fold_seed = 0;
    train->add_option("--corpus-dir", train_corpus, "Corpus directory")->required();
    train->add_option("--modality", train_modality_name, "Modality name")->required();
    train->add_option("--config-file", train_config_path,
                      "key=value training config (strict keys)");
    train->add_option("--out-checkpoint", train_out, "Checkpoint output path")
        ->required();
    train->add_option("--folds", train_folds, "Number of cross-validation folds");
    train->add_option("--fold", train_fold_index, "Fold index to train");
    train->add_option("--fold-seed", fold_seed, "Seed for the fold split");

    // evaluate
    auto* eval = app.add_subcommand("evaluate", "Score, fuse, and report");
    std::string eval_corpus, eval_ckpt_dir, eval_config_path;
    std::string eval_out_report, eval_out_table;
    std::size_t eval_folds = 5, eval_window = 20;
    std::uint64_t eval_fold_seed = 0;
    bool flag_fusion = false, flag_contribution = false, flag_sweep = false;
    eval->add_option("--corpus-dir", eval_corpus, "Corpus directory")->required();
    eval->add_option("--checkpoints-dir", eval_ckpt_dir,
                     "Directory with <modality>_fold<k>.ckpt files");
    eval->add_option("--folds", eval_folds, "Number of cross-validation folds");
    eval->add_option("--fold-seed", eval_fold_seed, "Seed for the fold split");
    eval->add_option("--T,--window", eval_window, "Authentication window (seconds)");
    eval->add_option("--config-file", eval_config_path,
                     "Training config (used for the sweep and eval seeds)");
    eval->add_option("--out-report", eval_out_report, "Structured report path")
        ->required();
    eval->add_option("--out-table", eval_out_table, "Human-readable table path");
    eval->add_flag("--fusion", flag_fusion, "Evaluate all 247 multi-modality subsets");
    eval->add_flag("--contribution", flag_contribution,
                   "Leave-one-out contribution per modality");
    eval->add_flag("--sweep", flag_sweep, "Temporal sweep over T in {3,5,10,20}");

    CLI11_PARSE(app, argc, argv);
    const std::string started = iso_now();

    if (gen->parsed()) {
        const auto corpus = dataset::generate_synthetic(gen_cfg);
        dataset::save_corpus(corpus, gen_out);
        nlohmann::ordered_json echo;
        echo["n_users"] = gen_cfg.n_users;
        echo["days"] = gen_cfg.days;
        echo["samples_per_day"] = gen_cfg.samples_per_day;
        echo["noise_scale"] = gen_cfg.noise_scale;
        echo["drift_scale"] = gen_cfg.drift_scale;
        echo["gap_probability"] = gen_cfg.gap_probability;
        const auto hash = write_manifest(fs::path(gen_out) / "run_manifest.json",
                                         "generate", echo, gen_cfg.seed,
                                         corpus_hash(gen_out), started);
        std::cout << "generated " << corpus.size() << " record files in " << gen_out
                  << "\nmanifest " << hash << "\n";
        return 0;
    }

    if (train->parsed()) {
        dataset::descriptor_for(train_modality_name);  // validates the name
        training::TrainConfig config;
        if (!train_config_path.empty())
            config = training::load_train_config(train_config_path);

        const auto corpus = dataset::load_corpus(train_corpus);
        const auto folds =
            dataset::split_folds(dataset::corpus_users(corpus), train_folds, fold_seed);
        if (train_fold_index >= folds.size())
            throw ConfigError("fold index out of range");
        const auto& fold = folds[train_fold_index];

        const auto models =
            pipeline::train_fold(corpus, {train_modality_name}, fold, config);
        const auto& model = models.by_modality.at(train_modality_name);
        const auto& report = models.reports.at(train_modality_name);
        neuralnet::save_checkpoint(model, train_out);

        nlohmann::ordered_json echo =
            nlohmann::ordered_json::parse("{}");
        echo["train_config"] = training::serialize_train_config(config);
        echo["modality"] = train_modality_name;
        echo["folds"] = train_folds;
        echo["fold"] = train_fold_index;
        const auto hash =
            write_manifest(fs::path(train_out).string() + ".manifest.json", "train",
                           echo, config.rng_seed, corpus_hash(train_corpus), started);

        std::ostringstream rep;
        rep << "# manifest " << hash << "\n";
        rep << "# checkpoint " << train_out << "\n";
        rep << training::serialize_train_config(config);
        for (std::size_t e = 0; e < report.epoch_losses.size(); ++e)
            rep << "epoch_loss " << e << " " << report.epoch_losses[e] << "\n";
        write_text(train_out + ".report.txt", rep.str());
        std::cout << "trained " << train_modality_name << " fold " << train_fold_index
                  << ": first epoch loss " << report.epoch_losses.front()
                  << ", final " << report.epoch_losses.back() << " ("
                  << report.seconds << " s)\n";
        return 0;
    }

    // evaluate
    training::TrainConfig config;
    if (!eval_config_path.empty())
        config = training::load_train_config(eval_config_path);
    config.window = eval_window;

    const auto corpus = dataset::load_corpus(eval_corpus);
    const auto folds =
        dataset::split_folds(dataset::corpus_users(corpus), eval_folds, eval_fold_seed);
    const auto modalities = modality_names();

    pipeline::EvalOptions options;
    options.fusion = flag_fusion;
    options.contributions = flag_contribution;

    std::vector<pipeline::FoldEvaluation> fold_evals;
    for (const auto& fold : folds) {
        pipeline::TrainedModels models;
        for (const auto& modality : modalities) {
            const auto path = fs::path(eval_ckpt_dir) /
                              (modality + "_fold" + std::to_string(fold.fold_index) +
                               ".ckpt");
            if (!fs::exists(path))
                throw DataError("missing checkpoint for modality '" + modality +
                                "', fold " + std::to_string(fold.fold_index) + ": " +
                                path.string());
            models.by_modality[modality] = neuralnet::load_checkpoint(path.string());
        }
        fold_evals.push_back(
            pipeline::evaluate_fold(corpus, models, modalities, fold, config, options));
    }

    std::vector<pipeline::SweepEntry> sweep;
    if (flag_sweep)
        sweep = pipeline::temporal_sweep(corpus, modalities, folds.front(), config,
                                         {3, 5, 10, 20});

    nlohmann::ordered_json echo;
    echo["train_config"] = training::serialize_train_config(config);
    echo["folds"] = eval_folds;
    echo["window"] = eval_window;
    echo["fusion"] = flag_fusion;
    echo["contribution"] = flag_contribution;
    echo["sweep"] = flag_sweep;
    const auto hash = write_manifest(eval_out_report + ".manifest.json", "evaluate",
                                     echo, config.rng_seed, corpus_hash(eval_corpus),
                                     started);

    write_text(eval_out_report, pipeline::structured_report(fold_evals, sweep, hash));
    if (!eval_out_table.empty())
        write_text(eval_out_table, pipeline::human_report(fold_evals, sweep, hash));
    std::cout << "evaluated " << folds.size() << " folds; report written to "
              << eval_out_report << "\nmanifest " << hash << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const NumericError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
