#include "passauth/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "passauth/adam.hpp"
#include "passauth/errors.hpp"

namespace passauth::training {

void TrainConfig::validate() const {
    if (window < 1) throw ConfigError("window must be >= 1");
    if (window_shift < 1) throw ConfigError("window_shift must be >= 1");
    if (embedding_width < 1) throw ConfigError("embedding_width must be >= 1");
    if (margin <= 0.0) throw ConfigError("margin must be positive");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (learning_rate <= 0.0) throw ConfigError("learning_rate must be positive");
    if (grad_clip < 0.0) throw ConfigError("grad_clip must be non-negative");
}

TrainConfig parse_train_config(const std::string& text) {
    TrainConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": expected key=value");
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);
        try {
            if (key == "window") cfg.window = std::stoul(value);
            else if (key == "window_shift") cfg.window_shift = std::stoul(value);
            else if (key == "embedding_width") cfg.embedding_width = std::stoul(value);
            else if (key == "margin") cfg.margin = std::stod(value);
            else if (key == "learning_rate") cfg.learning_rate = std::stod(value);
            else if (key == "beta1") cfg.beta1 = std::stod(value);
            else if (key == "beta2") cfg.beta2 = std::stod(value);
            else if (key == "epsilon") cfg.epsilon = std::stod(value);
            else if (key == "batch_size") cfg.batch_size = std::stoul(value);
            else if (key == "epochs") cfg.epochs = std::stoul(value);
            else if (key == "rng_seed") cfg.rng_seed = std::stoull(value);
            else if (key == "max_genuine_per_user")
                cfg.max_genuine_per_user = std::stoul(value);
            else if (key == "grad_clip") cfg.grad_clip = std::stod(value);
            else
                throw ConfigError("unknown config key '" + key + "' on line " +
                                  std::to_string(line_no));
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception&) {
            throw ConfigError("bad value for '" + key + "' on line " +
                              std::to_string(line_no));
        }
    }
    cfg.validate();
    return cfg;
}

TrainConfig load_train_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_train_config(buf.str());
}

std::string serialize_train_config(const TrainConfig& cfg) {
    std::ostringstream out;
    out << "window=" << cfg.window << '\n'
        << "window_shift=" << cfg.window_shift << '\n'
        << "embedding_width=" << cfg.embedding_width << '\n'
        << "margin=" << cfg.margin << '\n'
        << "learning_rate=" << cfg.learning_rate << '\n'
        << "beta1=" << cfg.beta1 << '\n'
        << "beta2=" << cfg.beta2 << '\n'
        << "epsilon=" << cfg.epsilon << '\n'
        << "batch_size=" << cfg.batch_size << '\n'
        << "epochs=" << cfg.epochs << '\n'
        << "rng_seed=" << cfg.rng_seed << '\n'
        << "max_genuine_per_user=" << cfg.max_genuine_per_user << '\n'
        << "grad_clip=" << cfg.grad_clip << '\n';
    return out.str();
}

TrainResult train_modality(const std::vector<dataset::SegmentPair>& pairs,
                           const TrainConfig& config) {
    config.validate();
    if (pairs.empty()) throw DataError("train_modality: empty pair set");
    const std::size_t feature_width = pairs.front().a.features.cols();
    for (const auto& p : pairs) {
        if (p.a.features.cols() != feature_width || p.b.features.cols() != feature_width)
            throw ShapeError("train_modality: inconsistent feature widths in pairs");
        if (p.a.modality != pairs.front().a.modality)
            throw DataError("train_modality: mixed modalities in pair set");
    }

    const auto t_start = std::chrono::steady_clock::now();

    TrainResult result;
    result.model = neuralnet::init_params(
        config.rng_seed,
        {.feature_width = feature_width, .embedding_width = config.embedding_width},
        config.margin);
    result.report.config = config;

    const std::size_t n_params = neuralnet::parameter_count(result.model);
    auto adam = neuralnet::AdamState::fresh(n_params, config.learning_rate,
                                            config.beta1, config.beta2,
                                            config.epsilon);
    std::vector<double> flat_params(n_params), flat_grads(n_params);
    neuralnet::flatten_params(result.model, flat_params);

    std::vector<std::size_t> order(pairs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 shuffle_rng(dataset::derive_seed(config.rng_seed, "epoch-shuffle"));

    neuralnet::SiameseGradients grads;
    std::size_t global_batch = 0;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double epoch_loss = 0.0;
        std::size_t batches = 0;

        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(start + config.batch_size, order.size());
            std::vector<neuralnet::PairExample> batch;
            batch.reserve(end - start);
            for (std::size_t k = start; k < end; ++k) {
                const auto& p = pairs[order[k]];
                batch.push_back({&p.a.features, &p.b.features, p.label});
            }

            const double loss = neuralnet::backward(result.model, batch, grads);
            ++global_batch;
            if (!std::isfinite(loss))
                throw NumericError("train_modality: non-finite loss at batch " +
                                   std::to_string(global_batch));
            epoch_loss += loss;
            ++batches;

            neuralnet::flatten_grads(grads, flat_grads);
            if (config.grad_clip > 0.0) {
                const double norm = euclidean_norm(flat_grads);
                if (norm > config.grad_clip) {
                    const double scale = config.grad_clip / norm;
                    for (double& g : flat_grads) g *= scale;
                }
            }
            neuralnet::adam_step(adam, flat_params, flat_grads);
            neuralnet::unflatten_params(flat_params, result.model);
        }
        result.report.epoch_losses.push_back(epoch_loss /
                                             static_cast<double>(batches));
        result.report.total_batches += batches;
    }

    result.report.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
            .count();
    return result;
}

}  // namespace passauth::training
