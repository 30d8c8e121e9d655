#include "passauth/lstm.hpp"

#include <cmath>
#include <random>
#include <string>

#include "passauth/errors.hpp"

namespace passauth::neuralnet {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

GateParams zero_gate(std::size_t input_width, std::size_t hidden_width) {
    GateParams g;
    g.input_weights = Matrix(hidden_width, input_width);
    g.recurrent_weights = Matrix(hidden_width, hidden_width);
    g.bias.assign(hidden_width, 0.0);
    return g;
}

// Fixed traversal order: gates i, f, o, g; within a gate W, U, b.
template <typename Layer, typename Fn>
void for_each_gate(Layer& layer, Fn&& fn) {
    fn(layer.input_gate);
    fn(layer.forget_gate);
    fn(layer.output_gate);
    fn(layer.candidate);
}

template <typename Fn>
void for_each_value(const LstmLayerParams& layer, Fn&& fn) {
    for_each_gate(layer, [&](const GateParams& gate) {
        for (double v : gate.input_weights.data()) fn(v);
        for (double v : gate.recurrent_weights.data()) fn(v);
        for (double v : gate.bias) fn(v);
    });
}

template <typename Fn>
void for_each_value_mut(LstmLayerParams& layer, Fn&& fn) {
    for_each_gate(layer, [&](GateParams& gate) {
        for (double& v : gate.input_weights.data()) fn(v);
        for (double& v : gate.recurrent_weights.data()) fn(v);
        for (double& v : gate.bias) fn(v);
    });
}

void check_layer_input(const LstmLayerParams& params, const std::vector<Vector>& inputs) {
    if (inputs.empty()) throw ShapeError("lstm_layer_forward: empty input sequence");
    for (const auto& x : inputs) {
        if (x.size() != params.input_width)
            throw ShapeError("lstm_layer_forward: expected input width " +
                             std::to_string(params.input_width) + ", got " +
                             std::to_string(x.size()));
    }
}

std::vector<Vector> matrix_rows(const Matrix& m) {
    std::vector<Vector> rows(m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r)
        rows[r].assign(m.row(r).begin(), m.row(r).end());
    return rows;
}

// Backward pass through one layer. output_grads[t] is dL/dh_t from above.
// Parameter gradients are accumulated into grads; returns dL/dx_t per step.
std::vector<Vector> lstm_layer_backward(const LstmLayerParams& params,
                                        const LstmForwardCache& cache,
                                        const std::vector<Vector>& output_grads,
                                        LstmLayerParams& grads) {
    const std::size_t steps = cache.steps.size();
    const std::size_t hidden = params.hidden_width;
    const std::size_t in_w = params.input_width;

    std::vector<Vector> input_grads(steps, Vector(in_w, 0.0));
    Vector dh_next(hidden, 0.0), dc_next(hidden, 0.0);
    Vector dh(hidden), dc(hidden);
    Vector da_i(hidden), da_f(hidden), da_o(hidden), da_g(hidden);

    for (std::size_t ti = steps; ti-- > 0;) {
        const auto& st = cache.steps[ti];
        for (std::size_t k = 0; k < hidden; ++k) {
            dh[k] = output_grads[ti][k] + dh_next[k];
            const double d_out = dh[k] * st.tanh_c[k];
            dc[k] = dc_next[k] + dh[k] * st.o[k] * (1.0 - st.tanh_c[k] * st.tanh_c[k]);
            const double c_prev = ti > 0 ? cache.steps[ti - 1].c[k] : 0.0;
            const double d_i = dc[k] * st.g[k];
            const double d_f = dc[k] * c_prev;
            const double d_g = dc[k] * st.i[k];
            dc_next[k] = dc[k] * st.f[k];
            da_i[k] = d_i * st.i[k] * (1.0 - st.i[k]);
            da_f[k] = d_f * st.f[k] * (1.0 - st.f[k]);
            da_o[k] = d_out * st.o[k] * (1.0 - st.o[k]);
            da_g[k] = d_g * (1.0 - st.g[k] * st.g[k]);
        }

        const Vector& x_t = cache.inputs[ti];
        const Vector* h_prev = ti > 0 ? &cache.steps[ti - 1].h : nullptr;
        Vector zero_h;
        if (!h_prev) {
            zero_h.assign(hidden, 0.0);
            h_prev = &zero_h;
        }

        std::fill(dh_next.begin(), dh_next.end(), 0.0);
        auto accumulate = [&](const Vector& da, GateParams& g_acc,
                              const GateParams& g_par) {
            outer_add(g_acc.input_weights, da, x_t);
            outer_add(g_acc.recurrent_weights, da, *h_prev);
            for (std::size_t k = 0; k < hidden; ++k) g_acc.bias[k] += da[k];
            matvec_transpose_add(g_par.input_weights, da, input_grads[ti]);
            matvec_transpose_add(g_par.recurrent_weights, da, dh_next);
        };
        accumulate(da_i, grads.input_gate, params.input_gate);
        accumulate(da_f, grads.forget_gate, params.forget_gate);
        accumulate(da_o, grads.output_gate, params.output_gate);
        accumulate(da_g, grads.candidate, params.candidate);
    }
    return input_grads;
}

// Backprop one branch's embedding gradient through both layers.
void branch_backward(const SiameseModel& model, const LstmForwardCache& cache1,
                     const LstmForwardCache& cache2, const Vector& embedding_grad,
                     SiameseGradients& grads) {
    const std::size_t steps = cache2.steps.size();
    std::vector<Vector> out_grads2(steps, Vector(model.layer2.hidden_width, 0.0));
    out_grads2[steps - 1] = embedding_grad;
    auto mid_grads = lstm_layer_backward(model.layer2, cache2, out_grads2, grads.layer2);
    lstm_layer_backward(model.layer1, cache1, mid_grads, grads.layer1);
}

}  // namespace

LstmLayerParams LstmLayerParams::zeros(std::size_t input_width, std::size_t hidden_width) {
    LstmLayerParams layer;
    layer.input_width = input_width;
    layer.hidden_width = hidden_width;
    layer.input_gate = zero_gate(input_width, hidden_width);
    layer.forget_gate = zero_gate(input_width, hidden_width);
    layer.output_gate = zero_gate(input_width, hidden_width);
    layer.candidate = zero_gate(input_width, hidden_width);
    return layer;
}

SiameseGradients SiameseGradients::zeros_like(const SiameseModel& model) {
    SiameseGradients g;
    g.layer1 = LstmLayerParams::zeros(model.layer1.input_width, model.layer1.hidden_width);
    g.layer2 = LstmLayerParams::zeros(model.layer2.input_width, model.layer2.hidden_width);
    return g;
}

std::vector<Vector> lstm_layer_forward(const LstmLayerParams& params,
                                       const std::vector<Vector>& inputs,
                                       LstmForwardCache* cache) {
    check_layer_input(params, inputs);
    const std::size_t hidden = params.hidden_width;

    if (cache) {
        cache->inputs = inputs;
        cache->steps.clear();
        cache->steps.reserve(inputs.size());
    }

    std::vector<Vector> outputs;
    outputs.reserve(inputs.size());
    Vector h(hidden, 0.0), c(hidden, 0.0);
    Vector a_i(hidden), a_f(hidden), a_o(hidden), a_g(hidden);

    for (const auto& x : inputs) {
        a_i = params.input_gate.bias;
        a_f = params.forget_gate.bias;
        a_o = params.output_gate.bias;
        a_g = params.candidate.bias;
        matvec_add(params.input_gate.input_weights, x, a_i);
        matvec_add(params.input_gate.recurrent_weights, h, a_i);
        matvec_add(params.forget_gate.input_weights, x, a_f);
        matvec_add(params.forget_gate.recurrent_weights, h, a_f);
        matvec_add(params.output_gate.input_weights, x, a_o);
        matvec_add(params.output_gate.recurrent_weights, h, a_o);
        matvec_add(params.candidate.input_weights, x, a_g);
        matvec_add(params.candidate.recurrent_weights, h, a_g);

        LstmStepCache step;
        step.i.resize(hidden);
        step.f.resize(hidden);
        step.o.resize(hidden);
        step.g.resize(hidden);
        step.c.resize(hidden);
        step.tanh_c.resize(hidden);
        for (std::size_t k = 0; k < hidden; ++k) {
            step.i[k] = sigmoid(a_i[k]);
            step.f[k] = sigmoid(a_f[k]);
            step.o[k] = sigmoid(a_o[k]);
            step.g[k] = std::tanh(a_g[k]);
            step.c[k] = step.f[k] * c[k] + step.i[k] * step.g[k];
            step.tanh_c[k] = std::tanh(step.c[k]);
            h[k] = step.o[k] * step.tanh_c[k];
        }
        c = step.c;
        step.h = h;
        outputs.push_back(h);
        if (cache) cache->steps.push_back(std::move(step));
    }
    return outputs;
}

Vector embed(const SiameseModel& model, const Matrix& features) {
    if (features.cols() != model.layer1.input_width)
        throw ShapeError("embed: expected feature width " +
                         std::to_string(model.layer1.input_width) + ", got " +
                         std::to_string(features.cols()));
    auto h1 = lstm_layer_forward(model.layer1, matrix_rows(features));
    auto h2 = lstm_layer_forward(model.layer2, h1);
    return h2.back();
}

double pair_distance(const SiameseModel& model, const Matrix& features_a,
                     const Matrix& features_b) {
    const auto ea = embed(model, features_a);
    const auto eb = embed(model, features_b);
    double acc = 0.0;
    for (std::size_t k = 0; k < ea.size(); ++k) {
        const double d = ea[k] - eb[k];
        acc += d * d;
    }
    return std::sqrt(acc);
}

double contrastive_loss(double distance, int label, double margin) {
    if (distance < 0.0)
        throw DataError("contrastive_loss: negative distance");
    if (margin <= 0.0)
        throw ConfigError("contrastive_loss: margin must be positive");
    if (label == 0) return 0.5 * distance * distance;
    const double gap = std::max(0.0, margin - distance);
    return 0.5 * gap * gap;
}

double backward(const SiameseModel& model, std::span<const PairExample> batch,
                SiameseGradients& grads) {
    if (batch.empty()) throw DataError("backward: empty batch");
    grads = SiameseGradients::zeros_like(model);

    const double inv_n = 1.0 / static_cast<double>(batch.size());
    double loss_sum = 0.0;

    LstmForwardCache c1a, c2a, c1b, c2b;
    for (const auto& pair : batch) {
        auto h1a = lstm_layer_forward(model.layer1, matrix_rows(*pair.a), &c1a);
        auto h2a = lstm_layer_forward(model.layer2, h1a, &c2a);
        auto h1b = lstm_layer_forward(model.layer1, matrix_rows(*pair.b), &c1b);
        auto h2b = lstm_layer_forward(model.layer2, h1b, &c2b);
        const Vector& ea = h2a.back();
        const Vector& eb = h2b.back();

        Vector diff(ea.size());
        double d2 = 0.0;
        for (std::size_t k = 0; k < ea.size(); ++k) {
            diff[k] = ea[k] - eb[k];
            d2 += diff[k] * diff[k];
        }
        const double dist = std::sqrt(d2);
        loss_sum += contrastive_loss(dist, pair.label, model.margin);

        // dL/d(embedding) for this pair, already scaled by 1/N.
        double coeff = 0.0;
        if (pair.label == 0) {
            coeff = inv_n;  // L = d^2/2, dL/de_a = diff
        } else if (dist > 0.0 && dist < model.margin) {
            coeff = -inv_n * (model.margin - dist) / dist;
        }
        if (coeff == 0.0) continue;

        Vector grad_a(diff.size()), grad_b(diff.size());
        for (std::size_t k = 0; k < diff.size(); ++k) {
            grad_a[k] = coeff * diff[k];
            grad_b[k] = -coeff * diff[k];
        }
        branch_backward(model, c1a, c2a, grad_a, grads);
        branch_backward(model, c1b, c2b, grad_b, grads);
    }
    return loss_sum * inv_n;
}

SiameseModel init_params(std::uint64_t seed, const ModelWidths& widths, double margin) {
    if (widths.feature_width < 1 || widths.embedding_width < 1)
        throw ConfigError("init_params: widths must be positive");
    if (margin <= 0.0) throw ConfigError("init_params: margin must be positive");

    SiameseModel model;
    model.layer1 = LstmLayerParams::zeros(widths.feature_width, widths.embedding_width);
    model.layer2 =
        LstmLayerParams::zeros(widths.embedding_width, widths.embedding_width);
    model.margin = margin;

    std::mt19937_64 rng(seed);
    auto fill_layer = [&](LstmLayerParams& layer) {
        const double scale = 1.0 / std::sqrt(static_cast<double>(layer.input_width));
        std::uniform_real_distribution<double> dist(-scale, scale);
        for_each_gate(layer, [&](GateParams& gate) {
            for (double& v : gate.input_weights.data()) v = dist(rng);
            for (double& v : gate.recurrent_weights.data()) v = dist(rng);
        });
        // Forget-gate bias 1 keeps early cell states from washing out.
        for (double& v : layer.forget_gate.bias) v = 1.0;
    };
    fill_layer(model.layer1);
    fill_layer(model.layer2);
    return model;
}

std::size_t parameter_count(const SiameseModel& model) {
    std::size_t n = 0;
    for_each_value(model.layer1, [&](double) { ++n; });
    for_each_value(model.layer2, [&](double) { ++n; });
    return n;
}

void flatten_params(const SiameseModel& model, std::span<double> out) {
    std::size_t idx = 0;
    auto put = [&](double v) { out[idx++] = v; };
    for_each_value(model.layer1, put);
    for_each_value(model.layer2, put);
    if (idx != out.size()) throw ShapeError("flatten_params: size mismatch");
}

void flatten_grads(const SiameseGradients& grads, std::span<double> out) {
    std::size_t idx = 0;
    auto put = [&](double v) { out[idx++] = v; };
    for_each_value(grads.layer1, put);
    for_each_value(grads.layer2, put);
    if (idx != out.size()) throw ShapeError("flatten_grads: size mismatch");
}

void unflatten_params(std::span<const double> flat, SiameseModel& model) {
    std::size_t idx = 0;
    auto get = [&](double& v) { v = flat[idx++]; };
    for_each_value_mut(model.layer1, get);
    for_each_value_mut(model.layer2, get);
    if (idx != flat.size()) throw ShapeError("unflatten_params: size mismatch");
}

}  // namespace passauth::neuralnet
