#ifndef PASSAUTH_LSTM_HPP
#define PASSAUTH_LSTM_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "passauth/linalg.hpp"

namespace passauth::neuralnet {

// Weights for one gate: input projection W, recurrent projection U, bias b.
struct GateParams {
    Matrix input_weights;      // hidden_width x input_width
    Matrix recurrent_weights;  // hidden_width x hidden_width
    Vector bias;               // hidden_width
};

struct LstmLayerParams {
    std::size_t input_width = 0;
    std::size_t hidden_width = 0;
    GateParams input_gate;   // i
    GateParams forget_gate;  // f
    GateParams output_gate;  // o
    GateParams candidate;    // g

    static LstmLayerParams zeros(std::size_t input_width, std::size_t hidden_width);
};

// Two stacked LSTM layers shared by both branches of the Siamese pair, plus
// the contrastive margin.
struct SiameseModel {
    LstmLayerParams layer1;  // input_width = feature width D'
    LstmLayerParams layer2;  // input_width = layer1.hidden_width = C
    double margin = 1.0;

    std::size_t feature_width() const { return layer1.input_width; }
    std::size_t embedding_width() const { return layer2.hidden_width; }
};

// Gradient container congruent to the trainable parameters (margin excluded).
struct SiameseGradients {
    LstmLayerParams layer1;
    LstmLayerParams layer2;

    static SiameseGradients zeros_like(const SiameseModel& model);
};

// Per-step activations kept for backpropagation through time.
struct LstmStepCache {
    Vector i, f, o, g;  // gate activations
    Vector c;           // cell state
    Vector tanh_c;
    Vector h;
};

struct LstmForwardCache {
    std::vector<Vector> inputs;
    std::vector<LstmStepCache> steps;
};

// Standard LSTM recurrence with h_0 = c_0 = 0. Returns h_1..h_T.
std::vector<Vector> lstm_layer_forward(const LstmLayerParams& params,
                                       const std::vector<Vector>& inputs,
                                       LstmForwardCache* cache = nullptr);

// f_theta: layer2's final hidden state after feeding layer1's output sequence.
Vector embed(const SiameseModel& model, const Matrix& features);

// ||f(a) - f(b)||_2
double pair_distance(const SiameseModel& model, const Matrix& features_a,
                     const Matrix& features_b);

// (1-y) * d^2/2 + y * max(0, margin - d)^2 / 2, label 0 = same user.
double contrastive_loss(double distance, int label, double margin);

struct PairExample {
    const Matrix* a = nullptr;
    const Matrix* b = nullptr;
    int label = 0;  // 0 genuine, 1 impostor
};

// Gradient of the MEAN contrastive loss over the batch with respect to every
// parameter, both branches accumulated into the shared weights. Returns the
// mean loss.
double backward(const SiameseModel& model, std::span<const PairExample> batch,
                SiameseGradients& grads);

struct ModelWidths {
    std::size_t feature_width = 0;    // D'
    std::size_t embedding_width = 0;  // C
};

// Uniform [-1/sqrt(fan_in), 1/sqrt(fan_in)] weights, forget-gate bias 1,
// other biases 0. Deterministic per seed.
SiameseModel init_params(std::uint64_t seed, const ModelWidths& widths,
                         double margin = 1.0);

// Parameter traversal in the documented order: per layer (1 then 2), per gate
// (i, f, o, g), W then U then b.
std::size_t parameter_count(const SiameseModel& model);
void flatten_params(const SiameseModel& model, std::span<double> out);
void flatten_grads(const SiameseGradients& grads, std::span<double> out);
void unflatten_params(std::span<const double> flat, SiameseModel& model);

}  // namespace passauth::neuralnet

#endif
