#pragma once

#include <cstdint>
#include <vector>

#include "sparsegate/gates.hpp"
#include "sparsegate/matrix.hpp"

namespace sparsegate {

enum class Activation { relu, identity };

struct LayerSpec {
    int input_size;
    int output_size;
    Activation activation;
};

// One dense layer with a gate logit per weight. Biases are not gated:
// connections define the topology, biases are per-neuron offsets.
struct Layer {
    Matrix weights;      // output_size x input_size
    std::vector<double> bias;
    Matrix gate_logits;  // same shape as weights
};

struct GatedNetwork {
    std::vector<LayerSpec> specs;
    std::vector<Layer> layers;
    double temperature = 1.0;

    int input_size() const { return specs.front().input_size; }
    int output_size() const { return specs.back().output_size; }
    std::size_t gate_count() const;

    // Gate logits flattened layer by layer, row-major within a layer. This
    // ordering is the contract between GateSample vectors and the per-layer
    // matrices everywhere in the library.
    GateParams gate_params() const;
};

// Which gate value multiplies the weights in a forward pass. Training uses
// `hard` (straight-through); `soft` makes the whole network differentiable
// end to end, which is what finite-difference checks need.
enum class GateMode { hard, soft };

// Everything backward() needs to reproduce the forward pass exactly.
struct ForwardTape {
    Matrix input;
    std::vector<Matrix> pre_activations;
    std::vector<Matrix> activations;
    GateSample gates;
    GateMode mode = GateMode::hard;
    double temperature = 1.0;
};

struct Gradients {
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> bias;
    std::vector<Matrix> gate_logits;
};

// Fresh network: weights ~ Normal(0, sqrt(2/fan_in)) (He scaling for the
// ReLU hidden layers), biases zero, every gate logit = logit(init_retain_prob).
GatedNetwork init_network(const std::vector<LayerSpec>& specs, double init_retain_prob,
                          Rng& rng);

// Batched forward pass: per layer a = act((W (.) g) h + b), where g is the
// hard (or soft) gate vector slice for that layer. x is batch x input_size;
// the returned matrix holds last-layer pre-softmax scores. When `tape` is
// non-null it is filled for a later backward().
Matrix forward(const GatedNetwork& net, const GateSample& gates, const Matrix& x,
               ForwardTape* tape = nullptr, GateMode mode = GateMode::hard);

// Reverse pass. Weight gradients are gated by the value used in the forward
// pass; gate-logit gradients follow the straight-through contract: the
// gradient reaching a gate value is routed through the soft path,
// d(soft)/d(logit) = soft*(1-soft)/tau, regardless of mode.
Gradients backward(const GatedNetwork& net, const ForwardTape& tape,
                   const Matrix& output_grad);

enum class DensityMode { hard, soft };

// Mean gate value over all gates -- global, not per layer.
double effective_density(const GateSample& gates, DensityMode mode);

// MAP mask: gate on iff sigmoid(logit) >= 0.5, i.e. logit >= 0. Flattened in
// gate_params() order.
std::vector<std::uint8_t> deterministic_gates(const GatedNetwork& net);

}  // namespace sparsegate
