#pragma once

#include <cstdint>
#include <vector>

#include "sparsegate/data.hpp"
#include "sparsegate/network.hpp"
#include "sparsegate/optimizer.hpp"

namespace sparsegate {

enum class LossKind { softmax_xent, sigmoid_bce };

struct TrainConfig {
    double alpha = 10.0;           // sparsity loss weight
    double target_density = 1.0;   // in (0,1]
    double tau_start = 2.0;
    double tau_end = 0.5;
    int epochs = 10;
    int batch_size = 64;
    double learning_rate = 1e-3;
    OptimizerKind optimizer = OptimizerKind::adam;
    AdamParams adam;
    std::uint64_t seed = 0;
    LossKind loss = LossKind::softmax_xent;

    void validate() const;
};

struct LossParts {
    double total;
    double prediction;
    double sparsity;  // alpha * |mean gate - target density|, as it enters the total
};

struct EpochStats {
    int epoch;
    double prediction_loss;  // mean over the epoch's batches
    double sparsity_loss;
    double soft_density;
    double hard_density;
    double tau;
    double train_accuracy;   // deterministic-gate (MAP) network
    double test_accuracy;
    std::vector<double> layer_densities;  // per-layer MAP densities, for inspection
};

struct TrainReport {
    std::vector<EpochStats> epochs;
    double final_density = 0.0;
    long retained_count = 0;
    double final_test_accuracy = 0.0;
};

// Deterministic pruned network: masked weights, no sampling.
struct PrunedLayer {
    Matrix weights;  // entries already zeroed where mask == 0
    std::vector<double> bias;
    std::vector<std::uint8_t> mask;  // row-major, parallel to weights
};

struct PrunedNetwork {
    std::vector<LayerSpec> specs;
    std::vector<PrunedLayer> layers;

    Matrix forward(const Matrix& x) const;
    std::size_t gate_count() const;
    long retained_count() const;
    double density() const;
};

// Dual loss: prediction term per `loss` plus
// alpha * |mean(gate) - target_density| over the straight-through gate values
// that drove the forward pass. Targets: class-id column for softmax_xent,
// binary matrix for sigmoid_bce. Outputs are last-layer scores (logits).
LossParts total_loss(const Matrix& outputs, const Matrix& targets, const GateSample& gates,
                     const TrainConfig& cfg);

// d(prediction loss)/d(outputs); same conventions as total_loss.
Matrix prediction_loss_grad(const Matrix& outputs, const Matrix& targets, LossKind kind);

// Gradient of the sparsity term w.r.t. each gate logit, routed through the
// soft path of the sample. |.| subgradient at 0 is taken as 0. Added into
// `grad_out` in gate_params() flattening order.
void add_sparsity_gradient(const GateSample& gates, const TrainConfig& cfg,
                           double temperature, Gradients& grads);

// Geometric interpolation tau_start -> tau_end over the step range.
double temperature_at(long step, long total_steps, const TrainConfig& cfg);

// Jointly trains weights, biases and gate logits. Gates are sampled once per
// mini-batch; the temperature follows the geometric schedule; per-epoch
// accuracies are measured on the deterministic (MAP-mask) network. Throws
// NumericAbort on a non-finite loss. Deterministic given cfg.seed and data.
TrainReport fit(GatedNetwork& net, const Dataset& train, const Dataset& test,
                const TrainConfig& cfg);

// Same loop with gates pinned to a fixed mask: weights and biases train,
// gate logits are never updated.
TrainReport fit_pinned(GatedNetwork& net, const std::vector<std::uint8_t>& mask,
                       const Dataset& train, const Dataset& test, const TrainConfig& cfg);

// MAP mask applied: weights with gate off are zeroed, forward is sampling-free.
PrunedNetwork finalize(const GatedNetwork& net);

// Argmax match rate (softmax) or per-output threshold-0.5 match rate
// (sigmoid). The GatedNetwork overload evaluates the MAP-masked network.
double evaluate(const PrunedNetwork& net, const Dataset& ds, LossKind kind);
double evaluate(const GatedNetwork& net, const Dataset& ds, LossKind kind);

}  // namespace sparsegate
