#pragma once

#include <vector>

#include "sparsegate/network.hpp"

namespace sparsegate {

enum class OptimizerKind { sgd, adam };

struct AdamParams {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// First-order optimizer over all trainable tensors of a GatedNetwork
// (weights, biases, gate logits). Adam keeps per-parameter moment estimates
// with the usual bias correction; SGD is the plain update.
class Optimizer {
public:
    Optimizer(OptimizerKind kind, double learning_rate, AdamParams adam,
              const GatedNetwork& net);

    // One step. When update_gate_logits is false the gate logits (and their
    // moment state) are left untouched -- used for fixed-mask training.
    void apply(GatedNetwork& net, const Gradients& grads, bool update_gate_logits = true);

private:
    struct Moments {
        std::vector<double> m;
        std::vector<double> v;
    };

    void adam_update(std::vector<double>& params, const std::vector<double>& grad,
                     Moments& moments);

    OptimizerKind kind_;
    double learning_rate_;
    AdamParams adam_;
    long step_ = 0;
    double beta1_pow_ = 1.0;
    double beta2_pow_ = 1.0;
    std::vector<Moments> weight_moments_;
    std::vector<Moments> bias_moments_;
    std::vector<Moments> gate_moments_;
};

}  // namespace sparsegate
