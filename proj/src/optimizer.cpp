#include "sparsegate/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace sparsegate {

Optimizer::Optimizer(OptimizerKind kind, double learning_rate, AdamParams adam,
                     const GatedNetwork& net)
    : kind_(kind), learning_rate_(learning_rate), adam_(adam) {
    if (!(learning_rate > 0.0)) {
        throw std::invalid_argument("Optimizer: learning rate must be positive");
    }
    if (kind_ == OptimizerKind::adam) {
        for (const auto& layer : net.layers) {
            weight_moments_.push_back({std::vector<double>(layer.weights.size(), 0.0),
                                       std::vector<double>(layer.weights.size(), 0.0)});
            bias_moments_.push_back({std::vector<double>(layer.bias.size(), 0.0),
                                     std::vector<double>(layer.bias.size(), 0.0)});
            gate_moments_.push_back({std::vector<double>(layer.gate_logits.size(), 0.0),
                                     std::vector<double>(layer.gate_logits.size(), 0.0)});
        }
    }
}

void Optimizer::adam_update(std::vector<double>& params, const std::vector<double>& grad,
                            Moments& moments) {
    const double corr1 = 1.0 - beta1_pow_;
    const double corr2 = 1.0 - beta2_pow_;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grad[i];
        moments.m[i] = adam_.beta1 * moments.m[i] + (1.0 - adam_.beta1) * g;
        moments.v[i] = adam_.beta2 * moments.v[i] + (1.0 - adam_.beta2) * g * g;
        const double m_hat = moments.m[i] / corr1;
        const double v_hat = moments.v[i] / corr2;
        params[i] -= learning_rate_ * m_hat / (std::sqrt(v_hat) + adam_.epsilon);
    }
}

void Optimizer::apply(GatedNetwork& net, const Gradients& grads, bool update_gate_logits) {
    if (grads.weights.size() != net.layers.size()) {
        throw std::invalid_argument("Optimizer::apply: gradient layer count mismatch");
    }
    if (kind_ == OptimizerKind::sgd) {
        for (std::size_t l = 0; l < net.layers.size(); ++l) {
            Layer& layer = net.layers[l];
            for (std::size_t i = 0; i < layer.weights.data.size(); ++i) {
                layer.weights.data[i] -= learning_rate_ * grads.weights[l].data[i];
            }
            for (std::size_t i = 0; i < layer.bias.size(); ++i) {
                layer.bias[i] -= learning_rate_ * grads.bias[l][i];
            }
            if (update_gate_logits) {
                for (std::size_t i = 0; i < layer.gate_logits.data.size(); ++i) {
                    layer.gate_logits.data[i] -= learning_rate_ * grads.gate_logits[l].data[i];
                }
            }
        }
        return;
    }

    ++step_;
    beta1_pow_ *= adam_.beta1;
    beta2_pow_ *= adam_.beta2;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        Layer& layer = net.layers[l];
        adam_update(layer.weights.data, grads.weights[l].data, weight_moments_[l]);
        adam_update(layer.bias, grads.bias[l], bias_moments_[l]);
        if (update_gate_logits) {
            adam_update(layer.gate_logits.data, grads.gate_logits[l].data, gate_moments_[l]);
        }
    }
}

}  // namespace sparsegate
