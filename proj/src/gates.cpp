#include "sparsegate/gates.hpp"

#include <cmath>
#include <stdexcept>

namespace sparsegate {

double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double logit(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw std::invalid_argument("logit: argument must be in (0,1)");
    }
    return std::log(p) - std::log1p(-p);
}

GateParams::GateParams(std::vector<double> logits_, double temperature_)
    : logits(std::move(logits_)), temperature(temperature_) {
    if (!(temperature > 0.0)) {
        throw std::invalid_argument("GateParams: temperature must be positive");
    }
}

double gumbel_noise(Rng& rng) {
    return rng.gumbel();
}

double soft_gate(double logit_value, double temperature, double xi, double xi_prime) {
    return sigmoid((logit_value + xi - xi_prime) / temperature);
}

double soft_gate_grad_logit(double soft, double temperature) {
    return soft * (1.0 - soft) / temperature;
}

double hard_gate(double soft) {
    return soft > 0.5 ? 1.0 : 0.0;
}

GateSample sample_gates(const GateParams& params, Rng& rng) {
    const std::size_t d = params.size();
    GateSample sample;
    sample.hard.resize(d);
    sample.soft.resize(d);
    sample.noise_keep.resize(d);
    sample.noise_drop.resize(d);
    for (std::size_t i = 0; i < d; ++i) {
        const double xi = gumbel_noise(rng);
        const double xi_prime = gumbel_noise(rng);
        const double soft = soft_gate(params.logits[i], params.temperature, xi, xi_prime);
        sample.noise_keep[i] = xi;
        sample.noise_drop[i] = xi_prime;
        sample.soft[i] = soft;
        sample.hard[i] = hard_gate(soft);
    }
    return sample;
}

GateSample replay_gates(const GateParams& params, const std::vector<double>& noise_keep,
                        const std::vector<double>& noise_drop) {
    if (noise_keep.size() != params.size() || noise_drop.size() != params.size()) {
        throw std::invalid_argument("replay_gates: noise record size mismatch");
    }
    GateSample sample;
    sample.noise_keep = noise_keep;
    sample.noise_drop = noise_drop;
    sample.soft.resize(params.size());
    sample.hard.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        sample.soft[i] = soft_gate(params.logits[i], params.temperature, noise_keep[i],
                                   noise_drop[i]);
        sample.hard[i] = hard_gate(sample.soft[i]);
    }
    return sample;
}

GateSample pinned_sample(const std::vector<std::uint8_t>& mask) {
    GateSample sample;
    sample.hard.resize(mask.size());
    sample.soft.resize(mask.size());
    for (std::size_t i = 0; i < mask.size(); ++i) {
        const double v = mask[i] ? 1.0 : 0.0;
        sample.hard[i] = v;
        sample.soft[i] = v;
    }
    return sample;
}

}  // namespace sparsegate
