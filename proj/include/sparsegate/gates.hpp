#pragma once

#include <cstddef>
#include <vector>

#include "sparsegate/rng.hpp"

namespace sparsegate {

double sigmoid(double x);
double logit(double p);  // inverse of sigmoid; p must be in (0,1)

// Per-connection retention parameters. Retention probabilities are stored as
// unconstrained logits: retain_prob_i = sigmoid(logits[i]). This keeps the
// probability in (0,1) without projection and lets the soft sample collapse
// to a single sigmoid.
struct GateParams {
    std::vector<double> logits;
    double temperature;  // > 0, validated at construction

    GateParams(std::vector<double> logits_, double temperature_);

    std::size_t size() const { return logits.size(); }
};

// One realized gate vector. `hard` holds the {0,1} values used in the
// forward pass, `soft` the relaxed values in (0,1) that carry the gradient,
// and the recorded noise lets any consumer replay the draw exactly.
struct GateSample {
    std::vector<double> hard;
    std::vector<double> soft;
    std::vector<double> noise_keep;  // Gumbel draw on the "retain" side
    std::vector<double> noise_drop;  // Gumbel draw on the "drop" side

    std::size_t size() const { return hard.size(); }
};

// Gumbel(0,1) noise from the given stream.
double gumbel_noise(Rng& rng);

// Relaxed binary gate. Mathematically the two-term tempered softmax over
// {retain, drop} with Gumbel noise on each side; evaluated in the
// algebraically equivalent stable form sigmoid((logit + xi - xi_prime)/tau).
double soft_gate(double logit_value, double temperature, double xi, double xi_prime);

// d(soft_gate)/d(logit) at a given soft value: soft*(1-soft)/tau.
double soft_gate_grad_logit(double soft, double temperature);

// Hard sample from a soft gate: 1 if soft > 0.5, else 0 (ties prune).
// Gradient contract: the thresholding is transparent -- downstream code
// must propagate gradients as if the returned value were `soft` itself.
double hard_gate(double soft);

// Draws fresh (xi, xi') per gate and returns paired hard/soft vectors with
// the noise recorded.
GateSample sample_gates(const GateParams& params, Rng& rng);

// Rebuilds a sample from recorded noise -- same draw, possibly different
// parameters. This is what makes gradient replay and frozen-noise
// finite-difference checks possible.
GateSample replay_gates(const GateParams& params, const std::vector<double>& noise_keep,
                        const std::vector<double>& noise_drop);

// A pinned sample: hard == soft == mask value, no noise. Used where gates
// are fixed externally (pruned forward passes, random-mask baselines).
GateSample pinned_sample(const std::vector<std::uint8_t>& mask);

}  // namespace sparsegate
