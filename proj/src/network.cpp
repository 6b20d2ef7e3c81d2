#include "sparsegate/network.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace sparsegate {

std::size_t GatedNetwork::gate_count() const {
    std::size_t d = 0;
    for (const auto& spec : specs) {
        d += static_cast<std::size_t>(spec.output_size) * spec.input_size;
    }
    return d;
}

GateParams GatedNetwork::gate_params() const {
    std::vector<double> flat;
    flat.reserve(gate_count());
    for (const auto& layer : layers) {
        flat.insert(flat.end(), layer.gate_logits.data.begin(), layer.gate_logits.data.end());
    }
    return GateParams(std::move(flat), temperature);
}

GatedNetwork init_network(const std::vector<LayerSpec>& specs, double init_retain_prob,
                          Rng& rng) {
    if (specs.empty()) {
        throw std::invalid_argument("init_network: no layers");
    }
    for (std::size_t i = 0; i + 1 < specs.size(); ++i) {
        if (specs[i].output_size != specs[i + 1].input_size) {
            throw std::invalid_argument(
                "init_network: layer " + std::to_string(i) + " output size " +
                std::to_string(specs[i].output_size) + " does not match layer " +
                std::to_string(i + 1) + " input size " +
                std::to_string(specs[i + 1].input_size));
        }
    }
    for (const auto& spec : specs) {
        if (spec.input_size < 1 || spec.output_size < 1) {
            throw std::invalid_argument("init_network: layer sizes must be >= 1");
        }
    }

    const double phi0 = logit(init_retain_prob);
    GatedNetwork net;
    net.specs = specs;
    net.layers.reserve(specs.size());
    for (const auto& spec : specs) {
        Layer layer;
        layer.weights = Matrix(spec.output_size, spec.input_size);
        const double scale = std::sqrt(2.0 / spec.input_size);
        for (auto& w : layer.weights.data) {
            w = scale * rng.normal();
        }
        layer.bias.assign(spec.output_size, 0.0);
        layer.gate_logits = Matrix(spec.output_size, spec.input_size, phi0);
        net.layers.push_back(std::move(layer));
    }
    return net;
}

namespace {

// Effective weights for one layer: W (.) g, with g sliced at `offset`.
Matrix effective_weights(const Layer& layer, const GateSample& gates, std::size_t offset,
                         GateMode mode) {
    const std::vector<double>& g = (mode == GateMode::hard) ? gates.hard : gates.soft;
    Matrix eff = layer.weights;
    for (std::size_t i = 0; i < eff.data.size(); ++i) {
        eff.data[i] *= g[offset + i];
    }
    return eff;
}

}  // namespace

Matrix forward(const GatedNetwork& net, const GateSample& gates, const Matrix& x,
               ForwardTape* tape, GateMode mode) {
    if (x.cols != net.input_size()) {
        throw std::invalid_argument("forward: input width " + std::to_string(x.cols) +
                                    " does not match network input size " +
                                    std::to_string(net.input_size()));
    }
    if (gates.size() != net.gate_count()) {
        throw std::invalid_argument("forward: gate sample size mismatch");
    }

    if (tape) {
        tape->input = x;
        tape->pre_activations.clear();
        tape->activations.clear();
        tape->gates = gates;
        tape->mode = mode;
        tape->temperature = net.temperature;
    }

    Matrix h = x;
    std::size_t offset = 0;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const Layer& layer = net.layers[l];
        const LayerSpec& spec = net.specs[l];
        const Matrix eff = effective_weights(layer, gates, offset, mode);
        offset += eff.data.size();

        Matrix z(h.rows, spec.output_size);
        for (int n = 0; n < h.rows; ++n) {
            const double* hrow = h.row(n);
            double* zrow = z.row(n);
            for (int o = 0; o < spec.output_size; ++o) {
                const double* wrow = eff.row(o);
                double acc = layer.bias[o];
                for (int k = 0; k < spec.input_size; ++k) {
                    acc += wrow[k] * hrow[k];
                }
                zrow[o] = acc;
            }
        }

        Matrix a = z;
        if (spec.activation == Activation::relu) {
            for (auto& v : a.data) {
                if (v < 0.0) v = 0.0;
            }
        }
        if (tape) {
            tape->pre_activations.push_back(z);
            tape->activations.push_back(a);
        }
        h = std::move(a);
    }
    return h;
}

Gradients backward(const GatedNetwork& net, const ForwardTape& tape,
                   const Matrix& output_grad) {
    const std::size_t L = net.layers.size();
    if (tape.activations.size() != L || tape.pre_activations.size() != L) {
        throw std::invalid_argument("backward: tape does not match network depth");
    }
    if (!output_grad.same_shape(tape.activations.back())) {
        throw std::invalid_argument("backward: output gradient shape mismatch");
    }
    if (tape.gates.size() != net.gate_count()) {
        throw std::invalid_argument("backward: stale tape (gate count mismatch)");
    }

    Gradients grads;
    grads.weights.resize(L);
    grads.bias.resize(L);
    grads.gate_logits.resize(L);

    // Per-layer gate offsets in the flattened sample.
    std::vector<std::size_t> offsets(L);
    std::size_t off = 0;
    for (std::size_t l = 0; l < L; ++l) {
        offsets[l] = off;
        off += net.layers[l].weights.data.size();
    }

    Matrix upstream = output_grad;  // dLoss/d(activation of current layer)
    for (std::size_t li = L; li-- > 0;) {
        const Layer& layer = net.layers[li];
        const LayerSpec& spec = net.specs[li];
        const Matrix& z = tape.pre_activations[li];
        const Matrix& h_prev = (li == 0) ? tape.input : tape.activations[li - 1];
        const int batch = upstream.rows;

        // dz = upstream (.) act'(z)
        Matrix dz = upstream;
        if (spec.activation == Activation::relu) {
            for (std::size_t i = 0; i < dz.data.size(); ++i) {
                if (z.data[i] <= 0.0) dz.data[i] = 0.0;
            }
        }

        // Gradient w.r.t. the effective (gated) weights.
        Matrix d_eff(spec.output_size, spec.input_size);
        std::vector<double> db(spec.output_size, 0.0);
        for (int n = 0; n < batch; ++n) {
            const double* dzrow = dz.row(n);
            const double* hrow = h_prev.row(n);
            for (int o = 0; o < spec.output_size; ++o) {
                const double g = dzrow[o];
                if (g == 0.0) continue;
                db[o] += g;
                double* drow = d_eff.row(o);
                for (int k = 0; k < spec.input_size; ++k) {
                    drow[k] += g * hrow[k];
                }
            }
        }

        // Split d_eff into weight and gate-logit gradients. eff = W * g with
        // g the forward-mode gate value; the gate side routes through the
        // soft path: d(eff)/d(soft) = W, d(soft)/d(logit) = s(1-s)/tau.
        const std::vector<double>& g_used =
            (tape.mode == GateMode::hard) ? tape.gates.hard : tape.gates.soft;
        const std::size_t offset = offsets[li];
        Matrix dW(spec.output_size, spec.input_size);
        Matrix dphi(spec.output_size, spec.input_size);
        for (std::size_t i = 0; i < d_eff.data.size(); ++i) {
            const double de = d_eff.data[i];
            dW.data[i] = de * g_used[offset + i];
            const double soft = tape.gates.soft[offset + i];
            dphi.data[i] = de * layer.weights.data[i] *
                           soft_gate_grad_logit(soft, tape.temperature);
        }

        // Propagate to the previous layer's activations.
        if (li > 0) {
            const Matrix eff = [&] {
                const std::vector<double>& g = g_used;
                Matrix e = layer.weights;
                for (std::size_t i = 0; i < e.data.size(); ++i) {
                    e.data[i] *= g[offset + i];
                }
                return e;
            }();
            Matrix dh(batch, spec.input_size);
            for (int n = 0; n < batch; ++n) {
                const double* dzrow = dz.row(n);
                double* dhrow = dh.row(n);
                for (int o = 0; o < spec.output_size; ++o) {
                    const double g = dzrow[o];
                    if (g == 0.0) continue;
                    const double* wrow = eff.row(o);
                    for (int k = 0; k < spec.input_size; ++k) {
                        dhrow[k] += g * wrow[k];
                    }
                }
            }
            upstream = std::move(dh);
        }

        grads.weights[li] = std::move(dW);
        grads.bias[li] = std::move(db);
        grads.gate_logits[li] = std::move(dphi);
    }
    return grads;
}

double effective_density(const GateSample& gates, DensityMode mode) {
    const std::vector<double>& g = (mode == DensityMode::hard) ? gates.hard : gates.soft;
    if (g.empty()) return 0.0;
    double sum = 0.0;
    for (double v : g) sum += v;
    return sum / static_cast<double>(g.size());
}

std::vector<std::uint8_t> deterministic_gates(const GatedNetwork& net) {
    std::vector<std::uint8_t> mask;
    mask.reserve(net.gate_count());
    for (const auto& layer : net.layers) {
        for (double phi : layer.gate_logits.data) {
            mask.push_back(phi >= 0.0 ? 1 : 0);
        }
    }
    return mask;
}

}  // namespace sparsegate
