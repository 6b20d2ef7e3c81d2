#include "sparsegate/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <stdexcept>
#include <string>

namespace sparsegate {

void TrainConfig::validate() const {
    if (alpha < 0.0) throw ConfigError("alpha must be non-negative");
    if (!(target_density > 0.0 && target_density <= 1.0)) {
        throw ConfigError("target_density must be in (0,1]");
    }
    if (!(tau_end > 0.0) || tau_start < tau_end) {
        throw ConfigError("temperatures must satisfy tau_start >= tau_end > 0");
    }
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
}

namespace {

double softmax_xent(const Matrix& outputs, const Matrix& targets) {
    if (targets.cols != 1 || targets.rows != outputs.rows) {
        throw std::invalid_argument("softmax_xent: targets must be one class-id column");
    }
    double loss = 0.0;
    for (int n = 0; n < outputs.rows; ++n) {
        const double* z = outputs.row(n);
        double zmax = z[0];
        for (int c = 1; c < outputs.cols; ++c) zmax = std::max(zmax, z[c]);
        double sum = 0.0;
        for (int c = 0; c < outputs.cols; ++c) sum += std::exp(z[c] - zmax);
        const int y = static_cast<int>(targets(n, 0));
        if (y < 0 || y >= outputs.cols) {
            throw std::invalid_argument("softmax_xent: class id out of range");
        }
        loss += zmax + std::log(sum) - z[y];
    }
    return loss / outputs.rows;
}

double sigmoid_bce(const Matrix& outputs, const Matrix& targets) {
    if (!outputs.same_shape(targets)) {
        throw std::invalid_argument("sigmoid_bce: target shape mismatch");
    }
    double loss = 0.0;
    for (std::size_t i = 0; i < outputs.data.size(); ++i) {
        const double z = outputs.data[i];
        const double y = targets.data[i];
        // max(z,0) - z*y + log(1+exp(-|z|))
        loss += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
    }
    return loss / static_cast<double>(outputs.data.size());
}

}  // namespace

LossParts total_loss(const Matrix& outputs, const Matrix& targets, const GateSample& gates,
                     const TrainConfig& cfg) {
    LossParts parts;
    parts.prediction = (cfg.loss == LossKind::softmax_xent) ? softmax_xent(outputs, targets)
                                                            : sigmoid_bce(outputs, targets);
    const double density = effective_density(gates, DensityMode::hard);
    parts.sparsity = cfg.alpha * std::abs(density - cfg.target_density);
    parts.total = parts.prediction + parts.sparsity;
    return parts;
}

Matrix prediction_loss_grad(const Matrix& outputs, const Matrix& targets, LossKind kind) {
    Matrix grad(outputs.rows, outputs.cols);
    if (kind == LossKind::softmax_xent) {
        for (int n = 0; n < outputs.rows; ++n) {
            const double* z = outputs.row(n);
            double* g = grad.row(n);
            double zmax = z[0];
            for (int c = 1; c < outputs.cols; ++c) zmax = std::max(zmax, z[c]);
            double sum = 0.0;
            for (int c = 0; c < outputs.cols; ++c) {
                g[c] = std::exp(z[c] - zmax);
                sum += g[c];
            }
            const int y = static_cast<int>(targets(n, 0));
            for (int c = 0; c < outputs.cols; ++c) {
                g[c] = (g[c] / sum - (c == y ? 1.0 : 0.0)) / outputs.rows;
            }
        }
    } else {
        const double scale = 1.0 / static_cast<double>(outputs.data.size());
        for (std::size_t i = 0; i < outputs.data.size(); ++i) {
            grad.data[i] = (sigmoid(outputs.data[i]) - targets.data[i]) * scale;
        }
    }
    return grad;
}

void add_sparsity_gradient(const GateSample& gates, const TrainConfig& cfg,
                           double temperature, Gradients& grads) {
    const double density = effective_density(gates, DensityMode::hard);
    const double diff = density - cfg.target_density;
    if (diff == 0.0 || cfg.alpha == 0.0) return;  // |.| subgradient at 0: 0
    const double sign = diff > 0.0 ? 1.0 : -1.0;
    const double scale = cfg.alpha * sign / static_cast<double>(gates.size());
    std::size_t offset = 0;
    for (auto& dphi : grads.gate_logits) {
        for (std::size_t i = 0; i < dphi.data.size(); ++i) {
            const double soft = gates.soft[offset + i];
            dphi.data[i] += scale * soft_gate_grad_logit(soft, temperature);
        }
        offset += dphi.data.size();
    }
}

double temperature_at(long step, long total_steps, const TrainConfig& cfg) {
    if (total_steps <= 0) return cfg.tau_end;
    const double t = std::clamp(static_cast<double>(step) / static_cast<double>(total_steps),
                                0.0, 1.0);
    return cfg.tau_start * std::pow(cfg.tau_end / cfg.tau_start, t);
}

namespace {

Matrix gather_rows(const Matrix& src, const std::vector<long>& ids, long begin, long end) {
    Matrix out(static_cast<int>(end - begin), src.cols);
    for (long i = begin; i < end; ++i) {
        std::memcpy(out.row(static_cast<int>(i - begin)), src.row(ids[i]),
                    sizeof(double) * src.cols);
    }
    return out;
}

PrunedNetwork apply_mask(const GatedNetwork& net, const std::vector<std::uint8_t>& mask) {
    PrunedNetwork pruned;
    pruned.specs = net.specs;
    std::size_t offset = 0;
    for (const auto& layer : net.layers) {
        PrunedLayer pl;
        pl.weights = layer.weights;
        pl.bias = layer.bias;
        pl.mask.assign(mask.begin() + offset, mask.begin() + offset + layer.weights.size());
        for (std::size_t i = 0; i < pl.weights.data.size(); ++i) {
            if (!pl.mask[i]) pl.weights.data[i] = 0.0;
        }
        offset += layer.weights.size();
        pruned.layers.push_back(std::move(pl));
    }
    return pruned;
}

std::vector<double> per_layer_densities(const GatedNetwork& net,
                                        const std::vector<std::uint8_t>& mask) {
    std::vector<double> densities;
    std::size_t offset = 0;
    for (const auto& layer : net.layers) {
        const std::size_t count = layer.weights.size();
        long on = 0;
        for (std::size_t i = 0; i < count; ++i) {
            on += mask[offset + i];
        }
        densities.push_back(static_cast<double>(on) / static_cast<double>(count));
        offset += count;
    }
    return densities;
}

void check_dataset(const GatedNetwork& net, const Dataset& ds, LossKind kind,
                   const char* which) {
    if (ds.feature_width() != net.input_size()) {
        throw std::invalid_argument(std::string(which) + " set width " +
                                    std::to_string(ds.feature_width()) +
                                    " does not match network input size " +
                                    std::to_string(net.input_size()));
    }
    if (kind == LossKind::sigmoid_bce && ds.labels.cols != net.output_size()) {
        throw std::invalid_argument(std::string(which) +
                                    " set label columns do not match network outputs");
    }
    if (kind == LossKind::softmax_xent && ds.labels.cols != 1) {
        throw std::invalid_argument(std::string(which) +
                                    " set must carry class-id labels for softmax loss");
    }
}

TrainReport fit_impl(GatedNetwork& net, const std::vector<std::uint8_t>* pinned_mask,
                     const Dataset& train, const Dataset& test, const TrainConfig& cfg) {
    cfg.validate();
    check_dataset(net, train, cfg.loss, "train");
    check_dataset(net, test, cfg.loss, "test");
    if (pinned_mask && pinned_mask->size() != net.gate_count()) {
        throw std::invalid_argument("fit: pinned mask size does not match gate count");
    }

    const long n = train.n();
    const long batches_per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
    const long total_steps = batches_per_epoch * cfg.epochs;

    Rng base(cfg.seed);
    Rng shuffle_rng = base.stream(1);
    Rng gate_rng = base.stream(2);

    Optimizer optimizer(cfg.optimizer, cfg.learning_rate, cfg.adam, net);
    const GateSample pinned = pinned_mask ? pinned_sample(*pinned_mask) : GateSample{};

    TrainReport report;
    std::vector<long> order(n);
    std::iota(order.begin(), order.end(), 0L);

    long step = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (long i = n - 1; i > 0; --i) {
            const long j =
                static_cast<long>(shuffle_rng.next_u64() % static_cast<std::uint64_t>(i + 1));
            std::swap(order[i], order[j]);
        }

        double pred_sum = 0.0, sparsity_sum = 0.0, soft_sum = 0.0, hard_sum = 0.0;
        double tau = net.temperature;
        for (long b = 0; b < batches_per_epoch; ++b, ++step) {
            const long begin = b * cfg.batch_size;
            const long end = std::min(begin + cfg.batch_size, n);
            const Matrix x = gather_rows(train.features, order, begin, end);
            const Matrix y = gather_rows(train.labels, order, begin, end);

            tau = temperature_at(step, total_steps, cfg);
            net.temperature = tau;
            const GateSample sample =
                pinned_mask ? pinned : sample_gates(net.gate_params(), gate_rng);

            ForwardTape tape;
            const Matrix outputs = forward(net, sample, x, &tape);
            const LossParts loss = total_loss(outputs, y, sample, cfg);
            if (!std::isfinite(loss.total)) {
                throw NumericAbort(epoch, b,
                                   "non-finite loss at epoch " + std::to_string(epoch) +
                                       ", batch " + std::to_string(b));
            }

            const Matrix output_grad = prediction_loss_grad(outputs, y, cfg.loss);
            Gradients grads = backward(net, tape, output_grad);
            if (!pinned_mask) {
                add_sparsity_gradient(sample, cfg, tau, grads);
            }
            optimizer.apply(net, grads, /*update_gate_logits=*/pinned_mask == nullptr);

            pred_sum += loss.prediction;
            sparsity_sum += loss.sparsity;
            soft_sum += effective_density(sample, DensityMode::soft);
            hard_sum += effective_density(sample, DensityMode::hard);
        }

        const std::vector<std::uint8_t> eval_mask =
            pinned_mask ? *pinned_mask : deterministic_gates(net);
        const PrunedNetwork snapshot = apply_mask(net, eval_mask);

        EpochStats stats;
        stats.epoch = epoch;
        stats.prediction_loss = pred_sum / static_cast<double>(batches_per_epoch);
        stats.sparsity_loss = sparsity_sum / static_cast<double>(batches_per_epoch);
        stats.soft_density = soft_sum / static_cast<double>(batches_per_epoch);
        stats.hard_density = hard_sum / static_cast<double>(batches_per_epoch);
        stats.tau = tau;
        stats.train_accuracy = evaluate(snapshot, train, cfg.loss);
        stats.test_accuracy = evaluate(snapshot, test, cfg.loss);
        stats.layer_densities = per_layer_densities(net, eval_mask);
        report.epochs.push_back(std::move(stats));
    }

    const std::vector<std::uint8_t> final_mask =
        pinned_mask ? *pinned_mask : deterministic_gates(net);
    const PrunedNetwork final_net = apply_mask(net, final_mask);
    report.final_density = final_net.density();
    report.retained_count = final_net.retained_count();
    report.final_test_accuracy = evaluate(final_net, test, cfg.loss);
    return report;
}

}  // namespace

TrainReport fit(GatedNetwork& net, const Dataset& train, const Dataset& test,
                const TrainConfig& cfg) {
    return fit_impl(net, nullptr, train, test, cfg);
}

TrainReport fit_pinned(GatedNetwork& net, const std::vector<std::uint8_t>& mask,
                       const Dataset& train, const Dataset& test, const TrainConfig& cfg) {
    return fit_impl(net, &mask, train, test, cfg);
}

PrunedNetwork finalize(const GatedNetwork& net) {
    return apply_mask(net, deterministic_gates(net));
}

Matrix PrunedNetwork::forward(const Matrix& x) const {
    if (x.cols != specs.front().input_size) {
        throw std::invalid_argument("PrunedNetwork::forward: input width mismatch");
    }
    Matrix h = x;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const PrunedLayer& layer = layers[l];
        const LayerSpec& spec = specs[l];
        Matrix z(h.rows, spec.output_size);
        for (int n = 0; n < h.rows; ++n) {
            const double* hrow = h.row(n);
            double* zrow = z.row(n);
            for (int o = 0; o < spec.output_size; ++o) {
                const double* wrow = layer.weights.row(o);
                double acc = layer.bias[o];
                for (int k = 0; k < spec.input_size; ++k) {
                    acc += wrow[k] * hrow[k];
                }
                zrow[o] = acc;
            }
        }
        if (spec.activation == Activation::relu) {
            for (auto& v : z.data) {
                if (v < 0.0) v = 0.0;
            }
        }
        h = std::move(z);
    }
    return h;
}

std::size_t PrunedNetwork::gate_count() const {
    std::size_t d = 0;
    for (const auto& layer : layers) d += layer.mask.size();
    return d;
}

long PrunedNetwork::retained_count() const {
    long on = 0;
    for (const auto& layer : layers) {
        for (std::uint8_t m : layer.mask) on += m;
    }
    return on;
}

double PrunedNetwork::density() const {
    const std::size_t d = gate_count();
    return d == 0 ? 0.0 : static_cast<double>(retained_count()) / static_cast<double>(d);
}

namespace {

double accuracy_of_outputs(const Matrix& outputs, const Matrix& labels, LossKind kind,
                           long* correct_entries, long* total_entries) {
    if (kind == LossKind::softmax_xent) {
        for (int n = 0; n < outputs.rows; ++n) {
            const double* z = outputs.row(n);
            int best = 0;
            for (int c = 1; c < outputs.cols; ++c) {
                if (z[c] > z[best]) best = c;
            }
            *correct_entries += (best == static_cast<int>(labels(n, 0))) ? 1 : 0;
            ++(*total_entries);
        }
    } else {
        for (std::size_t i = 0; i < outputs.data.size(); ++i) {
            const bool predicted = outputs.data[i] > 0.0;  // sigmoid(z) > 0.5
            const bool actual = labels.data[i] > 0.5;
            *correct_entries += (predicted == actual) ? 1 : 0;
            ++(*total_entries);
        }
    }
    return 0.0;
}

}  // namespace

double evaluate(const PrunedNetwork& net, const Dataset& ds, LossKind kind) {
    if (ds.n() == 0) {
        throw std::invalid_argument("evaluate: empty dataset");
    }
    constexpr int kChunk = 512;
    long correct = 0, total = 0;
    for (int begin = 0; begin < ds.n(); begin += kChunk) {
        const int end = std::min(begin + kChunk, ds.n());
        Matrix x(end - begin, ds.features.cols);
        Matrix y(end - begin, ds.labels.cols);
        std::memcpy(x.data.data(), ds.features.row(begin),
                    sizeof(double) * x.data.size());
        std::memcpy(y.data.data(), ds.labels.row(begin), sizeof(double) * y.data.size());
        const Matrix outputs = net.forward(x);
        accuracy_of_outputs(outputs, y, kind, &correct, &total);
    }
    return static_cast<double>(correct) / static_cast<double>(total);
}

double evaluate(const GatedNetwork& net, const Dataset& ds, LossKind kind) {
    return evaluate(finalize(net), ds, kind);
}

}  // namespace sparsegate
