// Acceptance suite: runs every criterion end to end and prints one
// PASS/FAIL/SKIP line per criterion. Returns the number of failures.
//
// The two MNIST-backed criteria (7, 8) and the heatmap criterion (10) that
// feeds off criterion 8's model need the four IDX files; point
// SPARSEGATE_MNIST_DIR at them (or place them under data/mnist/). Without
// the files those criteria are reported as SKIP, with every threshold still
// pinned in code below.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <filesystem>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "sparsegate/baseline.hpp"
#include "sparsegate/interpret.hpp"
#include "sparsegate/train.hpp"

using namespace sparsegate;

namespace {

struct Outcome {
    int id;
    std::string name;
    std::string status;  // PASS / FAIL / SKIP
    std::string detail;
};

std::vector<Outcome> outcomes;

void record(int id, const std::string& name, bool pass, const std::string& detail) {
    outcomes.push_back({id, name, pass ? "PASS" : "FAIL", detail});
}

void record_skip(int id, const std::string& name, const std::string& detail) {
    outcomes.push_back({id, name, "SKIP", detail});
}

std::string fmt(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

// ---------------------------------------------------------------------------
// Criterion 1: gradient correctness on random small gated networks.

void criterion_gradients() {
    Rng meta(90001);
    double worst_rel = 0.0;
    bool pass = true;
    const double h = 1e-6;
    for (int trial = 0; trial < 100 && pass; ++trial) {
        const int depth = 2 + static_cast<int>(meta.next_u64() % 2);
        std::vector<LayerSpec> specs;
        int width = 2 + static_cast<int>(meta.next_u64() % 7);
        for (int l = 0; l < depth; ++l) {
            const int next = 2 + static_cast<int>(meta.next_u64() % 7);
            specs.push_back({width, next,
                             l + 1 == depth ? Activation::identity : Activation::relu});
            width = next;
        }
        Rng init = meta.stream(trial);
        GatedNetwork net = init_network(specs, 0.5, init);
        net.temperature = 0.4 + meta.uniform();
        // Nonzero biases keep pre-activations off the ReLU kink, where a
        // finite-difference step would straddle the nondifferentiable point.
        for (auto& layer : net.layers) {
            for (auto& b : layer.bias) b = 0.4 * meta.uniform() - 0.2;
        }

        Matrix x(3, specs.front().input_size);
        for (auto& v : x.data) v = 2.0 * meta.uniform() - 1.0;
        Rng gate_rng = meta.stream(1000 + trial);
        const GateSample sample = sample_gates(net.gate_params(), gate_rng);

        ForwardTape tape;
        const Matrix out = forward(net, sample, x, &tape, GateMode::soft);
        Matrix dout = out;
        for (auto& v : dout.data) v *= 2.0;
        const Gradients grads = backward(net, tape, dout);

        auto loss_now = [&](const GateSample& s) {
            const Matrix o = forward(net, s, x, nullptr, GateMode::soft);
            double acc = 0.0;
            for (double v : o.data) acc += v * v;
            return acc;
        };
        // Central differences cannot resolve below ~eps*loss/h; entries with
        // gradients under that floor are compared absolutely against it.
        const double noise_floor = std::max(
            8.0 * std::numeric_limits<double>::epsilon() * std::abs(loss_now(sample)) / h,
            1e-12);
        auto check = [&](double analytic, double fd) {
            const double scale = std::max(std::abs(analytic), std::abs(fd));
            if (std::abs(analytic - fd) > std::max(1e-5 * scale, noise_floor)) {
                pass = false;
            }
            if (scale > 1e-3) {
                worst_rel = std::max(worst_rel, std::abs(analytic - fd) / scale);
            }
        };

        for (std::size_t l = 0; l < net.layers.size() && pass; ++l) {
            for (std::size_t i = 0; i < net.layers[l].weights.data.size() && pass; ++i) {
                double& w = net.layers[l].weights.data[i];
                const double orig = w;
                w = orig + h;
                const double up = loss_now(sample);
                w = orig - h;
                const double down = loss_now(sample);
                w = orig;
                check(grads.weights[l].data[i], (up - down) / (2 * h));
            }
            for (std::size_t i = 0; i < net.layers[l].bias.size() && pass; ++i) {
                double& b = net.layers[l].bias[i];
                const double orig = b;
                b = orig + h;
                const double up = loss_now(sample);
                b = orig - h;
                const double down = loss_now(sample);
                b = orig;
                check(grads.bias[l][i], (up - down) / (2 * h));
            }
            for (std::size_t i = 0; i < net.layers[l].gate_logits.data.size() && pass; ++i) {
                double& phi = net.layers[l].gate_logits.data[i];
                const double orig = phi;
                phi = orig + h;
                const GateSample up_s =
                    replay_gates(net.gate_params(), sample.noise_keep, sample.noise_drop);
                const double up = loss_now(up_s);
                phi = orig - h;
                const GateSample down_s =
                    replay_gates(net.gate_params(), sample.noise_keep, sample.noise_drop);
                const double down = loss_now(down_s);
                phi = orig;
                check(grads.gate_logits[l].data[i], (up - down) / (2 * h));
            }
        }
    }
    record(1, "gradient-correctness", pass,
           "100 random nets, frozen noise, max rel err " + fmt(worst_rel) + " (< 1e-5)");
}

// ---------------------------------------------------------------------------
// Criterion 2: hard-sample retention statistics at low temperature.

void criterion_gate_statistics() {
    bool pass = true;
    std::string detail;
    for (double p : {0.1, 0.5, 0.9}) {
        const double phi = (p == 0.5) ? 0.0 : logit(p);
        GateParams params({phi}, 0.1);
        Rng rng(20000 + static_cast<std::uint64_t>(p * 100));
        long ones = 0;
        const int n = 100000;
        for (int i = 0; i < n; ++i) {
            ones += static_cast<long>(sample_gates(params, rng).hard[0]);
        }
        const double rate = static_cast<double>(ones) / n;
        if (std::abs(rate - p) > 0.01) pass = false;
        detail += "p=" + fmt(p) + ":rate=" + fmt(rate) + " ";
    }
    record(2, "gumbel-softmax-statistics", pass, detail + "(+-0.01 at tau=0.1, 1e5 draws)");
}

// ---------------------------------------------------------------------------
// Criterion 3: two-term softmax form vs the stable sigmoid form.

void criterion_form_equivalence() {
    Rng rng(30303);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const double phi = 12.0 * rng.uniform() - 6.0;
        const double tau = 0.1 + 2.9 * rng.uniform();
        const double xi = rng.gumbel();
        const double xi_prime = rng.gumbel();
        const double theta = sigmoid(phi);
        const double keep = std::exp((std::log(theta) + xi) / tau);
        const double drop = std::exp((std::log(1.0 - theta) + xi_prime) / tau);
        const double direct = keep / (keep + drop);
        const double stable = soft_gate(phi, tau, xi, xi_prime);
        worst = std::max(worst, std::abs(direct - stable));
    }
    record(3, "relaxation-form-equivalence", worst <= 1e-12,
           "1e4 randomized inputs, max |direct - stable| = " + fmt(worst) + " (<= 1e-12)");
}

// ---------------------------------------------------------------------------
// Shared synthetic training recipe for criteria 4, 5, 11.

struct SyntheticRun {
    GatedNetwork net;
    TrainReport report;
};

SyntheticRun run_synthetic(Scenario scenario, std::uint64_t seed) {
    const Dataset all = gen_synthetic({scenario, 10000, 0.0, 100 + seed});
    const auto [train, test] = split(all, 0.2, seed);
    const int p = train.feature_width();
    const int outs = train.labels.cols;

    Rng base(seed);
    Rng init = base.stream(0);
    SyntheticRun run{init_network({{p, 12, Activation::relu},
                                   {12, outs, Activation::identity}},
                                  0.5, init),
                     {}};
    TrainConfig cfg;
    cfg.loss = LossKind::sigmoid_bce;
    cfg.alpha = 10.0;
    cfg.target_density = 0.15;
    cfg.tau_start = 2.0;
    cfg.tau_end = 0.5;
    cfg.epochs = 50;
    cfg.batch_size = 64;
    cfg.learning_rate = 0.005;
    cfg.seed = seed;
    run.report = fit(run.net, train, test, cfg);
    return run;
}

std::vector<SyntheticRun> independence_runs;  // cached for criteria 5b and 11

void criterion_density_targeting() {
    bool pass = true;
    std::string detail = "densities:";
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        independence_runs.push_back(run_synthetic(Scenario::independence, seed));
        const double density = independence_runs.back().report.final_density;
        detail += " " + fmt(density);
        if (density < 0.10 || density > 0.20) pass = false;
    }
    record(4, "density-targeting", pass, detail + " (target 0.15, window [0.10,0.20], 5/5)");
}

void criterion_pathway_recovery() {
    // (a) irrelevance: no retained path from any unused feature.
    int ok_a = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const SyntheticRun run = run_synthetic(Scenario::irrelevance, seed);
        const PathwayGraph graph = extract_pathways(finalize(run.net));
        const std::vector<int> anc = ancestors_of_output(graph, 0);
        const bool clean = std::none_of(anc.begin(), anc.end(),
                                        [](int i) { return i >= 1; });  // x2..x4 unused
        if (clean) ++ok_a;
    }

    // (b) independence: ancestor containment plus >= 95% importance mass.
    int ok_b = 0;
    for (const SyntheticRun& run : independence_runs) {
        const PrunedNetwork pruned = finalize(run.net);
        const PathwayGraph graph = extract_pathways(pruned);
        const Matrix imp = input_output_importance(pruned);
        bool good = true;
        const std::vector<std::set<int>> expected = {{0, 1}, {2, 3}};
        for (int o = 0; o < 2; ++o) {
            const std::vector<int> anc = ancestors_of_output(graph, o);
            for (int i : anc) {
                if (!expected[o].count(i)) good = false;
            }
            double colsum = 0.0, mass = 0.0;
            for (int i = 0; i < imp.rows; ++i) {
                colsum += imp(i, o);
                if (expected[o].count(i)) mass += imp(i, o);
            }
            if (!(colsum > 0.0) || mass / colsum < 0.95) good = false;
        }
        if (good) ++ok_b;
    }

    // (c) sharing: the shared feature x2 reaches both outputs.
    int ok_c = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const SyntheticRun run = run_synthetic(Scenario::sharing, seed);
        const PathwayGraph graph = extract_pathways(finalize(run.net));
        bool shared = true;
        for (int o = 0; o < 2; ++o) {
            const std::vector<int> anc = ancestors_of_output(graph, o);
            if (!std::count(anc.begin(), anc.end(), 1)) shared = false;
        }
        if (shared) ++ok_c;
    }

    const bool pass = ok_a >= 4 && ok_b >= 4 && ok_c >= 4;
    record(5, "pathway-recovery", pass,
           "irrelevance " + std::to_string(ok_a) + "/5, independence " + std::to_string(ok_b) +
               "/5, sharing " + std::to_string(ok_c) + "/5 (each >= 4/5)");
}

// ---------------------------------------------------------------------------
// Criterion 6: importance algebra vs exhaustive reachability.

struct RandomMaskNet {
    std::vector<int> widths;
    std::vector<std::vector<std::uint8_t>> masks;
    PrunedNetwork net;
};

bool oracle_path(const RandomMaskNet& g, int input, int output) {
    std::set<int> frontier{input};
    for (std::size_t l = 0; l < g.masks.size(); ++l) {
        std::set<int> next;
        for (int to = 0; to < g.widths[l + 1]; ++to) {
            for (int from : frontier) {
                if (g.masks[l][static_cast<std::size_t>(to) * g.widths[l] + from]) {
                    next.insert(to);
                    break;
                }
            }
        }
        frontier = std::move(next);
        if (frontier.empty()) return false;
    }
    return frontier.count(output) > 0;
}

void criterion_importance_algebra() {
    Rng rng(60606);
    bool pass = true;
    double worst_colsum_err = 0.0;
    for (int trial = 0; trial < 100 && pass; ++trial) {
        RandomMaskNet g;
        const int depth = 2 + static_cast<int>(rng.next_u64() % 2);
        for (int i = 0; i <= depth; ++i) {
            g.widths.push_back(2 + static_cast<int>(rng.next_u64() % 6));
        }
        const double p = 0.2 + 0.6 * rng.uniform();
        for (int l = 0; l < depth; ++l) {
            const bool last = (l + 1 == depth);
            g.net.specs.push_back({g.widths[l], g.widths[l + 1],
                                   last ? Activation::identity : Activation::relu});
            PrunedLayer layer;
            layer.weights = Matrix(g.widths[l + 1], g.widths[l]);
            std::vector<std::uint8_t> mask(layer.weights.size());
            for (std::size_t i = 0; i < mask.size(); ++i) {
                mask[i] = rng.uniform() < p ? 1 : 0;
                const double magnitude = 0.1 + 1.9 * rng.uniform();
                layer.weights.data[i] =
                    mask[i] ? (rng.uniform() < 0.5 ? -magnitude : magnitude) : 0.0;
            }
            layer.mask = mask;
            layer.bias.assign(g.widths[l + 1], 0.0);
            g.masks.push_back(std::move(mask));
            g.net.layers.push_back(std::move(layer));
        }

        // Per-layer column normalization.
        for (const auto& layer : g.net.layers) {
            const Matrix f = layer_importance(layer.weights);
            for (int o = 0; o < f.cols; ++o) {
                double colsum = 0.0, magnitude = 0.0;
                for (int i = 0; i < f.rows; ++i) {
                    colsum += f(i, o);
                    magnitude += std::abs(layer.weights(o, i));
                }
                if (magnitude > 0.0) {
                    worst_colsum_err = std::max(worst_colsum_err, std::abs(colsum - 1.0));
                    if (std::abs(colsum - 1.0) > 1e-9) pass = false;
                } else if (colsum != 0.0) {
                    pass = false;
                }
            }
        }

        // Chained normalization and zero-path equivalence.
        const Matrix imp = input_output_importance(g.net);
        for (int o = 0; o < g.widths.back() && pass; ++o) {
            bool reachable = false;
            double colsum = 0.0;
            for (int i = 0; i < g.widths.front(); ++i) {
                const bool path = oracle_path(g, i, o);
                reachable = reachable || path;
                colsum += imp(i, o);
                if ((imp(i, o) > 0.0) != path) pass = false;
            }
            if (reachable) {
                worst_colsum_err = std::max(worst_colsum_err, std::abs(colsum - 1.0));
                if (std::abs(colsum - 1.0) > 1e-9) pass = false;
            } else if (colsum != 0.0) {
                pass = false;
            }
        }
    }
    record(6, "importance-algebra", pass,
           "100 random masks, max column-sum error " + fmt(worst_colsum_err) +
               " (<= 1e-9), reachability equivalence exact");
}

// ---------------------------------------------------------------------------
// MNIST-backed criteria.

std::string mnist_file(const std::string& dir, const std::string& stem) {
    for (const std::string& name : {stem + "-idx3-ubyte", stem + ".idx3-ubyte",
                                    stem + "-idx1-ubyte", stem + ".idx1-ubyte", stem}) {
        const std::string path = dir + "/" + name;
        if (std::filesystem::exists(path)) return path;
    }
    return "";
}

struct MnistPaths {
    std::string train_images, train_labels, test_images, test_labels;
    bool found = false;
};

MnistPaths find_mnist() {
    std::vector<std::string> candidates;
    if (const char* env = std::getenv("SPARSEGATE_MNIST_DIR")) {
        candidates.push_back(env);
    }
    for (const char* rel : {"data/mnist", "../data/mnist", "../../data/mnist"}) {
        candidates.push_back(rel);
    }
    for (const std::string& dir : candidates) {
        MnistPaths paths;
        paths.train_images = mnist_file(dir, "train-images");
        paths.train_labels = mnist_file(dir, "train-labels");
        paths.test_images = mnist_file(dir, "t10k-images");
        paths.test_labels = mnist_file(dir, "t10k-labels");
        if (!paths.train_images.empty() && !paths.train_labels.empty() &&
            !paths.test_images.empty() && !paths.test_labels.empty()) {
            paths.found = true;
            return paths;
        }
    }
    return {};
}

constexpr const char* kMnistSkipNote =
    "MNIST IDX files not found (set SPARSEGATE_MNIST_DIR or place them under data/mnist/)";

PrunedNetwork criterion8_model;  // feeds criterion 10
bool criterion8_ran = false;

void criterion_mnist_compression(const MnistPaths& paths) {
    if (!paths.found) {
        record_skip(7, "mnist-extreme-compression", kMnistSkipNote);
        return;
    }
    const Dataset train = load_idx(paths.train_images, paths.train_labels);
    const Dataset test = load_idx(paths.test_images, paths.test_labels);
    Rng base(1);
    Rng init = base.stream(0);
    GatedNetwork net = init_network({{784, 300, Activation::relu},
                                     {300, 100, Activation::relu},
                                     {100, 10, Activation::identity}},
                                    0.5, init);
    TrainConfig cfg;
    cfg.loss = LossKind::softmax_xent;
    cfg.alpha = 10.0;
    cfg.target_density = 0.0015;
    cfg.epochs = 40;
    cfg.batch_size = 64;
    cfg.learning_rate = 1e-3;
    cfg.seed = 1;
    const TrainReport report = fit(net, train, test, cfg);
    const bool pass = report.retained_count >= 300 && report.retained_count <= 550 &&
                      report.final_test_accuracy >= 0.90;
    record(7, "mnist-extreme-compression", pass,
           "retained " + std::to_string(report.retained_count) +
               " (window [300,550]), test accuracy " + fmt(report.final_test_accuracy) +
               " (>= 0.90); reference operating point: 404 weights, 94%");
}

void criterion_mnist_moderate(const MnistPaths& paths) {
    if (!paths.found) {
        record_skip(8, "mnist-moderate-density", kMnistSkipNote);
        return;
    }
    const Dataset train = load_idx(paths.train_images, paths.train_labels);
    const Dataset test = load_idx(paths.test_images, paths.test_labels);
    Rng base(1);
    Rng init = base.stream(0);
    GatedNetwork net = init_network({{784, 300, Activation::relu},
                                     {300, 100, Activation::relu},
                                     {100, 10, Activation::identity}},
                                    0.5, init);
    TrainConfig cfg;
    cfg.loss = LossKind::softmax_xent;
    cfg.alpha = 10.0;
    cfg.target_density = 0.04;
    cfg.epochs = 20;
    cfg.batch_size = 64;
    cfg.learning_rate = 1e-3;
    cfg.seed = 1;
    const TrainReport report = fit(net, train, test, cfg);
    criterion8_model = finalize(net);
    criterion8_ran = true;
    record(8, "mnist-moderate-density", report.final_test_accuracy >= 0.96,
           "density " + fmt(report.final_density) + ", test accuracy " +
               fmt(report.final_test_accuracy) + " (>= 0.96 in <= 20 epochs)");
}

void criterion_heatmap_centrality() {
    if (!criterion8_ran) {
        record_skip(10, "heatmap-centrality", kMnistSkipNote);
        return;
    }
    const Matrix imp = input_output_importance(criterion8_model);
    const Matrix grid = importance_heatmap(imp, 28, 28);
    double total = 0.0, central = 0.0;
    for (int r = 0; r < 28; ++r) {
        for (int c = 0; c < 28; ++c) {
            total += grid(r, c);
            if (r >= 7 && r < 21 && c >= 7 && c < 21) central += grid(r, c);
        }
    }
    const double share = (total > 0.0) ? central / total : 0.0;
    record(10, "heatmap-centrality", share >= 0.70,
           "central 14x14 block holds " + fmt(share * 100.0) + "% of importance (>= 70%)");
}

// ---------------------------------------------------------------------------
// Criterion 9: gated training dominates random pruning at matched density.

void criterion_random_baseline() {
    const Dataset all = gen_synthetic({Scenario::independence, 10000, 0.0, 424242});
    const auto [train, test] = split(all, 0.2, 7);
    const std::vector<LayerSpec> specs = {{6, 64, Activation::relu},
                                          {64, 32, Activation::relu},
                                          {32, 2, Activation::identity}};
    bool pass = true;
    std::string detail;
    for (double density : {0.01, 0.02, 0.05}) {
        double gated_mean = 0.0, random_mean = 0.0;
        for (std::uint64_t seed = 1; seed <= 3; ++seed) {
            TrainConfig cfg;
            cfg.loss = LossKind::sigmoid_bce;
            cfg.alpha = 10.0;
            cfg.target_density = density;
            cfg.epochs = 30;
            cfg.batch_size = 64;
            cfg.learning_rate = 0.005;
            cfg.seed = seed;
            Rng base(seed);
            {
                Rng init = base.stream(0);
                GatedNetwork net = init_network(specs, 0.5, init);
                gated_mean += fit(net, train, test, cfg).final_test_accuracy / 3.0;
            }
            {
                Rng init = base.stream(0);
                GatedNetwork net = init_network(specs, 0.5, init);
                const RandomMask mask = random_mask(net.gate_count(), {density, seed});
                TrainConfig bcfg = cfg;
                bcfg.alpha = 0.0;
                random_mean +=
                    train_fixed_mask(net, mask.mask, train, test, bcfg).final_test_accuracy /
                    3.0;
            }
        }
        if (gated_mean < random_mean) pass = false;
        detail += fmt(density) + ":" + fmt(gated_mean) + ">=" + fmt(random_mean) + " ";
    }
    record(9, "random-baseline-dominance", pass,
           detail + "(mean over 3 seeds at each density)");
}

// ---------------------------------------------------------------------------
// Criterion 11: bit-exact reproducibility of a full training run.

void criterion_determinism() {
    const SyntheticRun rerun = run_synthetic(Scenario::independence, 1);
    const TrainReport& a = independence_runs.front().report;
    const TrainReport& b = rerun.report;
    bool pass = a.epochs.size() == b.epochs.size() &&
                a.final_density == b.final_density &&
                a.retained_count == b.retained_count &&
                a.final_test_accuracy == b.final_test_accuracy;
    for (std::size_t e = 0; pass && e < a.epochs.size(); ++e) {
        const EpochStats& x = a.epochs[e];
        const EpochStats& y = b.epochs[e];
        pass = x.prediction_loss == y.prediction_loss &&
               x.sparsity_loss == y.sparsity_loss && x.soft_density == y.soft_density &&
               x.hard_density == y.hard_density && x.tau == y.tau &&
               x.train_accuracy == y.train_accuracy &&
               x.test_accuracy == y.test_accuracy &&
               x.layer_densities == y.layer_densities;
    }
    record(11, "determinism", pass,
           pass ? "repeated run is bit-identical across all report fields"
                : "repeated run diverged");
}

}  // namespace

int main() {
    const auto started = std::chrono::steady_clock::now();
    const MnistPaths mnist = find_mnist();

    criterion_gradients();
    criterion_gate_statistics();
    criterion_form_equivalence();
    criterion_density_targeting();
    criterion_pathway_recovery();
    criterion_importance_algebra();
    criterion_mnist_compression(mnist);
    criterion_mnist_moderate(mnist);
    criterion_random_baseline();
    criterion_heatmap_centrality();
    criterion_determinism();

    std::sort(outcomes.begin(), outcomes.end(),
              [](const Outcome& a, const Outcome& b) { return a.id < b.id; });
    int failures = 0, skips = 0;
    for (const Outcome& o : outcomes) {
        if (o.status == "FAIL") ++failures;
        if (o.status == "SKIP") ++skips;
        std::printf("[%2d] %s %s: %s\n", o.id, o.status.c_str(), o.name.c_str(),
                    o.detail.c_str());
    }
    const auto elapsed = std::chrono::duration_cast<std::chrono::seconds>(
                             std::chrono::steady_clock::now() - started)
                             .count();
    std::printf("acceptance: %d passed, %d skipped, %d failed (%llds)\n",
                static_cast<int>(outcomes.size()) - failures - skips, skips, failures,
                static_cast<long long>(elapsed));
    return failures;
}
