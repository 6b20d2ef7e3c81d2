#include "sparsegate/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numeric>

#include <json.hpp>

#include "sparsegate/baseline.hpp"
#include "sparsegate/interpret.hpp"
#include "sparsegate/persist.hpp"

namespace sparsegate {

using nlohmann::json;

int run_cli(const std::function<void()>& body) {
    try {
        body();
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const NumericAbort& e) {
        std::cerr << "numeric abort: " << e.what() << "\n";
        return 4;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

namespace {

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string report_to_csv(const TrainReport& report, const std::string& config_hash) {
    std::string csv = "# config_hash=" + config_hash + "\n";
    csv +=
        "epoch,prediction_loss,sparsity_loss,soft_density,hard_density,tau,"
        "train_accuracy,test_accuracy";
    const std::size_t layer_count =
        report.epochs.empty() ? 0 : report.epochs.front().layer_densities.size();
    for (std::size_t l = 0; l < layer_count; ++l) {
        csv += ",layer" + std::to_string(l) + "_density";
    }
    csv += "\n";
    for (const auto& e : report.epochs) {
        csv += std::to_string(e.epoch) + "," + format_double(e.prediction_loss) + "," +
               format_double(e.sparsity_loss) + "," + format_double(e.soft_density) + "," +
               format_double(e.hard_density) + "," + format_double(e.tau) + "," +
               format_double(e.train_accuracy) + "," + format_double(e.test_accuracy);
        for (double d : e.layer_densities) {
            csv += "," + format_double(d);
        }
        csv += "\n";
    }
    return csv;
}

int expected_outputs(const Dataset& ds, LossKind loss) {
    return loss == LossKind::sigmoid_bce ? ds.labels.cols : ds.num_classes;
}

void check_layer_sizes(const ExperimentConfig& cfg, const Dataset& train) {
    if (cfg.layers.front() != train.feature_width()) {
        throw ConfigError("layers[0] = " + std::to_string(cfg.layers.front()) +
                          " does not match task feature width " +
                          std::to_string(train.feature_width()));
    }
    const int outputs = expected_outputs(train, cfg.train.loss);
    if (cfg.layers.back() != outputs) {
        throw ConfigError("last layer size " + std::to_string(cfg.layers.back()) +
                          " does not match task output count " + std::to_string(outputs));
    }
}

}  // namespace

void cmd_train(const std::string& config_path, const TrainOverrides& overrides) {
    ExperimentConfig cfg = load_experiment_config(config_path);
    if (overrides.seed) {
        cfg.train.seed = *overrides.seed;
        if (!cfg.split_seed_explicit) cfg.split_seed = *overrides.seed;
    }
    if (overrides.out_dir) cfg.out_dir = *overrides.out_dir;

    const auto [train_set, test_set] = load_task_data(cfg);
    check_layer_sizes(cfg, train_set);
    std::cout << "loaded " << train_set.source << ": train n=" << train_set.n()
              << ", test n=" << test_set.n() << ", width " << train_set.feature_width();
    for (int o = 0; o < train_set.labels.cols; ++o) {
        double prior = 0.0;
        for (int r = 0; r < train_set.n(); ++r) {
            prior += train_set.multi_label ? train_set.labels(r, o)
                                           : (train_set.labels(r, o) > 0.5 ? 1.0 : 0.0);
        }
        std::cout << (o == 0 ? "; label mean " : " ") << prior / train_set.n();
    }
    if (train_set.dropped_rows > 0) {
        std::cout << "; dropped rows " << train_set.dropped_rows;
    }
    std::cout << "\n";

    const std::string config_json = config_to_json(cfg);
    const std::string hash = fnv1a_hex(config_json);

    Rng base(cfg.train.seed);
    Rng init_rng = base.stream(0);
    GatedNetwork net = init_network(cfg.layer_specs(), cfg.init_retain_prob, init_rng);

    TrainReport report = fit(net, train_set, test_set, cfg.train);
    if (cfg.finetune_epochs > 0) {
        // Optional fixed-mask fine-tuning of the surviving weights.
        TrainConfig ft = cfg.train;
        ft.epochs = cfg.finetune_epochs;
        ft.alpha = 0.0;
        const auto mask = deterministic_gates(net);
        TrainReport ft_report = fit_pinned(net, mask, train_set, test_set, ft);
        const int offset = static_cast<int>(report.epochs.size());
        for (auto& e : ft_report.epochs) {
            e.epoch += offset;
            report.epochs.push_back(std::move(e));
        }
        report.final_density = ft_report.final_density;
        report.retained_count = ft_report.retained_count;
        report.final_test_accuracy = ft_report.final_test_accuracy;
    }

    std::filesystem::create_directories(cfg.out_dir);
    const Checkpoint checkpoint = Checkpoint::from_network(
        net, cfg.train.seed, cfg.train.epochs + cfg.finetune_epochs,
        train_config_to_json(cfg.train), hash);
    save_checkpoint(checkpoint, cfg.out_dir + "/checkpoint.json");
    write_file_atomic(cfg.out_dir + "/report.csv", report_to_csv(report, hash));

    json summary;
    summary["config_hash"] = hash;
    summary["config"] = json::parse(config_json);
    summary["gate_count"] = net.gate_count();
    summary["epochs_run"] = report.epochs.size();
    summary["final_density"] = report.final_density;
    summary["retained_count"] = report.retained_count;
    summary["final_test_accuracy"] = report.final_test_accuracy;
    write_file_atomic(cfg.out_dir + "/summary.json", summary.dump(2) + "\n");

    std::cout << "trained " << report.epochs.size() << " epochs; final density "
              << report.final_density << " (" << report.retained_count << "/"
              << net.gate_count() << " weights), test accuracy "
              << report.final_test_accuracy << "\n";
}

void cmd_prune(const std::string& checkpoint_path, const std::string& out_dir) {
    const Checkpoint checkpoint = load_checkpoint(checkpoint_path);
    const GatedNetwork net = checkpoint.to_network();
    const PrunedNetwork pruned = finalize(net);

    const std::string dir = out_dir.empty()
                                ? std::filesystem::path(checkpoint_path).parent_path().string()
                                : out_dir;
    const std::string out_path =
        (dir.empty() ? std::string(".") : dir) + "/pruned.json";
    std::filesystem::create_directories(dir.empty() ? "." : dir);
    save_pruned(pruned, checkpoint.config_hash, out_path);

    std::cout << "pruned density " << pruned.density() << ", retained "
              << pruned.retained_count() << "/" << pruned.gate_count() << " -> " << out_path
              << "\n";
}

namespace {

std::string importance_to_csv(const Matrix& io_importance, const Dataset& ds,
                              const std::string& config_hash) {
    std::string csv = "# config_hash=" + config_hash + "\n";
    csv += "input";
    for (int o = 0; o < io_importance.cols; ++o) {
        csv += ",";
        csv += (o < static_cast<int>(ds.class_names.size())) ? ds.class_names[o]
                                                             : "out" + std::to_string(o);
    }
    csv += "\n";
    for (int i = 0; i < io_importance.rows; ++i) {
        csv += (i < static_cast<int>(ds.feature_names.size())) ? ds.feature_names[i]
                                                               : "f" + std::to_string(i);
        for (int o = 0; o < io_importance.cols; ++o) {
            csv += "," + format_double(io_importance(i, o));
        }
        csv += "\n";
    }
    return csv;
}

std::string heatmap_to_csv(const Matrix& grid, const std::string& config_hash) {
    std::string csv = "# config_hash=" + config_hash + "\n";
    for (int c = 0; c < grid.cols; ++c) {
        csv += (c ? "," : "") + ("c" + std::to_string(c));
    }
    csv += "\n";
    for (int r = 0; r < grid.rows; ++r) {
        for (int c = 0; c < grid.cols; ++c) {
            if (c) csv += ",";
            csv += format_double(grid(r, c));
        }
        csv += "\n";
    }
    return csv;
}

}  // namespace

void cmd_report(const ReportOptions& options) {
    const PrunedNetwork pruned = load_pruned(options.pruned_path);
    const ExperimentConfig cfg = load_experiment_config(options.config_path);
    const auto [train_set, test_set] = load_task_data(cfg);
    if (pruned.specs.front().input_size != train_set.feature_width()) {
        throw ConfigError("pruned network input size " +
                          std::to_string(pruned.specs.front().input_size) +
                          " does not match dataset feature width " +
                          std::to_string(train_set.feature_width()));
    }

    const std::string dir = options.out_dir.empty() ? cfg.out_dir : options.out_dir;
    std::filesystem::create_directories(dir);
    const std::string hash = fnv1a_hex(config_to_json(cfg));

    bool want_dot = options.dot || cfg.exports.dot;
    bool want_importance = options.importance || cfg.exports.importance;
    bool want_symmetry = options.symmetry || cfg.exports.symmetry;
    bool want_heatmap = options.heatmap || cfg.exports.heatmap;

    const Matrix io_importance = input_output_importance(pruned);

    if (want_importance) {
        write_file_atomic(dir + "/importance.csv",
                          importance_to_csv(io_importance, train_set, hash));
    }
    if (want_heatmap) {
        int rows = options.heatmap_rows ? options.heatmap_rows : cfg.exports.heatmap_rows;
        int cols = options.heatmap_cols ? options.heatmap_cols : cfg.exports.heatmap_cols;
        if (rows <= 0 || cols <= 0) {
            const int side = static_cast<int>(std::lround(std::sqrt(io_importance.rows)));
            if (side * side != io_importance.rows) {
                throw ConfigError("heatmap grid dims required for non-square input count");
            }
            rows = cols = side;
        }
        write_file_atomic(dir + "/heatmap.csv",
                          heatmap_to_csv(importance_heatmap(io_importance, rows, cols), hash));
    }
    if (want_dot || want_symmetry) {
        const PathwayGraph graph = extract_pathways(pruned);
        if (want_dot) {
            write_file_atomic(dir + "/graph.dot",
                              "// config_hash=" + hash + "\n" + to_dot(graph));
            json graph_json = json::parse(to_json_string(graph));
            graph_json["config_hash"] = hash;
            write_file_atomic(dir + "/graph.json", graph_json.dump(2) + "\n");
        }
        if (want_symmetry) {
            const SymmetryPartition partition = symmetry_signatures(graph);
            json j;
            j["config_hash"] = hash;
            j["groups"] = json::array();
            for (const auto& group : partition.groups) {
                json names = json::array();
                for (int i : group) {
                    names.push_back(i < static_cast<int>(train_set.feature_names.size())
                                        ? train_set.feature_names[i]
                                        : "x" + std::to_string(i));
                }
                j["groups"].push_back(names);
            }
            write_file_atomic(dir + "/symmetry.json", j.dump(2) + "\n");
        }
    }
    if (options.probe) {
        std::vector<int> features = options.probe_features;
        if (features.empty()) {
            // Top importance features for the probed output.
            std::vector<int> order(io_importance.rows);
            std::iota(order.begin(), order.end(), 0);
            const int target = options.probe_output;
            if (target < 0 || target >= io_importance.cols) {
                throw ConfigError("probe output index out of range");
            }
            std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
                return io_importance(a, target) > io_importance(b, target);
            });
            const int k = std::min<int>(options.probe_top, static_cast<int>(order.size()));
            features.assign(order.begin(), order.begin() + k);
        }
        const ProbeResult result =
            pattern_probe(test_set, features, options.probe_output, options.probe_threshold);
        json j;
        j["config_hash"] = hash;
        j["target"] = options.probe_output;
        j["features"] = features;
        j["threshold"] = options.probe_threshold;
        j["support"] = result.support;
        j["defined"] = result.defined;
        if (result.defined) j["conditional_rate"] = result.conditional_rate;
        j["prior"] = result.prior;
        write_file_atomic(dir + "/probe.json", j.dump(2) + "\n");
        std::cout << "probe target=" << options.probe_output << " support=" << result.support;
        if (result.defined) {
            std::cout << " conditional_rate=" << result.conditional_rate;
        } else {
            std::cout << " conditional_rate=undefined (empty support)";
        }
        std::cout << " prior=" << result.prior << "\n";
    }
}

void cmd_sweep(const std::string& config_path, std::vector<double> densities,
               std::vector<std::uint64_t> seeds, const std::string& out_override) {
    ExperimentConfig cfg = load_experiment_config(config_path);
    if (densities.empty()) densities = cfg.sweep_densities;
    if (densities.empty()) {
        throw ConfigError("sweep requires a density list (flag or config.sweep.densities)");
    }
    if (seeds.empty()) seeds = cfg.sweep_seeds;
    if (!out_override.empty()) cfg.out_dir = out_override;

    const auto [train_set, test_set] = load_task_data(cfg);
    check_layer_sizes(cfg, train_set);
    std::filesystem::create_directories(cfg.out_dir);

    std::string csv = "# config_hash=" + fnv1a_hex(config_to_json(cfg)) + "\n";
    csv += "density,method,seed,accuracy,retained_count\n";
    for (double density : densities) {
        for (std::uint64_t seed : seeds) {
            TrainConfig train_cfg = cfg.train;
            train_cfg.target_density = density;
            train_cfg.seed = seed;

            Rng base(seed);
            {
                Rng init_rng = base.stream(0);
                GatedNetwork net =
                    init_network(cfg.layer_specs(), cfg.init_retain_prob, init_rng);
                const TrainReport report = fit(net, train_set, test_set, train_cfg);
                csv += format_double(density) + ",gumbel," + std::to_string(seed) + "," +
                       format_double(report.final_test_accuracy) + "," +
                       std::to_string(report.retained_count) + "\n";
            }
            {
                Rng init_rng = base.stream(0);
                GatedNetwork net =
                    init_network(cfg.layer_specs(), cfg.init_retain_prob, init_rng);
                const RandomMask mask = random_mask(net.gate_count(), {density, seed});
                TrainConfig baseline_cfg = train_cfg;
                baseline_cfg.alpha = 0.0;
                const TrainReport report =
                    train_fixed_mask(net, mask.mask, train_set, test_set, baseline_cfg);
                csv += format_double(density) + ",random," + std::to_string(seed) + "," +
                       format_double(report.final_test_accuracy) + "," +
                       std::to_string(report.retained_count) + "\n";
            }
        }
    }
    write_file_atomic(cfg.out_dir + "/sweep.csv", csv);
    std::cout << "sweep complete: " << densities.size() << " densities x " << seeds.size()
              << " seeds x 2 methods -> " << cfg.out_dir << "/sweep.csv\n";
}

void cmd_gen_data(const SyntheticSpec& spec, const std::string& out_path) {
    const Dataset ds = gen_synthetic(spec);
    std::string csv;
    for (int c = 0; c < ds.features.cols; ++c) {
        csv += (c ? "," : "") + ds.feature_names[c];
    }
    for (int o = 0; o < ds.labels.cols; ++o) {
        csv += "," + ds.class_names[o];
    }
    csv += "\n";
    for (int r = 0; r < ds.n(); ++r) {
        for (int c = 0; c < ds.features.cols; ++c) {
            if (c) csv += ",";
            csv += format_double(ds.features(r, c));
        }
        for (int o = 0; o < ds.labels.cols; ++o) {
            csv += "," + std::to_string(static_cast<int>(ds.labels(r, o)));
        }
        csv += "\n";
    }
    const auto parent = std::filesystem::path(out_path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    write_file_atomic(out_path, csv);
    std::cout << "wrote " << ds.n() << " rows to " << out_path << "\n";
}

}  // namespace sparsegate
