#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sparsegate/commands.hpp"

using namespace sparsegate;

int main(int argc, char** argv) {
    CLI::App app{"sparsegate: differentiable pruning with per-connection stochastic gates"};
    app.require_subcommand(1);

    // train
    auto* train = app.add_subcommand("train", "train weights and gates from a config file");
    std::string train_config;
    std::uint64_t train_seed = 0;
    bool train_seed_set = false;
    std::string train_out;
    train->add_option("--config", train_config, "experiment config JSON")->required();
    train->add_option("--seed", train_seed, "override the training seed")
        ->each([&](const std::string&) { train_seed_set = true; });
    train->add_option("--out", train_out, "override the output directory");

    // prune
    auto* prune = app.add_subcommand("prune", "finalize a checkpoint into a pruned network");
    std::string prune_checkpoint, prune_out;
    prune->add_option("--checkpoint", prune_checkpoint, "checkpoint JSON path")->required();
    prune->add_option("--out", prune_out, "output directory (default: checkpoint's)");

    // report
    auto* report = app.add_subcommand("report", "interpretability exports from a pruned network");
    ReportOptions report_options;
    std::vector<int> heatmap_dims;
    report->add_option("--pruned", report_options.pruned_path, "pruned network JSON")->required();
    report->add_option("--config", report_options.config_path, "experiment config JSON")->required();
    report->add_option("--out", report_options.out_dir, "output directory");
    report->add_flag("--dot", report_options.dot, "emit graph.dot and graph.json");
    report->add_flag("--importance", report_options.importance, "emit importance.csv");
    report->add_flag("--symmetry", report_options.symmetry, "emit symmetry.json");
    report->add_option("--heatmap", heatmap_dims, "emit heatmap.csv with grid ROWS COLS")
        ->expected(0, 2);
    report->add_option("--probe", report_options.probe_output,
                       "pattern-probe this output's top features")
        ->each([&](const std::string&) { report_options.probe = true; });
    report->add_option("--probe-top", report_options.probe_top,
                       "number of top-importance features to probe");
    report->add_option("--probe-features", report_options.probe_features,
                       "explicit feature indices to probe");
    report->add_option("--probe-threshold", report_options.probe_threshold,
                       "binarization threshold");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "density sweep: gated method vs random baseline");
    std::string sweep_config, sweep_out;
    std::vector<double> sweep_densities;
    std::vector<std::uint64_t> sweep_seeds;
    sweep->add_option("--config", sweep_config, "experiment config JSON")->required();
    sweep->add_option("--densities", sweep_densities, "density points");
    sweep->add_option("--seeds", sweep_seeds, "seeds per point");
    sweep->add_option("--out", sweep_out, "override the output directory");

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "write a synthetic pathway dataset as CSV");
    std::string gen_scenario = "independence", gen_out = "synthetic.csv";
    long gen_n = 10000;
    double gen_noise = 0.0;
    std::uint64_t gen_seed = 1;
    gen->add_option("--scenario", gen_scenario, "independence | sharing | irrelevance");
    gen->add_option("--n", gen_n, "sample count");
    gen->add_option("--noise", gen_noise, "label margin noise std");
    gen->add_option("--seed", gen_seed, "generator seed");
    gen->add_option("--out", gen_out, "output CSV path")->required();

    CLI11_PARSE(app, argc, argv);

    return run_cli([&] {
        if (train->parsed()) {
            TrainOverrides overrides;
            if (train_seed_set) overrides.seed = train_seed;
            if (!train_out.empty()) overrides.out_dir = train_out;
            cmd_train(train_config, overrides);
        } else if (prune->parsed()) {
            cmd_prune(prune_checkpoint, prune_out);
        } else if (report->parsed()) {
            if (!heatmap_dims.empty() || report->count("--heatmap") > 0) {
                report_options.heatmap = true;
                if (heatmap_dims.size() == 2) {
                    report_options.heatmap_rows = heatmap_dims[0];
                    report_options.heatmap_cols = heatmap_dims[1];
                }
            }
            cmd_report(report_options);
        } else if (sweep->parsed()) {
            cmd_sweep(sweep_config, sweep_densities, sweep_seeds, sweep_out);
        } else if (gen->parsed()) {
            Scenario scenario;
            if (gen_scenario == "independence") {
                scenario = Scenario::independence;
            } else if (gen_scenario == "sharing") {
                scenario = Scenario::sharing;
            } else if (gen_scenario == "irrelevance") {
                scenario = Scenario::irrelevance;
            } else {
                throw ConfigError("unknown scenario: " + gen_scenario);
            }
            cmd_gen_data({scenario, gen_n, gen_noise, gen_seed}, gen_out);
        }
    });
}
