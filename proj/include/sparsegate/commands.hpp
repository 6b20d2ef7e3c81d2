#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sparsegate/config.hpp"

namespace sparsegate {

// Exit-code contract: 0 ok, 2 config error, 3 I/O error, 4 numeric abort.
int run_cli(const std::function<void()>& body);

struct TrainOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
};

// Runs fit() per the config, then writes checkpoint.json, report.csv and
// summary.json into the output directory. Nothing is written on failure.
void cmd_train(const std::string& config_path, const TrainOverrides& overrides = {});

// Loads a checkpoint, finalizes it, writes pruned.json, prints the density
// summary and retained count.
void cmd_prune(const std::string& checkpoint_path, const std::string& out_dir = "");

struct ReportOptions {
    std::string pruned_path;
    std::string config_path;  // supplies the dataset and default export toggles
    std::string out_dir;      // defaults to the config's out_dir
    bool dot = false;
    bool importance = false;
    bool symmetry = false;
    bool heatmap = false;
    int heatmap_rows = 0;  // 0 = take from config or infer a square grid
    int heatmap_cols = 0;
    bool probe = false;
    int probe_output = 0;
    int probe_top = 2;                // top-importance features for the probe
    std::vector<int> probe_features;  // explicit override
    double probe_threshold = 0.0;
};

void cmd_report(const ReportOptions& options);

// Method-vs-random-baseline sweep; writes one combined CSV with a row per
// (density, method, seed).
void cmd_sweep(const std::string& config_path, std::vector<double> densities,
               std::vector<std::uint64_t> seeds, const std::string& out_override = "");

void cmd_gen_data(const SyntheticSpec& spec, const std::string& out_path);

}  // namespace sparsegate
