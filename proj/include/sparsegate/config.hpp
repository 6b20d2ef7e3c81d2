#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sparsegate/data.hpp"
#include "sparsegate/train.hpp"

namespace sparsegate {

struct TaskConfig {
    enum class Kind { mnist, csv, synthetic };
    Kind kind = Kind::synthetic;

    // mnist: train pair required, test pair optional (falls back to split)
    std::string images, labels, test_images, test_labels;

    // csv
    std::string path;
    CsvSchema schema;

    // synthetic
    SyntheticSpec synthetic{Scenario::independence, 10000, 0.0, 1};
};

struct ExportToggles {
    bool dot = false;
    bool heatmap = false;
    int heatmap_rows = 0;
    int heatmap_cols = 0;
    bool importance = false;
    bool symmetry = false;
    bool report = true;
};

struct ExperimentConfig {
    TaskConfig task;
    std::vector<int> layers;  // full size chain, input width to class count
    double test_fraction = 0.2;
    std::uint64_t split_seed = 0;
    bool split_seed_explicit = false;  // false: follows train.seed (and --seed)
    TrainConfig train;
    double init_retain_prob = 0.5;
    int finetune_epochs = 0;  // optional fixed-mask fine-tuning after pruning
    std::string out_dir = "out";
    ExportToggles exports;
    std::vector<double> sweep_densities;
    std::vector<std::uint64_t> sweep_seeds{1, 2, 3};

    // Layer specs with ReLU hidden layers and an identity output layer.
    std::vector<LayerSpec> layer_specs() const;
};

// Parse + validate. Referenced data paths must exist. Throws ConfigError
// with file/position context on malformed input.
ExperimentConfig load_experiment_config(const std::string& path);

// Canonical JSON echo of the config; its FNV-1a hash is embedded in every
// artifact the commands write.
std::string config_to_json(const ExperimentConfig& config);
std::string train_config_to_json(const TrainConfig& config);

// Loads (or generates) the task's data and returns train/test partitions.
std::pair<Dataset, Dataset> load_task_data(const ExperimentConfig& config);

}  // namespace sparsegate
