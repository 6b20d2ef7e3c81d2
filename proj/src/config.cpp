#include "sparsegate/config.hpp"

#include <filesystem>

#include <json.hpp>

#include "sparsegate/persist.hpp"

namespace sparsegate {

using nlohmann::json;

std::vector<LayerSpec> ExperimentConfig::layer_specs() const {
    std::vector<LayerSpec> specs;
    for (std::size_t i = 0; i + 1 < layers.size(); ++i) {
        const bool last = (i + 2 == layers.size());
        specs.push_back({layers[i], layers[i + 1],
                         last ? Activation::identity : Activation::relu});
    }
    return specs;
}

namespace {

void require_path(const std::string& path, const char* what) {
    if (!std::filesystem::exists(path)) {
        throw DataError(DataErrorCode::io,
                        std::string(what) + " does not exist: " + path);
    }
}

LossKind loss_from(const std::string& name) {
    if (name == "softmax_xent") return LossKind::softmax_xent;
    if (name == "sigmoid_bce") return LossKind::sigmoid_bce;
    throw ConfigError("unknown loss: " + name);
}

const char* loss_name(LossKind kind) {
    return kind == LossKind::softmax_xent ? "softmax_xent" : "sigmoid_bce";
}

Scenario scenario_from(const std::string& name) {
    if (name == "independence") return Scenario::independence;
    if (name == "sharing") return Scenario::sharing;
    if (name == "irrelevance") return Scenario::irrelevance;
    throw ConfigError("unknown synthetic scenario: " + name);
}

const char* scenario_name(Scenario s) {
    switch (s) {
        case Scenario::independence: return "independence";
        case Scenario::sharing: return "sharing";
        case Scenario::irrelevance: return "irrelevance";
    }
    return "?";
}

TrainConfig train_from_json(const json& j) {
    TrainConfig cfg;
    cfg.alpha = j.value("alpha", cfg.alpha);
    cfg.target_density = j.value("target_density", cfg.target_density);
    cfg.tau_start = j.value("tau_start", cfg.tau_start);
    cfg.tau_end = j.value("tau_end", cfg.tau_end);
    cfg.epochs = j.value("epochs", cfg.epochs);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
    const std::string optimizer = j.value("optimizer", "adam");
    if (optimizer == "adam") {
        cfg.optimizer = OptimizerKind::adam;
    } else if (optimizer == "sgd") {
        cfg.optimizer = OptimizerKind::sgd;
    } else {
        throw ConfigError("unknown optimizer: " + optimizer);
    }
    cfg.adam.beta1 = j.value("adam_beta1", cfg.adam.beta1);
    cfg.adam.beta2 = j.value("adam_beta2", cfg.adam.beta2);
    cfg.adam.epsilon = j.value("adam_epsilon", cfg.adam.epsilon);
    cfg.seed = j.value("seed", cfg.seed);
    if (j.contains("loss")) {
        cfg.loss = loss_from(j.at("loss").get<std::string>());
    }
    return cfg;
}

}  // namespace

std::string train_config_to_json(const TrainConfig& cfg) {
    json j;
    j["alpha"] = cfg.alpha;
    j["target_density"] = cfg.target_density;
    j["tau_start"] = cfg.tau_start;
    j["tau_end"] = cfg.tau_end;
    j["epochs"] = cfg.epochs;
    j["batch_size"] = cfg.batch_size;
    j["learning_rate"] = cfg.learning_rate;
    j["optimizer"] = cfg.optimizer == OptimizerKind::adam ? "adam" : "sgd";
    j["adam_beta1"] = cfg.adam.beta1;
    j["adam_beta2"] = cfg.adam.beta2;
    j["adam_epsilon"] = cfg.adam.epsilon;
    j["seed"] = cfg.seed;
    j["loss"] = loss_name(cfg.loss);
    return j.dump();
}

ExperimentConfig load_experiment_config(const std::string& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const DataError&) {
        throw ConfigError("cannot open config file: " + path);
    } catch (const json::exception& e) {
        // nlohmann reports the byte offset; surface it as-is.
        throw ConfigError("config parse error in " + path + ": " + e.what());
    }

    ExperimentConfig cfg;
    try {
        const json& task = j.at("task");
        const std::string kind = task.at("kind").get<std::string>();
        if (kind == "mnist") {
            cfg.task.kind = TaskConfig::Kind::mnist;
            cfg.task.images = task.at("images").get<std::string>();
            cfg.task.labels = task.at("labels").get<std::string>();
            cfg.task.test_images = task.value("test_images", "");
            cfg.task.test_labels = task.value("test_labels", "");
            require_path(cfg.task.images, "task.images");
            require_path(cfg.task.labels, "task.labels");
            if (!cfg.task.test_images.empty()) require_path(cfg.task.test_images, "task.test_images");
            if (!cfg.task.test_labels.empty()) require_path(cfg.task.test_labels, "task.test_labels");
        } else if (kind == "csv") {
            cfg.task.kind = TaskConfig::Kind::csv;
            cfg.task.path = task.at("path").get<std::string>();
            require_path(cfg.task.path, "task.path");
            const json& schema = task.at("schema");
            for (const auto& col : schema.at("columns")) {
                const std::string name = col.at(0).get<std::string>();
                const std::string role = col.at(1).get<std::string>();
                ColumnRole r;
                if (role == "numeric") {
                    r = ColumnRole::numeric;
                } else if (role == "categorical") {
                    r = ColumnRole::categorical;
                } else if (role == "label") {
                    r = ColumnRole::label;
                } else {
                    throw ConfigError("unknown column role: " + role);
                }
                cfg.task.schema.columns.emplace_back(name, r);
            }
            cfg.task.schema.positive_label = schema.at("positive_label").get<std::string>();
        } else if (kind == "synthetic") {
            cfg.task.kind = TaskConfig::Kind::synthetic;
            cfg.task.synthetic.scenario = scenario_from(task.at("scenario").get<std::string>());
            cfg.task.synthetic.n = task.value("n", 10000L);
            cfg.task.synthetic.noise_std = task.value("noise_std", 0.0);
            cfg.task.synthetic.seed = task.value("seed", std::uint64_t{1});
        } else {
            throw ConfigError("unknown task kind: " + kind);
        }

        cfg.layers = j.at("layers").get<std::vector<int>>();
        if (cfg.layers.size() < 2) {
            throw ConfigError("layers must list at least input and output sizes");
        }
        cfg.test_fraction = j.value("test_fraction", cfg.test_fraction);
        bool loss_given = false;
        if (j.contains("train")) {
            cfg.train = train_from_json(j.at("train"));
            loss_given = j.at("train").contains("loss");
        }
        if (!loss_given) {
            // Synthetic tasks carry independent binary labels.
            cfg.train.loss = (cfg.task.kind == TaskConfig::Kind::synthetic)
                                 ? LossKind::sigmoid_bce
                                 : LossKind::softmax_xent;
        }
        cfg.split_seed_explicit = j.contains("split_seed");
        cfg.split_seed = j.value("split_seed", cfg.train.seed);
        cfg.init_retain_prob = j.value("init_retain_prob", cfg.init_retain_prob);
        if (!(cfg.init_retain_prob > 0.0 && cfg.init_retain_prob < 1.0)) {
            throw ConfigError("init_retain_prob must be in (0,1)");
        }
        cfg.finetune_epochs = j.value("finetune_epochs", 0);
        cfg.out_dir = j.value("out_dir", cfg.out_dir);
        if (j.contains("exports")) {
            const json& e = j.at("exports");
            cfg.exports.dot = e.value("dot", false);
            cfg.exports.importance = e.value("importance", false);
            cfg.exports.symmetry = e.value("symmetry", false);
            cfg.exports.report = e.value("report", true);
            if (e.contains("heatmap")) {
                const auto dims = e.at("heatmap").get<std::vector<int>>();
                if (dims.size() != 2) throw ConfigError("exports.heatmap must be [rows, cols]");
                cfg.exports.heatmap = true;
                cfg.exports.heatmap_rows = dims[0];
                cfg.exports.heatmap_cols = dims[1];
            }
        }
        if (j.contains("sweep")) {
            const json& s = j.at("sweep");
            cfg.sweep_densities = s.value("densities", std::vector<double>{});
            if (s.contains("seeds")) {
                cfg.sweep_seeds = s.at("seeds").get<std::vector<std::uint64_t>>();
            }
        }
    } catch (const json::exception& e) {
        throw ConfigError("config field error in " + path + ": " + e.what());
    }

    cfg.train.validate();
    return cfg;
}

std::string config_to_json(const ExperimentConfig& cfg) {
    json j;
    json task;
    switch (cfg.task.kind) {
        case TaskConfig::Kind::mnist:
            task["kind"] = "mnist";
            task["images"] = cfg.task.images;
            task["labels"] = cfg.task.labels;
            task["test_images"] = cfg.task.test_images;
            task["test_labels"] = cfg.task.test_labels;
            break;
        case TaskConfig::Kind::csv: {
            task["kind"] = "csv";
            task["path"] = cfg.task.path;
            json cols = json::array();
            for (const auto& [name, role] : cfg.task.schema.columns) {
                const char* r = role == ColumnRole::numeric       ? "numeric"
                                : role == ColumnRole::categorical ? "categorical"
                                                                  : "label";
                cols.push_back(json::array({name, r}));
            }
            task["schema"] = {{"columns", cols},
                              {"positive_label", cfg.task.schema.positive_label}};
            break;
        }
        case TaskConfig::Kind::synthetic:
            task["kind"] = "synthetic";
            task["scenario"] = scenario_name(cfg.task.synthetic.scenario);
            task["n"] = cfg.task.synthetic.n;
            task["noise_std"] = cfg.task.synthetic.noise_std;
            task["seed"] = cfg.task.synthetic.seed;
            break;
    }
    j["task"] = task;
    j["layers"] = cfg.layers;
    j["test_fraction"] = cfg.test_fraction;
    j["split_seed"] = cfg.split_seed;
    j["train"] = json::parse(train_config_to_json(cfg.train));
    j["init_retain_prob"] = cfg.init_retain_prob;
    j["finetune_epochs"] = cfg.finetune_epochs;
    j["out_dir"] = cfg.out_dir;
    return j.dump();
}

std::pair<Dataset, Dataset> load_task_data(const ExperimentConfig& cfg) {
    switch (cfg.task.kind) {
        case TaskConfig::Kind::mnist: {
            Dataset train = load_idx(cfg.task.images, cfg.task.labels);
            if (!cfg.task.test_images.empty() && !cfg.task.test_labels.empty()) {
                Dataset test = load_idx(cfg.task.test_images, cfg.task.test_labels);
                return {std::move(train), std::move(test)};
            }
            return split(train, cfg.test_fraction, cfg.split_seed);
        }
        case TaskConfig::Kind::csv: {
            Dataset all = load_csv(cfg.task.path, cfg.task.schema);
            return split(all, cfg.test_fraction, cfg.split_seed);
        }
        case TaskConfig::Kind::synthetic: {
            Dataset all = gen_synthetic(cfg.task.synthetic);
            return split(all, cfg.test_fraction, cfg.split_seed);
        }
    }
    throw ConfigError("unreachable task kind");
}

}  // namespace sparsegate
