#include "sparsegate/interpret.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <map>
#include <stdexcept>

#include <json.hpp>

namespace sparsegate {

Matrix layer_importance(const Matrix& masked_weights) {
    Matrix f(masked_weights.cols, masked_weights.rows);  // input x output
    for (int o = 0; o < masked_weights.rows; ++o) {
        double denom = 0.0;
        for (int i = 0; i < masked_weights.cols; ++i) {
            denom += std::abs(masked_weights(o, i));
        }
        if (denom == 0.0) continue;  // fully pruned target neuron
        for (int i = 0; i < masked_weights.cols; ++i) {
            f(i, o) = std::abs(masked_weights(o, i)) / denom;
        }
    }
    return f;
}

namespace {

Matrix matmul(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows, b.cols);
    for (int r = 0; r < a.rows; ++r) {
        const double* arow = a.row(r);
        double* orow = out.row(r);
        for (int k = 0; k < a.cols; ++k) {
            const double v = arow[k];
            if (v == 0.0) continue;
            const double* brow = b.row(k);
            for (int c = 0; c < b.cols; ++c) {
                orow[c] += v * brow[c];
            }
        }
    }
    return out;
}

}  // namespace

Matrix input_output_importance(const PrunedNetwork& net) {
    std::vector<std::uint8_t> reachable(net.specs.front().input_size, 1);
    Matrix chained;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const PrunedLayer& layer = net.layers[l];
        Matrix cleaned = layer.weights;
        for (int o = 0; o < cleaned.rows; ++o) {
            for (int i = 0; i < cleaned.cols; ++i) {
                if (!reachable[i]) cleaned(o, i) = 0.0;
            }
        }
        const Matrix f = layer_importance(cleaned);
        chained = (l == 0) ? f : matmul(chained, f);

        std::vector<std::uint8_t> next(cleaned.rows, 0);
        for (int o = 0; o < cleaned.rows; ++o) {
            for (int i = 0; i < cleaned.cols; ++i) {
                if (cleaned(o, i) != 0.0) {
                    next[o] = 1;
                    break;
                }
            }
        }
        reachable = std::move(next);
    }
    return chained;
}

PathwayGraph extract_pathways(const PrunedNetwork& net) {
    PathwayGraph graph;
    graph.num_inputs = net.specs.front().input_size;
    graph.num_outputs = net.specs.back().output_size;

    const int depth = static_cast<int>(net.specs.size());
    std::vector<int> layer_offsets;
    for (int i = 0; i < graph.num_inputs; ++i) {
        graph.nodes.push_back(
            {PathwayNode::Role::input, 0, i, "x" + std::to_string(i)});
    }
    layer_offsets.push_back(0);
    for (int l = 0; l < depth; ++l) {
        layer_offsets.push_back(static_cast<int>(graph.nodes.size()));
        const int width = net.specs[l].output_size;
        const bool is_output = (l == depth - 1);
        for (int i = 0; i < width; ++i) {
            if (is_output) {
                graph.nodes.push_back(
                    {PathwayNode::Role::output, l + 1, i, "y" + std::to_string(i)});
            } else {
                graph.nodes.push_back({PathwayNode::Role::hidden, l + 1, i,
                                       "h" + std::to_string(l + 1) + "_" + std::to_string(i)});
            }
        }
    }

    graph.successors.resize(graph.nodes.size());
    graph.predecessors.resize(graph.nodes.size());
    for (int l = 0; l < depth; ++l) {
        const PrunedLayer& layer = net.layers[l];
        const int src_offset = layer_offsets[l];
        const int dst_offset = layer_offsets[l + 1];
        for (int o = 0; o < layer.weights.rows; ++o) {
            for (int i = 0; i < layer.weights.cols; ++i) {
                const std::size_t flat =
                    static_cast<std::size_t>(o) * layer.weights.cols + i;
                if (!layer.mask[flat]) continue;
                const int from = src_offset + i;
                const int to = dst_offset + o;
                graph.successors[from].push_back(to);
                graph.predecessors[to].push_back(from);
                graph.edges.push_back({from, to, layer.weights(o, i)});
            }
        }
    }
    return graph;
}

std::vector<int> ancestors_of_output(const PathwayGraph& graph, int output_index) {
    if (output_index < 0 || output_index >= graph.num_outputs) {
        throw std::invalid_argument("ancestors_of_output: output index out of range");
    }
    std::vector<std::uint8_t> visited(graph.nodes.size(), 0);
    std::deque<int> frontier{graph.output_node(output_index)};
    visited[frontier.front()] = 1;
    while (!frontier.empty()) {
        const int node = frontier.front();
        frontier.pop_front();
        for (int pred : graph.predecessors[node]) {
            if (!visited[pred]) {
                visited[pred] = 1;
                frontier.push_back(pred);
            }
        }
    }
    std::vector<int> inputs;
    for (int i = 0; i < graph.num_inputs; ++i) {
        if (visited[graph.input_node(i)]) inputs.push_back(i);
    }
    return inputs;
}

SymmetryPartition symmetry_signatures(const PathwayGraph& graph) {
    std::vector<std::string> sig(graph.nodes.size());

    // Outputs carry their own identity; everything else is the sorted
    // multiset of successor fingerprints, so hidden indices never appear.
    for (int o = 0; o < graph.num_outputs; ++o) {
        sig[graph.output_node(o)] = "y" + std::to_string(o);
    }
    const int max_layer = graph.nodes.back().layer;
    for (int layer = max_layer - 1; layer >= 0; --layer) {
        for (std::size_t v = 0; v < graph.nodes.size(); ++v) {
            if (graph.nodes[v].layer != layer) continue;
            std::vector<std::string> parts;
            for (int succ : graph.successors[v]) {
                parts.push_back(sig[succ]);
            }
            std::sort(parts.begin(), parts.end());
            std::string s = "(";
            for (std::size_t i = 0; i < parts.size(); ++i) {
                if (i) s += ",";
                s += parts[i];
            }
            s += ")";
            sig[v] = std::move(s);
        }
    }

    SymmetryPartition partition;
    std::map<std::string, std::vector<int>> by_fingerprint;
    for (int i = 0; i < graph.num_inputs; ++i) {
        partition.input_fingerprints.push_back(sig[graph.input_node(i)]);
        by_fingerprint[sig[graph.input_node(i)]].push_back(i);
    }
    // Deterministic group order: by smallest member.
    std::vector<std::vector<int>> groups;
    for (auto& [fingerprint, members] : by_fingerprint) {
        groups.push_back(std::move(members));
    }
    std::sort(groups.begin(), groups.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    partition.groups = std::move(groups);
    return partition;
}

ProbeResult pattern_probe(const Dataset& ds, const std::vector<int>& feature_indices,
                          int target_label, double binarize_threshold) {
    for (int f : feature_indices) {
        if (f < 0 || f >= ds.feature_width()) {
            throw std::invalid_argument("pattern_probe: feature index out of range");
        }
    }
    const bool by_column = ds.labels.cols > 1;
    if (by_column && (target_label < 0 || target_label >= ds.labels.cols)) {
        throw std::invalid_argument("pattern_probe: target output out of range");
    }

    auto matches = [&](int row) {
        if (by_column) return ds.labels(row, target_label) > 0.5;
        return static_cast<int>(ds.labels(row, 0)) == target_label;
    };

    ProbeResult result;
    long hits = 0, prior_hits = 0;
    for (int r = 0; r < ds.n(); ++r) {
        if (matches(r)) ++prior_hits;
        bool all_active = true;
        for (int f : feature_indices) {
            if (!(ds.features(r, f) > binarize_threshold)) {
                all_active = false;
                break;
            }
        }
        if (all_active) {
            ++result.support;
            if (matches(r)) ++hits;
        }
    }
    result.prior = static_cast<double>(prior_hits) / static_cast<double>(ds.n());
    if (result.support > 0) {
        result.defined = true;
        result.conditional_rate = static_cast<double>(hits) / static_cast<double>(result.support);
    }
    return result;
}

Matrix importance_heatmap(const Matrix& io_importance, int grid_rows, int grid_cols) {
    if (static_cast<long>(grid_rows) * grid_cols != io_importance.rows) {
        throw std::invalid_argument("importance_heatmap: grid dims do not match input count");
    }
    Matrix grid(grid_rows, grid_cols);
    for (int i = 0; i < io_importance.rows; ++i) {
        double total = 0.0;
        for (int o = 0; o < io_importance.cols; ++o) {
            total += io_importance(i, o);
        }
        grid.data[i] = total;
    }
    return grid;
}

std::string to_dot(const PathwayGraph& graph) {
    std::string dot = "digraph pathways {\n  rankdir=LR;\n";
    for (const auto& node : graph.nodes) {
        dot += "  " + node.id + ";\n";
    }
    char buf[64];
    for (const auto& edge : graph.edges) {
        std::snprintf(buf, sizeof(buf), "%.6f", edge.weight);
        dot += "  " + graph.nodes[edge.from].id + " -> " + graph.nodes[edge.to].id +
               " [weight=\"" + buf + "\"];\n";
    }
    dot += "}\n";
    return dot;
}

std::string to_json_string(const PathwayGraph& graph) {
    nlohmann::json j;
    j["nodes"] = nlohmann::json::array();
    for (const auto& node : graph.nodes) {
        const char* role = node.role == PathwayNode::Role::input    ? "input"
                           : node.role == PathwayNode::Role::hidden ? "hidden"
                                                                    : "output";
        j["nodes"].push_back({{"id", node.id}, {"role", role}, {"layer", node.layer},
                              {"index", node.index}});
    }
    j["edges"] = nlohmann::json::array();
    for (const auto& edge : graph.edges) {
        j["edges"].push_back({{"from", graph.nodes[edge.from].id},
                              {"to", graph.nodes[edge.to].id},
                              {"weight", edge.weight}});
    }
    return j.dump(2);
}

}  // namespace sparsegate
