#pragma once

#include <string>
#include <vector>

#include "sparsegate/matrix.hpp"
#include "sparsegate/train.hpp"

namespace sparsegate {

// Per-layer feature importance from masked weights (out x in storage):
// F[i][o] = |W[o][i]| / sum_k |W[o][k]|, returned input x output. Columns of
// a fully pruned target neuron stay all-zero.
Matrix layer_importance(const Matrix& masked_weights);

// Chained input->output importance: the matrix product of per-layer
// importance matrices. Connections leaving a neuron that receives no
// retained input connection carry no information from the inputs, so they
// are treated as pruned before normalizing each layer; this keeps every
// reachable output column summing to 1.
Matrix input_output_importance(const PrunedNetwork& net);

struct PathwayNode {
    enum class Role { input, hidden, output };
    Role role;
    int layer;   // 0 = inputs, 1..L-1 = hidden, L = outputs
    int index;   // within the layer
    std::string id;  // "x{i}", "h{layer}_{i}", "y{i}"
};

struct PathwayEdge {
    int from;  // node index
    int to;
    double weight;
};

// Digraph of retained connections in a pruned network. Node order: inputs,
// hidden layers front to back, outputs.
struct PathwayGraph {
    std::vector<PathwayNode> nodes;
    std::vector<PathwayEdge> edges;
    std::vector<std::vector<int>> successors;    // by node index
    std::vector<std::vector<int>> predecessors;  // by node index
    int num_inputs = 0;
    int num_outputs = 0;

    int input_node(int i) const { return i; }
    int output_node(int o) const { return static_cast<int>(nodes.size()) - num_outputs + o; }
};

PathwayGraph extract_pathways(const PrunedNetwork& net);

// Input indices with a directed path to the given output, sorted.
std::vector<int> ancestors_of_output(const PathwayGraph& graph, int output_index);

// Structural symmetry of inputs. Fingerprints are refined backward from the
// output layer: an output's fingerprint is its own index; every other node's
// fingerprint is the sorted multiset of its successors' fingerprints. Hidden
// labels never enter, so two inputs get equal fingerprints exactly when
// their forward reachability structure is the same up to hidden-node
// relabeling.
struct SymmetryPartition {
    std::vector<std::string> input_fingerprints;  // per input
    std::vector<std::vector<int>> groups;         // inputs grouped by fingerprint
};

SymmetryPartition symmetry_signatures(const PathwayGraph& graph);

struct ProbeResult {
    long support = 0;          // rows with every probed feature active
    bool defined = false;      // false when support is empty
    double conditional_rate = 0.0;  // P(label == target | support)
    double prior = 0.0;        // P(label == target) over the whole set
};

// Conditional class-frequency over binarized features: a feature is active
// when its value exceeds binarize_threshold. target_label is a class id for
// class-id datasets and an output column for multi-label ones.
ProbeResult pattern_probe(const Dataset& ds, const std::vector<int>& feature_indices,
                          int target_label, double binarize_threshold = 0.0);

// Per-input importance summed over outputs, reshaped row-major to the grid.
Matrix importance_heatmap(const Matrix& io_importance, int grid_rows, int grid_cols);

std::string to_dot(const PathwayGraph& graph);
std::string to_json_string(const PathwayGraph& graph);

}  // namespace sparsegate
