#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "sparsegate/errors.hpp"
#include "sparsegate/matrix.hpp"

namespace sparsegate {

enum class ColumnRole { numeric, categorical, label };

struct CsvSchema {
    // One entry per header column, matched by name. Every column in the file
    // must be covered.
    std::vector<std::pair<std::string, ColumnRole>> columns;
    // Token that maps the label column to 1; anything else maps to 0.
    std::string positive_label;
};

// Parsed, row-filtered CSV kept alongside an encoded Dataset so that split()
// can re-encode with statistics from the train partition only.
struct CsvTable {
    std::vector<std::string> column_names;  // file order
    std::vector<ColumnRole> column_roles;
    std::vector<int> numeric_cols;      // indices into column_names
    std::vector<int> categorical_cols;  // indices into column_names
    std::vector<std::vector<double>> numeric;            // [numeric col][row]
    std::vector<std::vector<std::string>> categorical;   // [categorical col][row]
    std::vector<std::uint8_t> labels;                    // binarized
    long dropped_rows = 0;

    std::size_t n() const { return labels.size(); }
};

struct Dataset {
    Matrix features;  // n x p
    // Label matrix. Single-column class ids for softmax-style tasks;
    // one binary column per output for multi-label tasks.
    Matrix labels;
    int num_classes = 2;
    bool multi_label = false;
    std::vector<std::string> feature_names;
    std::vector<std::string> class_names;
    std::string source;
    long dropped_rows = 0;
    long unknown_categories = 0;

    // Present for CSV sources: the raw table plus the raw-row ids backing
    // this dataset, so split() can rebuild encodings from train rows.
    std::shared_ptr<const CsvTable> raw;
    std::vector<long> raw_rows;

    int n() const { return features.rows; }
    int feature_width() const { return features.cols; }
};

// MNIST-style IDX pair: images file (magic 0x00000803, dims [n, rows, cols],
// bytes scaled to [0,1] and flattened row-major) and labels file
// (magic 0x00000801, n matching). Throws DataError with a distinct code for
// bad magic, truncated payload, and count mismatch.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

// CSV with header row (RFC-4180 quoting). Numeric columns are min-max scaled
// to [0,1] (constant columns scale to 0), categorical columns one-hot
// expanded with feature names "col=value", the label column binarized against
// schema.positive_label. Rows with missing ("" or "?") or unparseable values
// are dropped and counted. Scaling/vocabulary here come from the whole file;
// use split() afterwards to re-encode with train-partition statistics.
Dataset load_csv(const std::string& path, const CsvSchema& schema);

enum class Scenario { independence, sharing, irrelevance };

struct SyntheticSpec {
    Scenario scenario;
    long n;
    double noise_std = 0.0;
    std::uint64_t seed = 0;
};

// Synthetic pathway tasks. Features ~ Uniform(-1,1); labels are linear
// threshold rules with Gaussian noise (noise_std) on the decision margin:
//   independence: p=6, y1 = [x1+x2 > 0], y2 = [x3+x4 > 0]; x5,x6 unused
//   sharing:      p=5, y1 = [x1+x2 > 0], y2 = [x2+x3 > 0]; x4,x5 unused
//   irrelevance:  p=4, y  = [x1 > 0];                      x2..x4 unused
Dataset gen_synthetic(const SyntheticSpec& spec);

// Seeded shuffle then partition. For CSV-backed datasets the one-hot
// vocabulary and min-max statistics are rebuilt from the train partition and
// applied to the test partition; test-only categorical values map to an
// all-zero one-hot group (counted in unknown_categories).
std::pair<Dataset, Dataset> split(const Dataset& ds, double test_fraction,
                                  std::uint64_t seed);

}  // namespace sparsegate
