#include "sparsegate/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "sparsegate/rng.hpp"

namespace sparsegate {

namespace {

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError(DataErrorCode::io, "cannot open file: " + path);
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return bytes;
}

std::uint32_t be_u32(const std::vector<std::uint8_t>& bytes, std::size_t offset,
                     const std::string& path) {
    if (offset + 4 > bytes.size()) {
        throw DataError(DataErrorCode::truncated, "truncated IDX header: " + path);
    }
    return (static_cast<std::uint32_t>(bytes[offset]) << 24) |
           (static_cast<std::uint32_t>(bytes[offset + 1]) << 16) |
           (static_cast<std::uint32_t>(bytes[offset + 2]) << 8) |
           static_cast<std::uint32_t>(bytes[offset + 3]);
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    const auto image_bytes = read_file_bytes(images_path);
    const auto label_bytes = read_file_bytes(labels_path);

    constexpr std::uint32_t kImagesMagic = 0x00000803;
    constexpr std::uint32_t kLabelsMagic = 0x00000801;

    if (be_u32(image_bytes, 0, images_path) != kImagesMagic) {
        throw DataError(DataErrorCode::bad_magic, "bad IDX image magic in " + images_path);
    }
    const std::size_t n = be_u32(image_bytes, 4, images_path);
    const std::size_t rows = be_u32(image_bytes, 8, images_path);
    const std::size_t cols = be_u32(image_bytes, 12, images_path);
    const std::size_t p = rows * cols;
    if (image_bytes.size() < 16 + n * p) {
        throw DataError(DataErrorCode::truncated, "truncated IDX image payload in " + images_path);
    }

    if (be_u32(label_bytes, 0, labels_path) != kLabelsMagic) {
        throw DataError(DataErrorCode::bad_magic, "bad IDX label magic in " + labels_path);
    }
    const std::size_t n_labels = be_u32(label_bytes, 4, labels_path);
    if (label_bytes.size() < 8 + n_labels) {
        throw DataError(DataErrorCode::truncated, "truncated IDX label payload in " + labels_path);
    }
    if (n != n_labels) {
        throw DataError(DataErrorCode::count_mismatch,
                        "image/label count mismatch: " + std::to_string(n) + " vs " +
                            std::to_string(n_labels));
    }
    if (n == 0) {
        throw DataError(DataErrorCode::truncated, "empty IDX dataset: " + images_path);
    }

    Dataset ds;
    ds.features = Matrix(static_cast<int>(n), static_cast<int>(p));
    for (std::size_t i = 0; i < n * p; ++i) {
        ds.features.data[i] = static_cast<double>(image_bytes[16 + i]) / 255.0;
    }
    ds.labels = Matrix(static_cast<int>(n), 1);
    int max_label = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const int y = label_bytes[8 + i];
        ds.labels.data[i] = static_cast<double>(y);
        max_label = std::max(max_label, y);
    }
    ds.num_classes = std::max(max_label + 1, 2);
    ds.multi_label = false;
    ds.feature_names.reserve(p);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            ds.feature_names.push_back("p" + std::to_string(r) + "_" + std::to_string(c));
        }
    }
    for (int c = 0; c < ds.num_classes; ++c) {
        ds.class_names.push_back(std::to_string(c));
    }
    ds.source = "idx:" + images_path;
    return ds;
}

namespace {

// RFC-4180-style parse: quoted fields may contain commas, newlines, and
// doubled quotes. Unquoted fields are trimmed (Adult-style files pad cells
// with spaces).
std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false;
    bool field_was_quoted = false;

    auto push_field = [&] {
        if (!field_was_quoted) {
            const auto first = field.find_first_not_of(" \t");
            const auto last = field.find_last_not_of(" \t");
            field = (first == std::string::npos) ? "" : field.substr(first, last - first + 1);
        }
        row.push_back(field);
        field.clear();
        field_was_quoted = false;
    };
    auto push_row = [&] {
        push_field();
        const bool blank = row.size() == 1 && row[0].empty();
        if (!blank) rows.push_back(row);
        row.clear();
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"' && field.empty()) {
            in_quotes = true;
            field_was_quoted = true;
        } else if (c == ',') {
            push_field();
        } else if (c == '\n') {
            if (!field.empty() && field.back() == '\r') field.pop_back();
            push_row();
        } else {
            field += c;
        }
    }
    if (!field.empty() || !row.empty()) push_row();
    return rows;
}

bool is_missing(const std::string& cell) {
    return cell.empty() || cell == "?";
}

bool parse_double(const std::string& cell, double& out) {
    try {
        std::size_t pos = 0;
        out = std::stod(cell, &pos);
        while (pos < cell.size() && std::isspace(static_cast<unsigned char>(cell[pos]))) ++pos;
        return pos == cell.size() && std::isfinite(out);
    } catch (...) {
        return false;
    }
}

// Encoding statistics gathered from a set of table rows.
struct CsvEncoder {
    std::vector<std::pair<double, double>> minmax;           // per numeric col
    std::vector<std::vector<std::string>> vocab;             // per categorical col, sorted
};

CsvEncoder build_encoder(const CsvTable& table, const std::vector<long>& row_ids) {
    CsvEncoder enc;
    enc.minmax.resize(table.numeric_cols.size());
    for (std::size_t c = 0; c < table.numeric_cols.size(); ++c) {
        double lo = 0.0, hi = 0.0;
        bool first = true;
        for (long r : row_ids) {
            const double v = table.numeric[c][r];
            if (first) {
                lo = hi = v;
                first = false;
            } else {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
        enc.minmax[c] = {lo, hi};
    }
    enc.vocab.resize(table.categorical_cols.size());
    for (std::size_t c = 0; c < table.categorical_cols.size(); ++c) {
        std::vector<std::string> values;
        for (long r : row_ids) {
            values.push_back(table.categorical[c][r]);
        }
        std::sort(values.begin(), values.end());
        values.erase(std::unique(values.begin(), values.end()), values.end());
        enc.vocab[c] = std::move(values);
    }
    return enc;
}

Dataset encode_rows(const std::shared_ptr<const CsvTable>& table,
                    const std::vector<long>& row_ids, const CsvEncoder& enc,
                    const std::string& source) {
    const CsvTable& t = *table;
    Dataset ds;

    // Feature layout: file column order; a numeric column contributes one
    // feature, a categorical column one feature per vocabulary value.
    std::size_t numeric_i = 0, categorical_i = 0;
    struct FeatureSlot {
        bool numeric;
        std::size_t col;  // index into numeric/categorical arrays
    };
    std::vector<FeatureSlot> slots;
    for (std::size_t c = 0; c < t.column_names.size(); ++c) {
        if (t.column_roles[c] == ColumnRole::numeric) {
            ds.feature_names.push_back(t.column_names[c]);
            slots.push_back({true, numeric_i});
            ++numeric_i;
        } else if (t.column_roles[c] == ColumnRole::categorical) {
            for (const auto& value : enc.vocab[categorical_i]) {
                ds.feature_names.push_back(t.column_names[c] + "=" + value);
            }
            slots.push_back({false, categorical_i});
            ++categorical_i;
        }
    }
    const int p = static_cast<int>(ds.feature_names.size());

    ds.features = Matrix(static_cast<int>(row_ids.size()), p);
    ds.labels = Matrix(static_cast<int>(row_ids.size()), 1);
    for (std::size_t out_r = 0; out_r < row_ids.size(); ++out_r) {
        const long r = row_ids[out_r];
        int f = 0;
        for (const auto& slot : slots) {
            if (slot.numeric) {
                const auto [lo, hi] = enc.minmax[slot.col];
                const double v = t.numeric[slot.col][r];
                // Degenerate range rule: a constant column scales to 0.
                ds.features(static_cast<int>(out_r), f) =
                    (hi > lo) ? (v - lo) / (hi - lo) : 0.0;
                ++f;
            } else {
                const auto& vocab = enc.vocab[slot.col];
                const std::string& value = t.categorical[slot.col][r];
                const auto it = std::lower_bound(vocab.begin(), vocab.end(), value);
                if (it != vocab.end() && *it == value) {
                    ds.features(static_cast<int>(out_r), f + static_cast<int>(it - vocab.begin())) = 1.0;
                } else {
                    ++ds.unknown_categories;  // all-zero group
                }
                f += static_cast<int>(vocab.size());
            }
        }
        ds.labels(static_cast<int>(out_r), 0) = static_cast<double>(t.labels[r]);
    }

    ds.num_classes = 2;
    ds.multi_label = false;
    ds.class_names = {"neg", "pos"};
    ds.source = source;
    ds.dropped_rows = t.dropped_rows;
    ds.raw = table;
    ds.raw_rows = row_ids;
    return ds;
}

}  // namespace

Dataset load_csv(const std::string& path, const CsvSchema& schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError(DataErrorCode::io, "cannot open file: " + path);
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    const auto rows = parse_csv(buffer.str());
    if (rows.size() < 2) {
        throw DataError(DataErrorCode::schema, "CSV has no data rows: " + path);
    }

    const auto& header = rows[0];
    std::map<std::string, ColumnRole> role_by_name(
        [&] {
            std::map<std::string, ColumnRole> m;
            for (const auto& [name, role] : schema.columns) m[name] = role;
            return m;
        }());

    auto table = std::make_shared<CsvTable>();
    int label_col = -1;
    for (std::size_t c = 0; c < header.size(); ++c) {
        const auto it = role_by_name.find(header[c]);
        if (it == role_by_name.end()) {
            throw DataError(DataErrorCode::schema,
                            "schema does not cover column '" + header[c] + "'");
        }
        table->column_names.push_back(header[c]);
        table->column_roles.push_back(it->second);
        if (it->second == ColumnRole::numeric) {
            table->numeric_cols.push_back(static_cast<int>(c));
        } else if (it->second == ColumnRole::categorical) {
            table->categorical_cols.push_back(static_cast<int>(c));
        } else {
            if (label_col >= 0) {
                throw DataError(DataErrorCode::schema, "schema declares two label columns");
            }
            label_col = static_cast<int>(c);
        }
    }
    if (label_col < 0) {
        throw DataError(DataErrorCode::schema, "schema declares no label column");
    }

    table->numeric.resize(table->numeric_cols.size());
    table->categorical.resize(table->categorical_cols.size());

    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() != header.size()) {
            ++table->dropped_rows;
            continue;
        }
        bool drop = false;
        std::vector<double> numeric_values(table->numeric_cols.size());
        for (std::size_t c = 0; c < table->numeric_cols.size() && !drop; ++c) {
            const std::string& cell = row[table->numeric_cols[c]];
            if (is_missing(cell) || !parse_double(cell, numeric_values[c])) drop = true;
        }
        for (int col : table->categorical_cols) {
            if (is_missing(row[col])) drop = true;
        }
        if (is_missing(row[label_col])) drop = true;
        if (drop) {
            ++table->dropped_rows;
            continue;
        }
        for (std::size_t c = 0; c < table->numeric_cols.size(); ++c) {
            table->numeric[c].push_back(numeric_values[c]);
        }
        for (std::size_t c = 0; c < table->categorical_cols.size(); ++c) {
            table->categorical[c].push_back(row[table->categorical_cols[c]]);
        }
        table->labels.push_back(row[label_col] == schema.positive_label ? 1 : 0);
    }

    if (table->n() == 0) {
        throw DataError(DataErrorCode::schema, "all CSV rows dropped: " + path);
    }

    std::vector<long> all_rows(table->n());
    std::iota(all_rows.begin(), all_rows.end(), 0L);
    const CsvEncoder enc = build_encoder(*table, all_rows);
    return encode_rows(table, all_rows, enc, "csv:" + path);
}

Dataset gen_synthetic(const SyntheticSpec& spec) {
    if (spec.n < 1) {
        throw std::invalid_argument("gen_synthetic: n must be >= 1");
    }
    int p = 0;
    int outputs = 0;
    std::string name;
    switch (spec.scenario) {
        case Scenario::independence: p = 6; outputs = 2; name = "independence"; break;
        case Scenario::sharing:      p = 5; outputs = 2; name = "sharing"; break;
        case Scenario::irrelevance:  p = 4; outputs = 1; name = "irrelevance"; break;
    }

    Rng rng(spec.seed);
    Dataset ds;
    ds.features = Matrix(static_cast<int>(spec.n), p);
    ds.labels = Matrix(static_cast<int>(spec.n), outputs);
    for (long r = 0; r < spec.n; ++r) {
        double x[6] = {0, 0, 0, 0, 0, 0};
        for (int c = 0; c < p; ++c) {
            x[c] = 2.0 * rng.uniform() - 1.0;
            ds.features(static_cast<int>(r), c) = x[c];
        }
        double margins[2] = {0, 0};
        switch (spec.scenario) {
            case Scenario::independence:
                margins[0] = x[0] + x[1];
                margins[1] = x[2] + x[3];
                break;
            case Scenario::sharing:
                margins[0] = x[0] + x[1];
                margins[1] = x[1] + x[2];
                break;
            case Scenario::irrelevance:
                margins[0] = x[0];
                break;
        }
        for (int o = 0; o < outputs; ++o) {
            double m = margins[o];
            if (spec.noise_std > 0.0) {
                m += spec.noise_std * rng.normal();
            }
            ds.labels(static_cast<int>(r), o) = (m > 0.0) ? 1.0 : 0.0;
        }
    }

    ds.multi_label = true;
    ds.num_classes = outputs;
    for (int c = 0; c < p; ++c) {
        ds.feature_names.push_back("x" + std::to_string(c + 1));
    }
    if (outputs == 1) {
        ds.class_names = {"y"};
    } else {
        for (int o = 0; o < outputs; ++o) {
            ds.class_names.push_back("y" + std::to_string(o + 1));
        }
    }
    ds.source = "synthetic:" + name;
    return ds;
}

std::pair<Dataset, Dataset> split(const Dataset& ds, double test_fraction,
                                  std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw std::invalid_argument("split: test_fraction must be in (0,1)");
    }
    const long n = ds.n();
    std::vector<long> order(n);
    std::iota(order.begin(), order.end(), 0L);
    Rng rng(seed);
    for (long i = n - 1; i > 0; --i) {
        const long j = static_cast<long>(rng.next_u64() % static_cast<std::uint64_t>(i + 1));
        std::swap(order[i], order[j]);
    }
    const long test_count = std::lround(static_cast<double>(n) * test_fraction);
    if (test_count < 1 || test_count >= n) {
        throw DataError(DataErrorCode::empty_split, "split would produce an empty partition");
    }
    std::vector<long> test_ids(order.begin(), order.begin() + test_count);
    std::vector<long> train_ids(order.begin() + test_count, order.end());

    if (ds.raw) {
        // Re-encode from raw rows with train-partition statistics.
        std::vector<long> train_raw, test_raw;
        for (long i : train_ids) train_raw.push_back(ds.raw_rows[i]);
        for (long i : test_ids) test_raw.push_back(ds.raw_rows[i]);
        const CsvEncoder enc = build_encoder(*ds.raw, train_raw);
        Dataset train = encode_rows(ds.raw, train_raw, enc, ds.source + ":train");
        Dataset test = encode_rows(ds.raw, test_raw, enc, ds.source + ":test");
        return {std::move(train), std::move(test)};
    }

    auto take = [&](const std::vector<long>& ids, const std::string& suffix) {
        Dataset part;
        part.features = Matrix(static_cast<int>(ids.size()), ds.features.cols);
        part.labels = Matrix(static_cast<int>(ids.size()), ds.labels.cols);
        for (std::size_t r = 0; r < ids.size(); ++r) {
            std::memcpy(part.features.row(static_cast<int>(r)), ds.features.row(ids[r]),
                        sizeof(double) * ds.features.cols);
            std::memcpy(part.labels.row(static_cast<int>(r)), ds.labels.row(ids[r]),
                        sizeof(double) * ds.labels.cols);
        }
        part.num_classes = ds.num_classes;
        part.multi_label = ds.multi_label;
        part.feature_names = ds.feature_names;
        part.class_names = ds.class_names;
        part.source = ds.source + suffix;
        part.dropped_rows = ds.dropped_rows;
        return part;
    };
    return {take(train_ids, ":train"), take(test_ids, ":test")};
}

}  // namespace sparsegate
