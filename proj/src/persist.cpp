#include "sparsegate/persist.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "sparsegate/errors.hpp"

namespace sparsegate {

namespace {

constexpr char kBase64Chars[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int base64_value(char c) {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
}

}  // namespace

std::string base64_encode(const std::uint8_t* bytes, std::size_t size) {
    std::string out;
    out.reserve((size + 2) / 3 * 4);
    for (std::size_t i = 0; i < size; i += 3) {
        std::uint32_t chunk = static_cast<std::uint32_t>(bytes[i]) << 16;
        if (i + 1 < size) chunk |= static_cast<std::uint32_t>(bytes[i + 1]) << 8;
        if (i + 2 < size) chunk |= bytes[i + 2];
        out += kBase64Chars[(chunk >> 18) & 0x3F];
        out += kBase64Chars[(chunk >> 12) & 0x3F];
        out += (i + 1 < size) ? kBase64Chars[(chunk >> 6) & 0x3F] : '=';
        out += (i + 2 < size) ? kBase64Chars[chunk & 0x3F] : '=';
    }
    return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
    std::vector<std::uint8_t> out;
    out.reserve(text.size() / 4 * 3);
    std::uint32_t chunk = 0;
    int bits = 0;
    for (char c : text) {
        if (c == '=' || c == '\n' || c == '\r') continue;
        const int v = base64_value(c);
        if (v < 0) {
            throw DataError(DataErrorCode::bad_value, "invalid base64 character");
        }
        chunk = (chunk << 6) | static_cast<std::uint32_t>(v);
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            out.push_back(static_cast<std::uint8_t>((chunk >> bits) & 0xFF));
        }
    }
    return out;
}

std::string encode_doubles(const std::vector<double>& values) {
    std::vector<std::uint8_t> bytes(values.size() * 8);
    for (std::size_t i = 0; i < values.size(); ++i) {
        const std::uint64_t u = std::bit_cast<std::uint64_t>(values[i]);
        for (int b = 0; b < 8; ++b) {
            bytes[i * 8 + b] = static_cast<std::uint8_t>((u >> (8 * b)) & 0xFF);
        }
    }
    return base64_encode(bytes.data(), bytes.size());
}

std::vector<double> decode_doubles(const std::string& text) {
    const auto bytes = base64_decode(text);
    if (bytes.size() % 8 != 0) {
        throw DataError(DataErrorCode::bad_value, "double array payload not a multiple of 8");
    }
    std::vector<double> values(bytes.size() / 8);
    for (std::size_t i = 0; i < values.size(); ++i) {
        std::uint64_t u = 0;
        for (int b = 7; b >= 0; --b) {
            u = (u << 8) | bytes[i * 8 + b];
        }
        values[i] = std::bit_cast<double>(u);
    }
    return values;
}

void write_file_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw DataError(DataErrorCode::io, "cannot write " + tmp);
        }
        out << content;
        if (!out.good()) {
            throw DataError(DataErrorCode::io, "write failed for " + tmp);
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        throw DataError(DataErrorCode::io, "rename failed for " + path + ": " + ec.message());
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError(DataErrorCode::io, "cannot open file: " + path);
    }
    return std::string((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
}

std::string fnv1a_hex(const std::string& text) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
    return std::string(buf);
}

namespace {

const char* activation_name(Activation a) {
    return a == Activation::relu ? "relu" : "identity";
}

Activation activation_from(const std::string& name) {
    if (name == "relu") return Activation::relu;
    if (name == "identity") return Activation::identity;
    throw ConfigError("unknown activation: " + name);
}

nlohmann::json specs_to_json(const std::vector<LayerSpec>& specs) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& spec : specs) {
        j.push_back({{"input", spec.input_size},
                     {"output", spec.output_size},
                     {"activation", activation_name(spec.activation)}});
    }
    return j;
}

std::vector<LayerSpec> specs_from_json(const nlohmann::json& j) {
    std::vector<LayerSpec> specs;
    for (const auto& item : j) {
        specs.push_back({item.at("input").get<int>(), item.at("output").get<int>(),
                         activation_from(item.at("activation").get<std::string>())});
    }
    return specs;
}

nlohmann::json parse_artifact(const std::string& path, const char* expected_kind) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(DataErrorCode::io, "cannot parse " + path + ": " + e.what());
    }
    const int version = j.value("format_version", -1);
    if (version != kCheckpointVersion) {
        throw ConfigError("unsupported format_version " + std::to_string(version) + " in " +
                          path + " (expected " + std::to_string(kCheckpointVersion) + ")");
    }
    if (j.value("kind", "") != expected_kind) {
        throw ConfigError("artifact kind mismatch in " + path + " (expected " +
                          expected_kind + ")");
    }
    return j;
}

}  // namespace

GatedNetwork Checkpoint::to_network() const {
    GatedNetwork net;
    net.specs = specs;
    net.layers = layers;
    net.temperature = temperature;
    return net;
}

Checkpoint Checkpoint::from_network(const GatedNetwork& net, std::uint64_t seed, int epoch,
                                    const std::string& train_config_json,
                                    const std::string& config_hash) {
    Checkpoint checkpoint;
    checkpoint.specs = net.specs;
    checkpoint.layers = net.layers;
    checkpoint.temperature = net.temperature;
    checkpoint.seed = seed;
    checkpoint.epoch = epoch;
    checkpoint.train_config_json = train_config_json;
    checkpoint.config_hash = config_hash;
    return checkpoint;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path) {
    nlohmann::json j;
    j["format_version"] = kCheckpointVersion;
    j["kind"] = "checkpoint";
    j["layer_specs"] = specs_to_json(checkpoint.specs);
    j["layers"] = nlohmann::json::array();
    for (const auto& layer : checkpoint.layers) {
        j["layers"].push_back({{"weights", encode_doubles(layer.weights.data)},
                               {"bias", encode_doubles(layer.bias)},
                               {"gate_logits", encode_doubles(layer.gate_logits.data)}});
    }
    j["temperature"] = checkpoint.temperature;
    j["seed"] = checkpoint.seed;
    j["epoch"] = checkpoint.epoch;
    if (!checkpoint.train_config_json.empty()) {
        j["train_config"] = nlohmann::json::parse(checkpoint.train_config_json);
    }
    j["config_hash"] = checkpoint.config_hash;
    write_file_atomic(path, j.dump(2) + "\n");
}

Checkpoint load_checkpoint(const std::string& path) {
    const nlohmann::json j = parse_artifact(path, "checkpoint");
    Checkpoint checkpoint;
    checkpoint.specs = specs_from_json(j.at("layer_specs"));
    for (std::size_t l = 0; l < checkpoint.specs.size(); ++l) {
        const auto& spec = checkpoint.specs[l];
        const auto& jl = j.at("layers").at(l);
        Layer layer;
        layer.weights = Matrix(spec.output_size, spec.input_size);
        layer.weights.data = decode_doubles(jl.at("weights").get<std::string>());
        layer.bias = decode_doubles(jl.at("bias").get<std::string>());
        layer.gate_logits = Matrix(spec.output_size, spec.input_size);
        layer.gate_logits.data = decode_doubles(jl.at("gate_logits").get<std::string>());
        const std::size_t expected =
            static_cast<std::size_t>(spec.output_size) * spec.input_size;
        if (layer.weights.data.size() != expected ||
            layer.gate_logits.data.size() != expected ||
            layer.bias.size() != static_cast<std::size_t>(spec.output_size)) {
            throw DataError(DataErrorCode::bad_value, "layer payload size mismatch in " + path);
        }
        checkpoint.layers.push_back(std::move(layer));
    }
    checkpoint.temperature = j.at("temperature").get<double>();
    checkpoint.seed = j.at("seed").get<std::uint64_t>();
    checkpoint.epoch = j.at("epoch").get<int>();
    if (j.contains("train_config")) {
        checkpoint.train_config_json = j.at("train_config").dump();
    }
    checkpoint.config_hash = j.value("config_hash", "");
    return checkpoint;
}

void save_pruned(const PrunedNetwork& net, const std::string& config_hash,
                 const std::string& path) {
    nlohmann::json j;
    j["format_version"] = kCheckpointVersion;
    j["kind"] = "pruned";
    j["layer_specs"] = specs_to_json(net.specs);
    j["layers"] = nlohmann::json::array();
    for (const auto& layer : net.layers) {
        j["layers"].push_back(
            {{"weights", encode_doubles(layer.weights.data)},
             {"bias", encode_doubles(layer.bias)},
             {"mask", base64_encode(layer.mask.data(), layer.mask.size())}});
    }
    j["density"] = net.density();
    j["retained_count"] = net.retained_count();
    j["config_hash"] = config_hash;
    write_file_atomic(path, j.dump(2) + "\n");
}

PrunedNetwork load_pruned(const std::string& path) {
    const nlohmann::json j = parse_artifact(path, "pruned");
    PrunedNetwork net;
    net.specs = specs_from_json(j.at("layer_specs"));
    for (std::size_t l = 0; l < net.specs.size(); ++l) {
        const auto& spec = net.specs[l];
        const auto& jl = j.at("layers").at(l);
        PrunedLayer layer;
        layer.weights = Matrix(spec.output_size, spec.input_size);
        layer.weights.data = decode_doubles(jl.at("weights").get<std::string>());
        layer.bias = decode_doubles(jl.at("bias").get<std::string>());
        layer.mask = base64_decode(jl.at("mask").get<std::string>());
        const std::size_t expected =
            static_cast<std::size_t>(spec.output_size) * spec.input_size;
        if (layer.weights.data.size() != expected || layer.mask.size() != expected ||
            layer.bias.size() != static_cast<std::size_t>(spec.output_size)) {
            throw DataError(DataErrorCode::bad_value, "layer payload size mismatch in " + path);
        }
        net.layers.push_back(std::move(layer));
    }
    return net;
}

}  // namespace sparsegate
