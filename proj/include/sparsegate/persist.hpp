#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sparsegate/network.hpp"
#include "sparsegate/train.hpp"

namespace sparsegate {

// Base64 of the IEEE-754 bytes, little-endian, so numeric round-trips are
// exact while the JSON envelope stays diffable.
std::string base64_encode(const std::uint8_t* bytes, std::size_t size);
std::vector<std::uint8_t> base64_decode(const std::string& text);
std::string encode_doubles(const std::vector<double>& values);
std::vector<double> decode_doubles(const std::string& text);

// Write-to-temp + rename, so failed commands leave no partial artifact.
void write_file_atomic(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);  // DataError(io) when missing

// FNV-1a 64 over the canonical config dump; embedded in every artifact for
// provenance auditing.
std::string fnv1a_hex(const std::string& text);

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
    std::vector<LayerSpec> specs;
    std::vector<Layer> layers;
    double temperature = 1.0;
    std::uint64_t seed = 0;
    int epoch = 0;
    std::string train_config_json;  // echo of the training config
    std::string config_hash;

    GatedNetwork to_network() const;
    static Checkpoint from_network(const GatedNetwork& net, std::uint64_t seed, int epoch,
                                   const std::string& train_config_json,
                                   const std::string& config_hash);
};

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);  // ConfigError on version mismatch

void save_pruned(const PrunedNetwork& net, const std::string& config_hash,
                 const std::string& path);
PrunedNetwork load_pruned(const std::string& path);

}  // namespace sparsegate
