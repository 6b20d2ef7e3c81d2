#pragma once

#include <cstdint>
#include <vector>

#include "sparsegate/train.hpp"

namespace sparsegate {

struct RandomMaskSpec {
    double density;  // in (0,1]
    std::uint64_t seed = 0;
};

struct RandomMask {
    std::vector<std::uint8_t> mask;
    bool forced_min_one = false;  // density*d rounded down to zero, one gate forced on
};

// Exactly floor(density * gate_count) gates on, chosen uniformly without
// replacement over all positions -- global, not per layer.
RandomMask random_mask(std::size_t gate_count, const RandomMaskSpec& spec);

// Random-pruning baseline: trains weights and biases under a fixed mask with
// the same loop and optimizer machinery as fit(). Gate logits are untouched.
TrainReport train_fixed_mask(GatedNetwork& net, const std::vector<std::uint8_t>& mask,
                             const Dataset& train, const Dataset& test,
                             const TrainConfig& cfg);

}  // namespace sparsegate
