#include "sparsegate/baseline.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "sparsegate/rng.hpp"

namespace sparsegate {

RandomMask random_mask(std::size_t gate_count, const RandomMaskSpec& spec) {
    if (!(spec.density > 0.0 && spec.density <= 1.0)) {
        throw std::invalid_argument("random_mask: density must be in (0,1]");
    }
    if (gate_count == 0) {
        throw std::invalid_argument("random_mask: no gates");
    }
    std::size_t keep = static_cast<std::size_t>(
        std::floor(spec.density * static_cast<double>(gate_count)));
    RandomMask result;
    if (keep == 0) {
        keep = 1;
        result.forced_min_one = true;
    }

    // Partial Fisher-Yates: the first `keep` slots of a shuffled index array.
    std::vector<std::size_t> order(gate_count);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(spec.seed);
    for (std::size_t i = 0; i < keep; ++i) {
        const std::size_t j = i + rng.next_u64() % (gate_count - i);
        std::swap(order[i], order[j]);
    }
    result.mask.assign(gate_count, 0);
    for (std::size_t i = 0; i < keep; ++i) {
        result.mask[order[i]] = 1;
    }
    return result;
}

TrainReport train_fixed_mask(GatedNetwork& net, const std::vector<std::uint8_t>& mask,
                             const Dataset& train, const Dataset& test,
                             const TrainConfig& cfg) {
    return fit_pinned(net, mask, train, test, cfg);
}

}  // namespace sparsegate
