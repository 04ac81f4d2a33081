#include "voxelnet/rng.hpp"

namespace voxelnet {

std::uint64_t derive_seed(std::uint64_t master, std::string_view stage,
                          std::uint64_t index) {
    std::uint64_t h = 14695981039346656037ULL;  // FNV-1a offset basis
    for (const char c : stage) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;  // FNV-1a prime
    }
    std::uint64_t s = master ^ h;
    std::uint64_t mixed = splitmix64_next(s);
    s = mixed + (index + 1) * 0x9E3779B97F4A7C15ULL;
    return splitmix64_next(s);
}

}  // namespace voxelnet
