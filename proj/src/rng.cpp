#include "condinf/rng.hpp"

#include "condinf/stats.hpp"

namespace condinf {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// splitmix64 output function.
std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
}

} // namespace

CounterRng::CounterRng(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
    std::uint64_t key = mix64(seed + kGolden);
    for (std::uint64_t p : path) {
        key = mix64(key ^ mix64(p + kGolden));
    }
    key_ = key;
}

std::uint64_t CounterRng::next_u64() {
    ++counter_;
    return mix64(key_ + counter_ * kGolden);
}

double CounterRng::uniform() {
    // Top 53 bits, offset by half a ulp so 0 and 1 are unreachable.
    const std::uint64_t bits = next_u64() >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double CounterRng::normal() {
    return inverse_normal_cdf(uniform());
}

} // namespace condinf
