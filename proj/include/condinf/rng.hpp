#pragma once

#include <cstdint>
#include <initializer_list>

namespace condinf {

// Counter-based random stream.
//
// A stream is identified by a 64-bit seed plus a path of stream identifiers
// (e.g. {domain, truth_index, replicate_index}). The identifiers are folded
// into a key with the splitmix64 finalizer, and the n-th output of the stream
// is a pure function of (key, n). Streams for distinct (seed, path) pairs are
// statistically independent and there is no sequential dependence between
// streams, so replicates can be generated in any order or on any thread with
// identical results.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

    std::uint64_t next_u64();

    // Uniform double in the open interval (0, 1), 53-bit resolution.
    double uniform();

    // Standard normal deviate via the inverse-CDF transform; deterministic
    // and platform-independent for a given stream position.
    double normal();

private:
    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
};

} // namespace condinf
