#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace pricesim {

// Finalizer of the splitmix64 generator; used as a seed mixer.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Fixed splitting rule for deriving per-component streams from a master seed.
// Stream 0 drives the traffic generator, stream i+1 drives agent i, so adding
// or removing an agent never perturbs any other component's realization.
constexpr std::uint64_t substream_seed(std::uint64_t master, std::uint64_t stream) {
    return splitmix64(master ^ splitmix64(stream + 1));
}

// Deterministic random stream with serializable state.
//
// Gaussians are produced by Box-Muller from exactly two engine draws per
// sample (no cached spare), so the stream state alone fully determines every
// future draw and round-trips through save_state()/restore_state() bit-exactly.
class RandomStream {
public:
    RandomStream() : engine_(0) {}
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    // Uniform double in [0, 1).
    double uniform01();

    double gaussian(double mean, double stddev);

    std::string save_state() const;
    void restore_state(const std::string& state);

    bool operator==(const RandomStream& other) const { return engine_ == other.engine_; }

private:
    std::mt19937_64 engine_;
};

}  // namespace pricesim
