#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace hmmq {

/// Seedable generator with portable sampling routines. The engine is
/// mt19937_64, whose output sequence is fixed by the standard; the
/// uniform, Gaussian and categorical draws below are written out by hand so
/// the whole stream is reproducible across standard library versions.
class RandomStream {
public:
    RandomStream() = default;
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    /// Named child stream: distinct (seed, name, index) triples give
    /// independent generators.
    static RandomStream derive(std::uint64_t seed, std::string_view name, std::uint64_t index = 0);

    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Standard normal by Box-Muller; one pair of uniforms per draw, no cached state.
    double normal();
    /// Index drawn from a probability vector by inverse CDF.
    int categorical(const Eigen::Ref<const Eigen::VectorXd>& probs);
    int uniform_index(int n);

    std::string serialize() const;
    void deserialize(const std::string& text);

    bool operator==(const RandomStream& other) const { return engine_ == other.engine_; }

private:
    std::mt19937_64 engine_{0};
};

/// The three independent streams a run draws from.
struct RunStreams {
    RandomStream environment;
    RandomStream estimator_init;
    RandomStream evaluation;

    static RunStreams from_seed(std::uint64_t seed);
};

}  // namespace hmmq
