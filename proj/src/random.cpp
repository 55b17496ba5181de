#include "hmmq/random.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace hmmq {

namespace {

std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace

RandomStream RandomStream::derive(std::uint64_t seed, std::string_view name, std::uint64_t index) {
    const std::uint64_t tag = fnv1a(name);
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(tag >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    RandomStream out;
    out.engine_.seed(seq);
    return out;
}

double RandomStream::uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RandomStream::normal() {
    // 1 - U lies in (0, 1], so the log is finite.
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

int RandomStream::categorical(const Eigen::Ref<const Eigen::VectorXd>& probs) {
    const double x = uniform();
    double acc = 0.0;
    const int n = static_cast<int>(probs.size());
    for (int i = 0; i < n; ++i) {
        acc += probs[i];
        if (x < acc) return i;
    }
    // Rounding left the CDF slightly below 1; take the last index with mass.
    for (int i = n - 1; i >= 0; --i) {
        if (probs[i] > 0.0) return i;
    }
    throw std::invalid_argument("categorical: probability vector has no mass");
}

int RandomStream::uniform_index(int n) {
    if (n <= 0) throw std::invalid_argument("uniform_index: n must be positive");
    return static_cast<int>(uniform() * n);
}

std::string RandomStream::serialize() const {
    std::ostringstream os;
    os << engine_;
    return os.str();
}

void RandomStream::deserialize(const std::string& text) {
    std::istringstream is(text);
    is >> engine_;
    if (!is) throw std::runtime_error("RandomStream: malformed engine state");
}

RunStreams RunStreams::from_seed(std::uint64_t seed) {
    return RunStreams{RandomStream::derive(seed, "environment"),
                      RandomStream::derive(seed, "estimator-init"),
                      RandomStream::derive(seed, "evaluation")};
}

}  // namespace hmmq
