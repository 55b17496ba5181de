#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "hmmq/estimators.hpp"
#include "hmmq/random.hpp"

namespace hmmq {

class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Everything needed to resume training or evaluate a snapshot.
///
/// On disk this is a line-oriented `key = value` text file. Scalars are
/// written as C99 hex floats, so reading back yields the identical bits.
/// Matrices are `rows cols v00 v01 ...` in row-major order. Lines starting
/// with '#' are comments.
struct Checkpoint {
    HmmSession session;
    MatrixXd q_full;     // I x K, full-observation Q-learning baseline
    MatrixXd q_partial;  // J x K, observation-indexed Q-learning baseline
    int env_state = 0;   // hidden state s_n
    int env_obs = 0;     // observation o_n, already drawn, not yet acted on
    RandomStream rng_environment;
    RandomStream rng_estimator_init;
    RandomStream rng_evaluation;

    bool operator==(const Checkpoint& other) const;
};

std::string checkpoint_to_text(const Checkpoint& ckpt);
Checkpoint checkpoint_from_text(const std::string& text);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Hex-float text of a double, e.g. 0x1.8p+1.
std::string hex_double(double x);

}  // namespace hmmq
