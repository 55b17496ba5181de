#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hmmq/random.hpp"

namespace hmmq {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Per-action stack of I x I matrices; tensor[a](s, s') = P(s' | s, a).
using TransitionTensor = std::vector<MatrixXd>;

/// Raised when a caller breaks a documented precondition (bad index, bad shape).
class ContractViolation : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Ground-truth finite POMDP with Gaussian reward noise.
struct PomdpModel {
    int num_states = 0;
    int num_actions = 0;
    int num_obs = 0;
    TransitionTensor transition;  // K entries of I x I
    MatrixXd reward_mean;         // K x I, reward_mean(a, s) = r(s, a)
    MatrixXd obs;                 // I x J, obs(s, o) = P(o | s)
    double noise_sigma = 1.0;
    double discount = 0.0;

    /// Throws ContractViolation naming the first broken invariant.
    void validate() const;
};

/// Fixed observation-conditioned action distribution, mu(o, a) = P(a | o).
struct BehaviorPolicy {
    MatrixXd mu;  // J x K

    void validate(const PomdpModel& model) const;
};

/// Extended observation y = (o, a, r) emitted by the POMDP under the behavior policy.
struct ExtendedObs {
    int obs = 0;
    int action = 0;
    double reward = 0.0;
};

struct StepOutcome {
    ExtendedObs y;
    int next_state = 0;
};

/// Observe at s, act from mu, collect the noisy reward and move.
StepOutcome sample_step(const PomdpModel& model, const BehaviorPolicy& policy, int state,
                        RandomStream& rng);

/// Marginal state chain under the behavior policy:
/// P(s, s') = sum_o O(s, o) sum_a mu(o, a) T_a(s, s').
MatrixXd derive_behavior_chain(const PomdpModel& model, const BehaviorPolicy& policy);

/// True iff the chain is irreducible and aperiodic (primitive transition graph).
bool check_ergodic(const MatrixXd& chain);

/// The 4-state, 2-action, 2-observation benchmark with its behavior policy.
PomdpModel paper_s4_model();
BehaviorPolicy paper_s4_policy();

/// Checks that every row is a probability vector within tol.
void require_row_stochastic(const MatrixXd& m, const std::string& what, double tol = 1e-12);

}  // namespace hmmq
