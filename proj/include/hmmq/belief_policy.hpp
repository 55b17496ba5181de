#pragma once

#include <variant>

#include <Eigen/Dense>

#include "hmmq/estimators.hpp"
#include "hmmq/pomdp_env.hpp"
#include "hmmq/random.hpp"

namespace hmmq {

/// Learned model and Q table held fixed for decision making.
struct FrozenModel {
    TransitionTensor transition;  // K slices, row-stochastic
    MatrixXd obs;                 // I x J
    MatrixXd reward;              // K x I
    double sigma = 1.0;
    MatrixXd q;                   // I x K

    int num_states() const { return static_cast<int>(obs.rows()); }
    int num_actions() const { return static_cast<int>(q.cols()); }
};

/// Freeze the session: realized O, R, sigma, conditional T from the joint table, and Q.
FrozenModel freeze(const HmmSession& session);

/// u' = T(a)^T B u / (b^T u) with b_i = O(i, o) N(r; R(a, i), sigma^2).
VectorXd belief_step_with_action(const VectorXd& belief, const ExtendedObs& y, const FrozenModel& frozen);

struct ActionChoice {
    int action = 0;
    /// Set when O(., o) carried no mass under the belief and the prior belief was used instead.
    bool used_prior = false;
};

/// argmax_a sum_i Q(i, a) P(s = i | o, u); ties go to the lowest action index.
ActionChoice greedy_action(const FrozenModel& frozen, const VectorXd& belief, int obs);

struct BeliefGreedyPolicy {
    FrozenModel frozen;
};
/// Greedy on a state-indexed table; the true state is revealed to it.
struct StateGreedyPolicy {
    MatrixXd q;
};
/// Greedy on an observation-indexed table.
struct ObsGreedyPolicy {
    MatrixXd q;
};
using EvalPolicy = std::variant<BeliefGreedyPolicy, StateGreedyPolicy, ObsGreedyPolicy>;

/// Mean reward per step over episodes x steps rollouts from uniformly drawn initial states.
double evaluate_policy(const PomdpModel& model, const EvalPolicy& policy, int episodes, int steps,
                       RandomStream& rng);

}  // namespace hmmq
