#pragma once

#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hmmq/hmm_filter.hpp"
#include "hmmq/pomdp_env.hpp"
#include "hmmq/random.hpp"
#include "hmmq/theta.hpp"

namespace hmmq {

/// Joint transition estimate, one I x I slice per action: table[a](s, s') ~ P(s, a, s').
using JointTransitionTable = std::vector<MatrixXd>;

/// Clamp interval for Q entries.
struct QBounds {
    double lo = -1e300;
    double hi = 1e300;

    /// [-(R_max / (1 - gamma) + margin), R_max / (1 - gamma) + margin].
    static QBounds from_reward_bound(double r_max, double gamma, double margin = 1.0);
};

enum class TUpdateMode { averaging, literal };
enum class QTiming { alg1, eq14 };

/// Bayes posterior of the current state, p_i = b_i u_i / sum_j b_j u_j.
VectorXd posterior_state(const ExtendedObs& y, const VectorXd& belief, const ThetaParams& theta,
                         const BehaviorPolicy& policy);

/// Product of consecutive marginal posteriors, prev_i * cur_j.
MatrixXd posterior_transition(const VectorXd& prev, const VectorXd& cur);

struct SgdStep {
    ThetaParams theta;
    FilterState filter;
    VectorXd posterior;
    double log_likelihood = 0.0;
};

/// Projected score ascent on theta; the filter advances with the old theta.
SgdStep hmm_sgd_step(const ThetaParams& theta, const FilterState& filter, const ExtendedObs& y,
                     double epsilon, const BehaviorPolicy& policy, const ThetaBounds& bounds);

/// Belief-weighted Q update of column `action`:
/// q(i, a) += eps * sum_j p(i, j) (r + gamma max_a' q(j, a') - q(i, a)).
MatrixXd q_update(const MatrixXd& q, const MatrixXd& p_pair, double reward, int action,
                  double epsilon, double gamma, const QBounds& bounds);

/// Update of slice `action` of the joint transition table.
JointTransitionTable t_update(const JointTransitionTable& t, const MatrixXd& p_pair, int action,
                              double epsilon, TUpdateMode mode);

struct NormalizedTransitions {
    TransitionTensor conditional;
    /// (state, action) pairs whose joint row had zero mass; their row is uniform.
    std::vector<std::pair<int, int>> unvisited;
};

NormalizedTransitions normalize_transitions(const JointTransitionTable& t);

/// Settings shared by every step of one estimation run.
struct EstimatorSettings {
    StepSchedule schedule;
    ThetaBounds bounds;
    QBounds q_bounds;
    double gamma = 0.95;
    TUpdateMode t_mode = TUpdateMode::averaging;
    QTiming q_timing = QTiming::alg1;
};

/// Complete state of the concurrent estimators.
struct HmmSession {
    long long step = 0;  // number of extended observations consumed
    ThetaParams theta;
    FilterState filter;
    MatrixXd q;                // I x K
    JointTransitionTable t;    // K slices of I x I
    VectorXd posterior_prev;
    double reward_prev = 0.0;
    int action_prev = 0;

    /// Random theta, uniform belief, zero Jacobian and Q, flat joint table,
    /// uniform previous posterior, random previous action, zero previous reward.
    static HmmSession initialize(int num_states, int num_actions, int num_obs, const ThetaInit& init,
                                 RandomStream& rng);

    bool operator==(const HmmSession& other) const;
};

struct SessionStepReport {
    double epsilon = 0.0;
    double log_likelihood = 0.0;
};

/// One pass of the main loop: estimator update, posterior, pairwise
/// posterior with the previous one, Q update, joint-table update, rotation.
SessionStepReport algorithm1_step(HmmSession& session, const ExtendedObs& y,
                                  const EstimatorSettings& settings, const BehaviorPolicy& policy);

}  // namespace hmmq
