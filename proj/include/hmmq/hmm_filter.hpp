#pragma once

#include <stdexcept>

#include <Eigen/Dense>

#include "hmmq/pomdp_env.hpp"
#include "hmmq/theta.hpp"

namespace hmmq {

/// The likelihood b^T u of the current extended observation vanished or
/// became non-finite, so the Bayes update is undefined.
class DegenerateLikelihood : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One-step-ahead state prediction u_n = P(s_n | y_0..y_{n-1}; theta) and its
/// Jacobian omega_n = du_n / dtheta (I x L). Every Jacobian column sums to zero.
struct FilterState {
    VectorXd belief;
    MatrixXd jacobian;

    /// Uniform belief, zero Jacobian.
    static FilterState initial(int num_states, int num_params);
};

/// Emission likelihoods rescaled by their maximum, with the matching
/// rescaled gradients. Every quantity the filter forms is a ratio in b,
/// so the common scale cancels; log_scale restores absolute likelihoods.
struct ScaledEmission {
    VectorXd b;        // b_i / max_j b_j
    MatrixXd grad;     // d(b_i) / dtheta^(l) on the same scale, L x I
    double log_scale;  // log max_j b_j
};

ScaledEmission scaled_emission(const ExtendedObs& y, const RealizedModel& model,
                               const BehaviorPolicy& policy);

/// Everything one filter step produces, evaluated at a single theta.
struct FilterStep {
    FilterState next;
    VectorXd score;
    VectorXd posterior;  // P(s_n = i | y_n, u_n; theta)
    double log_likelihood = 0.0;
};

FilterStep filter_step(const ExtendedObs& y, const FilterState& state, const ThetaParams& theta,
                       const BehaviorPolicy& policy);
FilterStep filter_step(const ExtendedObs& y, const FilterState& state, const RealizedModel& model,
                       const BehaviorPolicy& policy);

/// u' = P^T B u / (b^T u).
VectorXd predict_belief(const ExtendedObs& y, const FilterState& state, const ThetaParams& theta,
                        const BehaviorPolicy& policy);

/// omega'^(l) = Phi omega^(l) + df/dtheta^(l).
MatrixXd update_jacobian(const ExtendedObs& y, const FilterState& state, const ThetaParams& theta,
                         const BehaviorPolicy& policy);

/// log(b^T u).
double step_log_likelihood(const ExtendedObs& y, const FilterState& state, const ThetaParams& theta,
                           const BehaviorPolicy& policy);

/// S^(l) = (b^T omega^(l) + (db/dtheta^(l))^T u) / (b^T u).
VectorXd score(const ExtendedObs& y, const FilterState& state, const ThetaParams& theta,
               const BehaviorPolicy& policy);

}  // namespace hmmq
