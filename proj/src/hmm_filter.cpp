#include "hmmq/hmm_filter.hpp"

#include <cmath>

namespace hmmq {

FilterState FilterState::initial(int num_states, int num_params) {
    return FilterState{VectorXd::Constant(num_states, 1.0 / num_states),
                       MatrixXd::Zero(num_states, num_params)};
}

ScaledEmission scaled_emission(const ExtendedObs& y, const RealizedModel& model,
                               const BehaviorPolicy& policy) {
    const VectorXd log_b = log_emission(y, model, policy);
    const double log_scale = log_b.maxCoeff();
    if (!std::isfinite(log_scale)) {
        throw DegenerateLikelihood("emission likelihood is zero or non-finite for every state");
    }
    ScaledEmission out;
    out.b = (log_b.array() - log_scale).exp();
    out.grad = log_emission_grad(y, model) * out.b.asDiagonal();
    out.log_scale = log_scale;
    return out;
}

FilterStep filter_step(const ExtendedObs& y, const FilterState& state, const RealizedModel& model,
                       const BehaviorPolicy& policy) {
    const int n = static_cast<int>(state.belief.size());
    const ScaledEmission em = scaled_emission(y, model, policy);

    const double norm = em.b.dot(state.belief);
    if (!(norm > 0.0) || !std::isfinite(norm)) {
        throw DegenerateLikelihood("b^T u is not positive");
    }

    FilterStep out;
    out.posterior = em.b.cwiseProduct(state.belief) / norm;
    out.log_likelihood = em.log_scale + std::log(norm);

    // W = B omega + (dB u) stacked over parameters, I x L. Its column sums
    // over b^T u are the score, and the Jacobian recursion reduces to
    // omega' = P^T (W / c - v S^T) + dP^T v with v the posterior.
    MatrixXd w = em.b.asDiagonal() * state.jacobian;
    w.noalias() += state.belief.asDiagonal() * em.grad.transpose();
    out.score = w.colwise().sum().transpose() / norm;

    MatrixXd inner = w / norm;
    inner.noalias() -= out.posterior * out.score.transpose();

    out.next.belief = model.transition.transpose() * out.posterior;
    out.next.jacobian = model.transition.transpose() * inner;

    // Softmax rows: d P(i, j) / d p_logit(i, k) = P(i, j) (1{j=k} - P(i, k)).
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < n; ++k) {
            const Eigen::Index l = static_cast<Eigen::Index>(i) * n + k;
            const double pik = model.transition(i, k);
            for (int j = 0; j < n; ++j) {
                const double dp = model.transition(i, j) * ((j == k ? 1.0 : 0.0) - pik);
                out.next.jacobian(j, l) += dp * out.posterior[i];
            }
        }
    }
    return out;
}

FilterStep filter_step(const ExtendedObs& y, const FilterState& state, const ThetaParams& theta,
                       const BehaviorPolicy& policy) {
    return filter_step(y, state, realize(theta), policy);
}

VectorXd predict_belief(const ExtendedObs& y, const FilterState& state, const ThetaParams& theta,
                        const BehaviorPolicy& policy) {
    return filter_step(y, state, theta, policy).next.belief;
}

MatrixXd update_jacobian(const ExtendedObs& y, const FilterState& state, const ThetaParams& theta,
                         const BehaviorPolicy& policy) {
    return filter_step(y, state, theta, policy).next.jacobian;
}

double step_log_likelihood(const ExtendedObs& y, const FilterState& state, const ThetaParams& theta,
                           const BehaviorPolicy& policy) {
    return filter_step(y, state, theta, policy).log_likelihood;
}

VectorXd score(const ExtendedObs& y, const FilterState& state, const ThetaParams& theta,
               const BehaviorPolicy& policy) {
    return filter_step(y, state, theta, policy).score;
}

}  // namespace hmmq
