#include "hmmq/estimators.hpp"

#include <algorithm>
#include <cmath>

namespace hmmq {

QBounds QBounds::from_reward_bound(double r_max, double gamma, double margin) {
    const double lim = r_max / (1.0 - gamma) + margin;
    return QBounds{-lim, lim};
}

VectorXd posterior_state(const ExtendedObs& y, const VectorXd& belief, const ThetaParams& theta,
                         const BehaviorPolicy& policy) {
    const ScaledEmission em = scaled_emission(y, realize(theta), policy);
    const double norm = em.b.dot(belief);
    if (!(norm > 0.0) || !std::isfinite(norm)) {
        throw DegenerateLikelihood("posterior_state: b^T u is not positive");
    }
    return em.b.cwiseProduct(belief) / norm;
}

MatrixXd posterior_transition(const VectorXd& prev, const VectorXd& cur) {
    return prev * cur.transpose();
}

SgdStep hmm_sgd_step(const ThetaParams& theta, const FilterState& filter, const ExtendedObs& y,
                     double epsilon, const BehaviorPolicy& policy, const ThetaBounds& bounds) {
    if (epsilon < 0.0) throw ContractViolation("hmm_sgd_step: epsilon must be non-negative");
    FilterStep fs = filter_step(y, filter, theta, policy);
    SgdStep out;
    if (epsilon == 0.0) {
        out.theta = theta;
    } else {
        const ParamLayout lay = theta.layout();
        out.theta = project(ThetaParams::unflatten(lay, theta.flatten() + epsilon * fs.score), bounds);
    }
    out.filter = std::move(fs.next);
    out.posterior = std::move(fs.posterior);
    out.log_likelihood = fs.log_likelihood;
    return out;
}

MatrixXd q_update(const MatrixXd& q, const MatrixXd& p_pair, double reward, int action,
                  double epsilon, double gamma, const QBounds& bounds) {
    if (action < 0 || action >= q.cols()) throw ContractViolation("q_update: action out of range");
    MatrixXd out = q;
    if (epsilon == 0.0) return out;
    const VectorXd best = q.rowwise().maxCoeff();
    const Eigen::Index n = q.rows();
    for (Eigen::Index i = 0; i < n; ++i) {
        double delta = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            delta += p_pair(i, j) * (reward + gamma * best[j] - q(i, action));
        }
        out(i, action) = std::clamp(q(i, action) + epsilon * delta, bounds.lo, bounds.hi);
    }
    return out;
}

JointTransitionTable t_update(const JointTransitionTable& t, const MatrixXd& p_pair, int action,
                              double epsilon, TUpdateMode mode) {
    if (action < 0 || action >= static_cast<int>(t.size())) {
        throw ContractViolation("t_update: action out of range");
    }
    if (epsilon < 0.0 || epsilon > 1.0) throw ContractViolation("t_update: epsilon must lie in [0, 1]");
    JointTransitionTable out = t;
    MatrixXd& slice = out[action];
    if (mode == TUpdateMode::literal) {
        slice.array() += epsilon * p_pair.array() * (1.0 - t[action].array());
    } else {
        slice += epsilon * (p_pair - t[action]);
    }
    slice = slice.cwiseMax(0.0).cwiseMin(1.0);
    return out;
}

NormalizedTransitions normalize_transitions(const JointTransitionTable& t) {
    NormalizedTransitions out;
    out.conditional.reserve(t.size());
    for (std::size_t a = 0; a < t.size(); ++a) {
        MatrixXd cond = t[a];
        const Eigen::Index n = cond.rows();
        for (Eigen::Index s = 0; s < n; ++s) {
            const double mass = cond.row(s).sum();
            if (mass > 0.0) {
                cond.row(s) /= mass;
            } else {
                cond.row(s).setConstant(1.0 / static_cast<double>(cond.cols()));
                out.unvisited.emplace_back(static_cast<int>(s), static_cast<int>(a));
            }
        }
        out.conditional.push_back(std::move(cond));
    }
    return out;
}

HmmSession HmmSession::initialize(int num_states, int num_actions, int num_obs, const ThetaInit& init,
                                  RandomStream& rng) {
    HmmSession s;
    s.theta = ThetaParams::random_init(num_states, num_actions, num_obs, init, rng);
    s.filter = FilterState::initial(num_states, s.theta.layout().size());
    s.q = MatrixXd::Zero(num_states, num_actions);
    s.t.assign(num_actions, MatrixXd::Constant(num_states, num_states, 1.0 / num_states));
    s.posterior_prev = VectorXd::Constant(num_states, 1.0 / num_states);
    s.reward_prev = 0.0;
    s.action_prev = rng.uniform_index(num_actions);
    return s;
}

bool HmmSession::operator==(const HmmSession& other) const {
    if (step != other.step || !(theta == other.theta) || filter.belief != other.filter.belief ||
        filter.jacobian != other.filter.jacobian || q != other.q || t.size() != other.t.size() ||
        posterior_prev != other.posterior_prev || reward_prev != other.reward_prev ||
        action_prev != other.action_prev) {
        return false;
    }
    for (std::size_t a = 0; a < t.size(); ++a) {
        if (t[a] != other.t[a]) return false;
    }
    return true;
}

SessionStepReport algorithm1_step(HmmSession& session, const ExtendedObs& y,
                                  const EstimatorSettings& settings, const BehaviorPolicy& policy) {
    SessionStepReport report;
    report.epsilon = settings.schedule.at(session.step + 1);

    SgdStep sgd = hmm_sgd_step(session.theta, session.filter, y, report.epsilon, policy, settings.bounds);
    report.log_likelihood = sgd.log_likelihood;

    const MatrixXd pair = posterior_transition(session.posterior_prev, sgd.posterior);

    const bool use_prev = settings.q_timing == QTiming::alg1;
    const double q_reward = use_prev ? session.reward_prev : y.reward;
    const int q_action = use_prev ? session.action_prev : y.action;
    session.q = q_update(session.q, pair, q_reward, q_action, report.epsilon, settings.gamma,
                         settings.q_bounds);

    // The pair (s_{n-1}, s_n) was produced by the previous action.
    session.t = t_update(session.t, pair, session.action_prev, std::min(report.epsilon, 1.0),
                         settings.t_mode);

    session.theta = std::move(sgd.theta);
    session.filter = std::move(sgd.filter);
    session.posterior_prev = std::move(sgd.posterior);
    session.reward_prev = y.reward;
    session.action_prev = y.action;
    ++session.step;
    return report;
}

}  // namespace hmmq
