#include "hmmq/belief_policy.hpp"

#include <cmath>

#include "hmmq/baselines.hpp"

namespace hmmq {

FrozenModel freeze(const HmmSession& session) {
    const RealizedModel realized = realize(session.theta);
    FrozenModel f;
    f.transition = normalize_transitions(session.t).conditional;
    f.obs = realized.obs;
    f.reward = realized.reward;
    f.sigma = realized.sigma;
    f.q = session.q;
    return f;
}

VectorXd belief_step_with_action(const VectorXd& belief, const ExtendedObs& y, const FrozenModel& frozen) {
    const int n = frozen.num_states();
    const double var = frozen.sigma * frozen.sigma;
    VectorXd log_b(n);
    for (int i = 0; i < n; ++i) {
        const double dev = y.reward - frozen.reward(y.action, i);
        log_b[i] = std::log(frozen.obs(i, y.obs)) - 0.5 * dev * dev / var;
    }
    const double shift = log_b.maxCoeff();
    if (!std::isfinite(shift)) throw DegenerateLikelihood("belief_step_with_action: zero likelihood");
    const VectorXd weighted = (log_b.array() - shift).exp().matrix().cwiseProduct(belief);
    const double norm = weighted.sum();
    if (!(norm > 0.0)) throw DegenerateLikelihood("belief_step_with_action: b^T u is not positive");
    return frozen.transition[y.action].transpose() * (weighted / norm);
}

ActionChoice greedy_action(const FrozenModel& frozen, const VectorXd& belief, int obs) {
    ActionChoice choice;
    VectorXd weights = frozen.obs.col(obs).cwiseProduct(belief);
    double mass = weights.sum();
    if (!(mass > 0.0)) {
        weights = belief;
        mass = weights.sum();
        choice.used_prior = true;
    }
    const VectorXd value = frozen.q.transpose() * (weights / mass);
    for (int a = 1; a < value.size(); ++a) {
        if (value[a] > value[choice.action]) choice.action = a;
    }
    return choice;
}

namespace {

double reward_at(const PomdpModel& model, int state, int action, RandomStream& rng) {
    const double noise = model.noise_sigma > 0.0 ? model.noise_sigma * rng.normal() : 0.0;
    return model.reward_mean(action, state) + noise;
}

}  // namespace

double evaluate_policy(const PomdpModel& model, const EvalPolicy& policy, int episodes, int steps,
                       RandomStream& rng) {
    if (episodes < 1 || steps < 1) throw ContractViolation("evaluate_policy: counts must be >= 1");
    const int n = model.num_states;
    double total = 0.0;
    for (int ep = 0; ep < episodes; ++ep) {
        int state = rng.uniform_index(n);
        VectorXd belief = VectorXd::Constant(n, 1.0 / n);
        for (int t = 0; t < steps; ++t) {
            const int obs = rng.categorical(model.obs.row(state).transpose());
            int action = 0;
            if (const auto* p = std::get_if<BeliefGreedyPolicy>(&policy)) {
                action = greedy_action(p->frozen, belief, obs).action;
            } else if (const auto* p = std::get_if<StateGreedyPolicy>(&policy)) {
                action = greedy_in_row(p->q, state);
            } else {
                action = greedy_in_row(std::get<ObsGreedyPolicy>(policy).q, obs);
            }
            const double reward = reward_at(model, state, action, rng);
            total += reward;
            const int next = rng.categorical(model.transition[action].row(state).transpose());
            if (const auto* p = std::get_if<BeliefGreedyPolicy>(&policy)) {
                belief = belief_step_with_action(belief, ExtendedObs{obs, action, reward}, p->frozen);
            }
            state = next;
        }
    }
    return total / (static_cast<double>(episodes) * steps);
}

}  // namespace hmmq
