#include "hmmq/pomdp_env.hpp"

#include <cmath>
#include <numeric>
#include <queue>
#include <sstream>

namespace hmmq {

void require_row_stochastic(const MatrixXd& m, const std::string& what, double tol) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        if ((m.row(r).array() < 0.0).any() || !m.row(r).allFinite()) {
            std::ostringstream os;
            os << what << ": row " << r << " has a negative or non-finite entry";
            throw ContractViolation(os.str());
        }
        const double sum = m.row(r).sum();
        if (std::abs(sum - 1.0) > tol) {
            std::ostringstream os;
            os << what << ": row " << r << " sums to " << sum << ", not 1";
            throw ContractViolation(os.str());
        }
    }
}

void PomdpModel::validate() const {
    if (num_states <= 0 || num_actions <= 0 || num_obs <= 0) {
        throw ContractViolation("PomdpModel: sizes must be positive");
    }
    if (static_cast<int>(transition.size()) != num_actions) {
        throw ContractViolation("PomdpModel: transition must hold one matrix per action");
    }
    for (int a = 0; a < num_actions; ++a) {
        if (transition[a].rows() != num_states || transition[a].cols() != num_states) {
            throw ContractViolation("PomdpModel: transition matrices must be I x I");
        }
        require_row_stochastic(transition[a], "transition[" + std::to_string(a) + "]");
    }
    if (reward_mean.rows() != num_actions || reward_mean.cols() != num_states ||
        !reward_mean.allFinite()) {
        throw ContractViolation("PomdpModel: reward_mean must be a finite K x I table");
    }
    if (obs.rows() != num_states || obs.cols() != num_obs) {
        throw ContractViolation("PomdpModel: obs must be I x J");
    }
    require_row_stochastic(obs, "obs");
    if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
        throw ContractViolation("PomdpModel: noise_sigma must be non-negative");
    }
    if (!(discount >= 0.0 && discount < 1.0)) {
        throw ContractViolation("PomdpModel: discount must lie in [0, 1)");
    }
}

void BehaviorPolicy::validate(const PomdpModel& model) const {
    if (mu.rows() != model.num_obs || mu.cols() != model.num_actions) {
        throw ContractViolation("BehaviorPolicy: mu must be J x K");
    }
    require_row_stochastic(mu, "mu");
}

StepOutcome sample_step(const PomdpModel& model, const BehaviorPolicy& policy, int state,
                        RandomStream& rng) {
    if (state < 0 || state >= model.num_states) {
        throw ContractViolation("sample_step: state index " + std::to_string(state) +
                                " out of range");
    }
    StepOutcome out;
    out.y.obs = rng.categorical(model.obs.row(state).transpose());
    out.y.action = rng.categorical(policy.mu.row(out.y.obs).transpose());
    const double noise = model.noise_sigma > 0.0 ? model.noise_sigma * rng.normal() : 0.0;
    out.y.reward = model.reward_mean(out.y.action, state) + noise;
    out.next_state = rng.categorical(model.transition[out.y.action].row(state).transpose());
    return out;
}

MatrixXd derive_behavior_chain(const PomdpModel& model, const BehaviorPolicy& policy) {
    const int n = model.num_states;
    MatrixXd chain = MatrixXd::Zero(n, n);
    for (int s = 0; s < n; ++s) {
        for (int o = 0; o < model.num_obs; ++o) {
            for (int a = 0; a < model.num_actions; ++a) {
                chain.row(s) += model.obs(s, o) * policy.mu(o, a) * model.transition[a].row(s);
            }
        }
    }
    return chain;
}

bool check_ergodic(const MatrixXd& chain) {
    const int n = static_cast<int>(chain.rows());
    if (n == 0 || chain.cols() != n) return false;

    // Breadth-first levels from state 0: the chain is irreducible iff every
    // state is reachable from 0 and 0 is reachable from every state; the
    // period is the gcd over edges (u, v) of level[u] + 1 - level[v].
    std::vector<int> level(n, -1);
    std::queue<int> frontier;
    level[0] = 0;
    frontier.push(0);
    while (!frontier.empty()) {
        const int u = frontier.front();
        frontier.pop();
        for (int v = 0; v < n; ++v) {
            if (chain(u, v) > 0.0 && level[v] < 0) {
                level[v] = level[u] + 1;
                frontier.push(v);
            }
        }
    }
    for (int v = 0; v < n; ++v) {
        if (level[v] < 0) return false;
    }

    std::vector<bool> reaches_zero(n, false);
    reaches_zero[0] = true;
    for (bool changed = true; changed;) {
        changed = false;
        for (int u = 0; u < n; ++u) {
            if (reaches_zero[u]) continue;
            for (int v = 0; v < n; ++v) {
                if (chain(u, v) > 0.0 && reaches_zero[v]) {
                    reaches_zero[u] = true;
                    changed = true;
                    break;
                }
            }
        }
    }
    for (int u = 0; u < n; ++u) {
        if (!reaches_zero[u]) return false;
    }

    int period = 0;
    for (int u = 0; u < n; ++u) {
        for (int v = 0; v < n; ++v) {
            if (chain(u, v) > 0.0) period = std::gcd(period, std::abs(level[u] + 1 - level[v]));
        }
    }
    return period == 1;
}

PomdpModel paper_s4_model() {
    PomdpModel m;
    m.num_states = 4;
    m.num_actions = 2;
    m.num_obs = 2;
    m.transition.resize(2, MatrixXd(4, 4));
    m.transition[0] << .6, .2, .1, .1,
                       .2, .1, .6, .1,
                       .1, .1, .1, .7,
                       .4, .1, .1, .4;
    m.transition[1] << .1, .2, .2, .5,
                       .1, .6, .1, .2,
                       .1, .2, .6, .1,
                       .1, .1, .2, .6;
    m.obs.resize(4, 2);
    m.obs << .95, .05,
             .95, .05,
             .05, .95,
             .05, .95;
    m.reward_mean.resize(2, 4);
    m.reward_mean << 0., 0., -20., 20.,
                     0., 0., 20., -20.;
    m.noise_sigma = 1.0;
    m.discount = 0.95;
    return m;
}

BehaviorPolicy paper_s4_policy() {
    BehaviorPolicy p;
    p.mu.resize(2, 2);
    p.mu << .6, .4,
            .3, .7;
    return p;
}

}  // namespace hmmq
