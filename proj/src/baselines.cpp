#include "hmmq/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace hmmq {

MatrixXd q_learning_step(const MatrixXd& q, int state, int action, double reward, int next_state,
                         double epsilon, double gamma) {
    if (state < 0 || state >= q.rows() || next_state < 0 || next_state >= q.rows() || action < 0 ||
        action >= q.cols()) {
        throw ContractViolation("q_learning_step: index out of range");
    }
    MatrixXd out = q;
    const double target = reward + gamma * q.row(next_state).maxCoeff();
    out(state, action) += epsilon * (target - q(state, action));
    return out;
}

MatrixXd partial_q_learning_step(const MatrixXd& q, int obs, int action, double reward, int next_obs,
                                 double epsilon, double gamma) {
    return q_learning_step(q, obs, action, reward, next_obs, epsilon, gamma);
}

MatrixXd value_iteration(const PomdpModel& model, double tol) {
    model.validate();
    if (!(tol > 0.0)) throw ContractViolation("value_iteration: tol must be positive");
    const int n = model.num_states;
    const int k = model.num_actions;
    MatrixXd q = MatrixXd::Zero(n, k);
    for (;;) {
        const VectorXd v = q.rowwise().maxCoeff();
        MatrixXd next(n, k);
        for (int a = 0; a < k; ++a) {
            next.col(a) = model.reward_mean.row(a).transpose() + model.discount * model.transition[a] * v;
        }
        const double change = (next - q).cwiseAbs().maxCoeff();
        q = std::move(next);
        if (change < tol) return q;
    }
}

int greedy_in_row(const MatrixXd& q, int row) {
    int best = 0;
    for (int a = 1; a < q.cols(); ++a) {
        if (q(row, a) > q(row, best)) best = a;
    }
    return best;
}

PermutationMatch best_permutation(int n, const std::function<double(const std::vector<int>&)>& cost) {
    if (n > kMaxPermutedStates) {
        throw ContractViolation("best_permutation: refusing exhaustive search over more than 8 states");
    }
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    PermutationMatch best{perm, std::numeric_limits<double>::infinity()};
    do {
        const double c = cost(perm);
        if (c < best.max_deviation) best = PermutationMatch{perm, c};
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

PermutationMatch best_permutation_match(const MatrixXd& a, const MatrixXd& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ContractViolation("best_permutation_match: shape mismatch");
    }
    return best_permutation(static_cast<int>(a.rows()), [&](const std::vector<int>& perm) {
        double dev = 0.0;
        for (Eigen::Index i = 0; i < b.rows(); ++i) {
            dev = std::max(dev, (a.row(perm[i]) - b.row(i)).cwiseAbs().maxCoeff());
        }
        return dev;
    });
}

PermutationMatch best_transition_match(const TransitionTensor& a, const TransitionTensor& b) {
    if (a.size() != b.size() || a.empty()) throw ContractViolation("best_transition_match: shape mismatch");
    const int n = static_cast<int>(b.front().rows());
    return best_permutation(n, [&](const std::vector<int>& perm) {
        double dev = 0.0;
        for (std::size_t act = 0; act < b.size(); ++act) {
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) {
                    dev = std::max(dev, std::abs(a[act](perm[i], perm[j]) - b[act](i, j)));
                }
            }
        }
        return dev;
    });
}

MatrixXd permute_rows(const MatrixXd& a, const std::vector<int>& permutation) {
    MatrixXd out(a.rows(), a.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) out.row(i) = a.row(permutation[i]);
    return out;
}

}  // namespace hmmq
