#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "hmmq/pomdp_env.hpp"

namespace hmmq {

/// Watkins update of entry (s, a); every other entry is unchanged.
MatrixXd q_learning_step(const MatrixXd& q, int state, int action, double reward, int next_state,
                         double epsilon, double gamma);

/// The same update on an observation-indexed table (J x K).
MatrixXd partial_q_learning_step(const MatrixXd& q, int obs, int action, double reward, int next_obs,
                                 double epsilon, double gamma);

/// Sweeps Q <- r + gamma T max Q until the sup-norm change is below tol. Returns I x K.
MatrixXd value_iteration(const PomdpModel& model, double tol = 1e-9);

/// Greedy action for each row of a table; ties go to the lowest index.
int greedy_in_row(const MatrixXd& q, int row);

struct PermutationMatch {
    /// permutation[i] is the row of A aligned with row i of B.
    std::vector<int> permutation;
    double max_deviation = 0.0;
};

constexpr int kMaxPermutedStates = 8;

/// Exhaustive search over relabelings of n states for the one minimizing
/// cost(permutation); ties keep the lexicographically smallest permutation.
PermutationMatch best_permutation(int n, const std::function<double(const std::vector<int>&)>& cost);

/// Row relabeling of A that best matches B in max-abs deviation.
PermutationMatch best_permutation_match(const MatrixXd& a, const MatrixXd& b);

/// Relabeling applied to both state indices of every transition slice.
PermutationMatch best_transition_match(const TransitionTensor& a, const TransitionTensor& b);

/// Rows of A reordered so that row i is A.row(permutation[i]).
MatrixXd permute_rows(const MatrixXd& a, const std::vector<int>& permutation);

}  // namespace hmmq
