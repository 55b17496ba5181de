#pragma once

#include <vector>

#include <Eigen/Dense>

#include "hmmq/pomdp_env.hpp"
#include "hmmq/random.hpp"

namespace hmmq {

/// Box constraint set for the estimator parameters.
struct ThetaBounds {
    double logit_lo = -10.0;
    double logit_hi = 10.0;
    double sigma_floor = 0.1;
    double sigma_ceil = 100.0;
    double r_lo = -1e3;
    double r_hi = 1e3;
};

/// Ranges for the random starting point.
struct ThetaInit {
    double logit_halfwidth = 0.5;
    double r_halfwidth = 1.0;
    double sigma = 2.0;
};

/// Flat index map of the parameter vector:
/// [p_logits (I*I, row-major) | o_logits (I*J, row-major) | r_values (K*I, row-major) | sigma].
struct ParamLayout {
    int num_states = 0;
    int num_actions = 0;
    int num_obs = 0;

    int size() const { return num_states * num_states + num_states * num_obs + num_actions * num_states + 1; }
    int p_logit(int i, int j) const { return i * num_states + j; }
    int o_logit(int i, int o) const { return num_states * num_states + i * num_obs + o; }
    int r_value(int a, int i) const {
        return num_states * num_states + num_states * num_obs + a * num_states + i;
    }
    int sigma() const { return size() - 1; }
};

/// Estimator parameters. P and O are realized by row-wise softmax over logits;
/// rewards and the noise scale are carried directly.
struct ThetaParams {
    MatrixXd p_logits;  // I x I
    MatrixXd o_logits;  // I x J
    MatrixXd r_values;  // K x I
    double sigma_param = 1.0;

    int num_states() const { return static_cast<int>(p_logits.rows()); }
    int num_obs() const { return static_cast<int>(o_logits.cols()); }
    int num_actions() const { return static_cast<int>(r_values.rows()); }
    ParamLayout layout() const { return {num_states(), num_actions(), num_obs()}; }

    VectorXd flatten() const;
    static ThetaParams unflatten(const ParamLayout& layout, const VectorXd& flat);

    static ThetaParams zeros(int num_states, int num_actions, int num_obs);
    static ThetaParams random_init(int num_states, int num_actions, int num_obs,
                                   const ThetaInit& init, RandomStream& rng);

    bool operator==(const ThetaParams& other) const;
};

struct RealizedModel {
    MatrixXd transition;  // P_theta, I x I
    MatrixXd obs;         // O_theta, I x J
    MatrixXd reward;      // R_theta, K x I
    double sigma = 1.0;
};

/// Row-wise softmax, max-shifted.
MatrixXd row_softmax(const MatrixXd& logits);

RealizedModel realize(const ThetaParams& theta);

/// Clamp every coordinate into the box. Idempotent and non-expansive.
ThetaParams project(const ThetaParams& theta, const ThetaBounds& bounds);

bool in_bounds(const ThetaParams& theta, const ThetaBounds& bounds);

/// Log of the per-state extended-observation likelihood
/// b_i = O_theta(i, o) * mu(o, a) * N(r; R_theta(a, i), sigma^2).
VectorXd log_emission(const ExtendedObs& y, const RealizedModel& model, const BehaviorPolicy& policy);

VectorXd emission(const ExtendedObs& y, const ThetaParams& theta, const BehaviorPolicy& policy);

/// Derivatives of log b_i with respect to every parameter, L x I.
/// Multiply column i by b_i for the derivative of b_i itself.
MatrixXd log_emission_grad(const ExtendedObs& y, const RealizedModel& model);

/// d b_i / d theta^(l), L x I.
MatrixXd emission_grad(const ExtendedObs& y, const ThetaParams& theta, const BehaviorPolicy& policy);

/// d P_theta / d theta^(l) for every l; entry l is an I x I matrix (zero for non-P parameters).
std::vector<MatrixXd> transition_grad(const ThetaParams& theta);

/// epsilon_n = scale * n^(-exponent).
struct StepSchedule {
    double exponent = 0.4;
    double scale = 1.0;

    double at(long long n) const;
};

}  // namespace hmmq
