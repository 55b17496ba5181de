#include "hmmq/theta.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace hmmq {

VectorXd ThetaParams::flatten() const {
    const ParamLayout lay = layout();
    VectorXd flat(lay.size());
    for (int i = 0; i < lay.num_states; ++i) {
        for (int j = 0; j < lay.num_states; ++j) flat[lay.p_logit(i, j)] = p_logits(i, j);
        for (int o = 0; o < lay.num_obs; ++o) flat[lay.o_logit(i, o)] = o_logits(i, o);
    }
    for (int a = 0; a < lay.num_actions; ++a) {
        for (int i = 0; i < lay.num_states; ++i) flat[lay.r_value(a, i)] = r_values(a, i);
    }
    flat[lay.sigma()] = sigma_param;
    return flat;
}

ThetaParams ThetaParams::unflatten(const ParamLayout& lay, const VectorXd& flat) {
    if (flat.size() != lay.size()) throw ContractViolation("unflatten: length mismatch");
    ThetaParams t = zeros(lay.num_states, lay.num_actions, lay.num_obs);
    for (int i = 0; i < lay.num_states; ++i) {
        for (int j = 0; j < lay.num_states; ++j) t.p_logits(i, j) = flat[lay.p_logit(i, j)];
        for (int o = 0; o < lay.num_obs; ++o) t.o_logits(i, o) = flat[lay.o_logit(i, o)];
    }
    for (int a = 0; a < lay.num_actions; ++a) {
        for (int i = 0; i < lay.num_states; ++i) t.r_values(a, i) = flat[lay.r_value(a, i)];
    }
    t.sigma_param = flat[lay.sigma()];
    return t;
}

ThetaParams ThetaParams::zeros(int num_states, int num_actions, int num_obs) {
    ThetaParams t;
    t.p_logits = MatrixXd::Zero(num_states, num_states);
    t.o_logits = MatrixXd::Zero(num_states, num_obs);
    t.r_values = MatrixXd::Zero(num_actions, num_states);
    t.sigma_param = 1.0;
    return t;
}

ThetaParams ThetaParams::random_init(int num_states, int num_actions, int num_obs,
                                     const ThetaInit& init, RandomStream& rng) {
    ThetaParams t = zeros(num_states, num_actions, num_obs);
    auto fill = [&rng](MatrixXd& m, double half) {
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rng.uniform(-half, half);
        }
    };
    fill(t.p_logits, init.logit_halfwidth);
    fill(t.o_logits, init.logit_halfwidth);
    fill(t.r_values, init.r_halfwidth);
    t.sigma_param = init.sigma;
    return t;
}

bool ThetaParams::operator==(const ThetaParams& other) const {
    return p_logits == other.p_logits && o_logits == other.o_logits &&
           r_values == other.r_values && sigma_param == other.sigma_param;
}

MatrixXd row_softmax(const MatrixXd& logits) {
    MatrixXd out(logits.rows(), logits.cols());
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        const double shift = logits.row(r).maxCoeff();
        out.row(r) = (logits.row(r).array() - shift).exp();
        out.row(r) /= out.row(r).sum();
    }
    return out;
}

RealizedModel realize(const ThetaParams& theta) {
    return RealizedModel{row_softmax(theta.p_logits), row_softmax(theta.o_logits), theta.r_values,
                         theta.sigma_param};
}

ThetaParams project(const ThetaParams& theta, const ThetaBounds& bounds) {
    ThetaParams out = theta;
    out.p_logits = theta.p_logits.cwiseMax(bounds.logit_lo).cwiseMin(bounds.logit_hi);
    out.o_logits = theta.o_logits.cwiseMax(bounds.logit_lo).cwiseMin(bounds.logit_hi);
    out.r_values = theta.r_values.cwiseMax(bounds.r_lo).cwiseMin(bounds.r_hi);
    out.sigma_param = std::clamp(theta.sigma_param, bounds.sigma_floor, bounds.sigma_ceil);
    return out;
}

bool in_bounds(const ThetaParams& theta, const ThetaBounds& bounds) {
    auto inside = [](const MatrixXd& m, double lo, double hi) {
        return m.allFinite() && (m.array() >= lo).all() && (m.array() <= hi).all();
    };
    return inside(theta.p_logits, bounds.logit_lo, bounds.logit_hi) &&
           inside(theta.o_logits, bounds.logit_lo, bounds.logit_hi) &&
           inside(theta.r_values, bounds.r_lo, bounds.r_hi) &&
           theta.sigma_param >= bounds.sigma_floor && theta.sigma_param <= bounds.sigma_ceil;
}

VectorXd log_emission(const ExtendedObs& y, const RealizedModel& model, const BehaviorPolicy& policy) {
    const int n = static_cast<int>(model.transition.rows());
    const double var = model.sigma * model.sigma;
    const double log_norm = -0.5 * std::log(2.0 * std::numbers::pi * var);
    const double log_mu = std::log(policy.mu(y.obs, y.action));
    VectorXd out(n);
    for (int i = 0; i < n; ++i) {
        const double dev = y.reward - model.reward(y.action, i);
        out[i] = std::log(model.obs(i, y.obs)) + log_mu + log_norm - 0.5 * dev * dev / var;
    }
    return out;
}

VectorXd emission(const ExtendedObs& y, const ThetaParams& theta, const BehaviorPolicy& policy) {
    return log_emission(y, realize(theta), policy).array().exp();
}

MatrixXd log_emission_grad(const ExtendedObs& y, const RealizedModel& model) {
    const int n = static_cast<int>(model.transition.rows());
    const int num_obs = static_cast<int>(model.obs.cols());
    const ParamLayout lay{n, static_cast<int>(model.reward.rows()), num_obs};
    const double sigma = model.sigma;
    MatrixXd grad = MatrixXd::Zero(lay.size(), n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < num_obs; ++j) {
            grad(lay.o_logit(i, j), i) = (j == y.obs ? 1.0 : 0.0) - model.obs(i, j);
        }
        const double dev = y.reward - model.reward(y.action, i);
        grad(lay.r_value(y.action, i), i) = dev / (sigma * sigma);
        grad(lay.sigma(), i) = dev * dev / (sigma * sigma * sigma) - 1.0 / sigma;
    }
    return grad;
}

MatrixXd emission_grad(const ExtendedObs& y, const ThetaParams& theta, const BehaviorPolicy& policy) {
    const RealizedModel model = realize(theta);
    const VectorXd b = log_emission(y, model, policy).array().exp();
    return log_emission_grad(y, model) * b.asDiagonal();
}

std::vector<MatrixXd> transition_grad(const ThetaParams& theta) {
    const int n = theta.num_states();
    const ParamLayout lay = theta.layout();
    const MatrixXd p = row_softmax(theta.p_logits);
    std::vector<MatrixXd> grad(lay.size(), MatrixXd::Zero(n, n));
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < n; ++k) {
            MatrixXd& d = grad[lay.p_logit(i, k)];
            for (int j = 0; j < n; ++j) d(i, j) = p(i, j) * ((j == k ? 1.0 : 0.0) - p(i, k));
        }
    }
    return grad;
}

double StepSchedule::at(long long n) const {
    if (n < 1) throw ContractViolation("step size is defined for n >= 1");
    return scale * std::pow(static_cast<double>(n), -exponent);
}

}  // namespace hmmq
