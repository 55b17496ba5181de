#include <gtest/gtest.h>

#include <cmath>

#include "hmmq/hmm_filter.hpp"
#include "oracles.hpp"

using namespace hmmq;

namespace {

struct Instance {
    PomdpModel model;
    BehaviorPolicy policy;
    ThetaParams theta;
    std::vector<ExtendedObs> ys;
};

Instance make_instance(std::uint64_t seed, int states, int actions, int obs, int length) {
    RandomStream rng = RandomStream::derive(seed, "filter-tests");
    Instance in;
    in.model = oracle::random_model(states, actions, obs, rng);
    in.policy = oracle::random_policy(obs, actions, rng);
    in.theta = ThetaParams::random_init(states, actions, obs, ThetaInit{1.0, 3.0, 1.5}, rng);
    in.ys = oracle::trajectory(in.model, in.policy, length, rng);
    return in;
}

double rel(double a, double b, double floor) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor}); }

}  // namespace

TEST(PredictBelief, ConstantEmissionPropagatesThroughTransition) {
    // One observation symbol, one action, equal rewards: b is the same for every state.
    ThetaParams t = ThetaParams::zeros(3, 1, 1);
    RandomStream rng(1);
    t.p_logits = MatrixXd::NullaryExpr(3, 3, [&]() { return rng.uniform(-2.0, 2.0); });
    t.sigma_param = 1.0;
    const BehaviorPolicy mu{MatrixXd::Ones(1, 1)};
    FilterState s = FilterState::initial(3, t.layout().size());
    s.belief << 0.5, 0.3, 0.2;
    const VectorXd u = predict_belief(ExtendedObs{0, 0, 0.4}, s, t, mu);
    const VectorXd expected = realize(t).transition.transpose() * s.belief;
    EXPECT_LT((u - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(PredictBelief, NearIdentityTransitionConcentratesOnDominantState) {
    ThetaParams t = ThetaParams::zeros(3, 1, 1);
    t.p_logits = MatrixXd::Constant(3, 3, -10.0);
    t.p_logits.diagonal().setConstant(10.0);
    t.r_values << -10.0, 0.0, 10.0;
    t.sigma_param = 0.5;
    const BehaviorPolicy mu{MatrixXd::Ones(1, 1)};
    const VectorXd u = predict_belief(ExtendedObs{0, 0, 10.0}, FilterState::initial(3, t.layout().size()), t, mu);
    EXPECT_GT(u(2), 0.999);
}

TEST(PredictBelief, MatchesPathSumForwardOnThreeStates) {
    const Instance in = make_instance(3, 3, 2, 2, 10);
    std::vector<VectorXd> b;
    for (const auto& y : in.ys) b.push_back(oracle::emission(in.theta, in.policy, y));
    const auto expected = oracle::path_sum_predictions(oracle::softmax_rows(in.theta.p_logits), b);
    FilterState s = FilterState::initial(3, in.theta.layout().size());
    for (int n = 0; n < 10; ++n) {
        s.belief = predict_belief(in.ys[n], s, in.theta, in.policy);
        EXPECT_LT((s.belief - expected[n]).cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST(PredictBelief, SurvivesUnderflowingLikelihoods) {
    // Rewards far from every mean make every b_i underflow to zero in linear space.
    ThetaParams t = ThetaParams::zeros(2, 1, 1);
    t.r_values << 0.0, 1.0;
    t.sigma_param = 0.1;
    const BehaviorPolicy mu{MatrixXd::Ones(1, 1)};
    const ExtendedObs y{0, 0, 500.0};
    ASSERT_EQ(oracle::emission(t, mu, y).maxCoeff(), 0.0);
    const FilterStep st = filter_step(y, FilterState::initial(2, t.layout().size()), t, mu);
    EXPECT_TRUE(st.next.belief.allFinite());
    EXPECT_NEAR(st.next.belief.sum(), 1.0, 1e-12);
    EXPECT_TRUE(std::isfinite(st.log_likelihood));
    EXPECT_NEAR(st.posterior(1), 1.0, 1e-12);
}

TEST(StepLogLikelihood, SingleStateAndConstantEmission) {
    ThetaParams t = ThetaParams::zeros(1, 1, 2);
    t.o_logits << 0.3, -0.2;
    t.r_values << 1.5;
    t.sigma_param = 0.8;
    const BehaviorPolicy mu{MatrixXd::Ones(2, 1)};
    const ExtendedObs y{1, 0, 0.9};
    EXPECT_NEAR(step_log_likelihood(y, FilterState::initial(1, t.layout().size()), t, mu),
                std::log(oracle::emission(t, mu, y)(0)), 1e-14);

    ThetaParams c = ThetaParams::zeros(3, 1, 1);
    c.sigma_param = 1.0;
    const BehaviorPolicy one{MatrixXd::Ones(1, 1)};
    FilterState s = FilterState::initial(3, c.layout().size());
    s.belief << 0.1, 0.6, 0.3;
    EXPECT_NEAR(step_log_likelihood(ExtendedObs{0, 0, 0.2}, s, c, one), std::log(oracle::gaussian_pdf(0.2, 0.0, 1.0)),
                1e-14);
}

TEST(StepLogLikelihood, MatchesPathSumPredictiveDensity) {
    const Instance in = make_instance(4, 3, 2, 3, 8);
    FilterState s = FilterState::initial(3, in.theta.layout().size());
    std::vector<VectorXd> b;
    for (const auto& y : in.ys) b.push_back(oracle::emission(in.theta, in.policy, y));
    const auto preds = oracle::path_sum_predictions(oracle::softmax_rows(in.theta.p_logits), b);
    for (int n = 0; n < 8; ++n) {
        const VectorXd u = n == 0 ? VectorXd::Constant(3, 1.0 / 3.0) : preds[n - 1];
        EXPECT_NEAR(step_log_likelihood(in.ys[n], s, in.theta, in.policy), std::log(b[n].dot(u)), 1e-10);
        s = filter_step(in.ys[n], s, in.theta, in.policy).next;
    }
}

TEST(UpdateJacobian, UnrelatedParameterColumnStaysZero) {
    const Instance in = make_instance(5, 3, 2, 2, 1);
    const ParamLayout lay = in.theta.layout();
    const ExtendedObs y{in.ys[0].obs, 0, in.ys[0].reward};
    const MatrixXd w = update_jacobian(y, FilterState::initial(3, lay.size()), in.theta, in.policy);
    for (int i = 0; i < 3; ++i) EXPECT_EQ(w.col(lay.r_value(1, i)).cwiseAbs().maxCoeff(), 0.0);
}

TEST(UpdateJacobian, MatchesReferenceRecursion) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Instance in = make_instance(100 + seed, 3, 2, 2, 20);
        FilterState s = FilterState::initial(3, in.theta.layout().size());
        for (const auto& y : in.ys) {
            const oracle::ReferenceStep ref = oracle::reference_step(in.theta, in.policy, y, s.belief, s.jacobian);
            const FilterStep got = filter_step(y, s, in.theta, in.policy);
            ASSERT_LT((got.next.belief - ref.belief).cwiseAbs().maxCoeff(), 1e-12);
            ASSERT_LT((got.next.jacobian - ref.jacobian).cwiseAbs().maxCoeff(), 1e-10);
            ASSERT_LT((got.score - ref.score).cwiseAbs().maxCoeff(), 1e-10);
            ASSERT_LT((got.posterior - ref.posterior).cwiseAbs().maxCoeff(), 1e-12);
            ASSERT_NEAR(got.log_likelihood, ref.log_likelihood, 1e-12);
            s = got.next;
        }
    }
}

TEST(UpdateJacobian, InhomogeneousTermMatchesFiniteDifferenceOfOneStep) {
    const Instance in = make_instance(6, 3, 2, 3, 5);
    FilterState s = FilterState::initial(3, in.theta.layout().size());
    s.belief << 0.2, 0.5, 0.3;
    const ExtendedObs y = in.ys[4];
    const MatrixXd w = update_jacobian(y, s, in.theta, in.policy);  // omega = 0, so this is df/dtheta
    for (int j = 0; j < 3; ++j) {
        const VectorXd fd = oracle::central_difference(
            in.theta,
            [&](const ThetaParams& t) {
                FilterState fs = s;
                return predict_belief(y, fs, t, in.policy)(j);
            },
            1e-6);
        for (Eigen::Index l = 0; l < fd.size(); ++l) EXPECT_LT(rel(w(j, l), fd(l), 1e-6), 1e-5) << j << "," << l;
    }
}

TEST(UpdateJacobian, FiftyStepsMatchPerturbAndRerun) {
    const Instance in = make_instance(7, 3, 2, 2, 50);
    const int len = in.theta.layout().size();
    FilterState s = FilterState::initial(3, len);
    for (const auto& y : in.ys) s = filter_step(y, s, in.theta, in.policy).next;
    auto final_belief = [&](const ThetaParams& t, int j) {
        VectorXd u = VectorXd::Constant(3, 1.0 / 3.0);
        const MatrixXd p = oracle::softmax_rows(t.p_logits);
        for (const auto& y : in.ys) {
            const VectorXd b = oracle::emission(t, in.policy, y);
            u = p.transpose() * b.cwiseProduct(u) / b.dot(u);
        }
        return u(j);
    };
    for (int j = 0; j < 3; ++j) {
        const VectorXd fd =
            oracle::central_difference(in.theta, [&](const ThetaParams& t) { return final_belief(t, j); }, 1e-6);
        for (Eigen::Index l = 0; l < len; ++l) EXPECT_LT(rel(s.jacobian(j, l), fd(l), 1e-5), 1e-4) << j << "," << l;
    }
}

TEST(Score, ZeroWhenNothingDependsOnParameter) {
    const Instance in = make_instance(8, 3, 2, 2, 1);
    const ParamLayout lay = in.theta.layout();
    const ExtendedObs y{in.ys[0].obs, 1, in.ys[0].reward};
    const VectorXd sc = score(y, FilterState::initial(3, lay.size()), in.theta, in.policy);
    for (int i = 0; i < 3; ++i) EXPECT_EQ(sc(lay.r_value(0, i)), 0.0);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) EXPECT_EQ(sc(lay.p_logit(i, j)), 0.0);
}

TEST(Score, SingleStateEqualsLogEmissionGradient) {
    RandomStream rng(9);
    const ThetaParams t = ThetaParams::random_init(1, 2, 3, ThetaInit{1.0, 2.0, 1.2}, rng);
    const BehaviorPolicy mu{oracle::random_stochastic(3, 2, rng)};
    const ExtendedObs y{2, 1, 0.3};
    const VectorXd sc = score(y, FilterState::initial(1, t.layout().size()), t, mu);
    const MatrixXd g = emission_grad(y, t, mu);
    const double b = emission(y, t, mu)(0);
    EXPECT_LT((sc - g.col(0) / b).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Score, ThirtyStepSumMatchesFiniteDifferenceOverSeeds) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Instance in = make_instance(200 + seed, 3, 2, 2, 30);
        FilterState s = FilterState::initial(3, in.theta.layout().size());
        VectorXd total = VectorXd::Zero(in.theta.layout().size());
        for (const auto& y : in.ys) {
            total += score(y, s, in.theta, in.policy);
            s = filter_step(y, s, in.theta, in.policy).next;
        }
        const VectorXd fd = oracle::central_difference(
            in.theta, [&](const ThetaParams& t) { return oracle::total_log_likelihood(t, in.policy, in.ys); }, 1e-5);
        for (Eigen::Index l = 0; l < fd.size(); ++l) EXPECT_LT(rel(total(l), fd(l), 1e-3), 1e-4) << seed << "," << l;
    }
}

TEST(FilterInvariants, SimplexAndZeroColumnSums) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        RandomStream rng = RandomStream::derive(seed, "filter-invariants");
        const int states = 2 + rng.uniform_index(3);
        const Instance in = make_instance(300 + seed, states, 2, 2, 100);
        FilterState s = FilterState::initial(states, in.theta.layout().size());
        for (const auto& y : in.ys) {
            s = filter_step(y, s, in.theta, in.policy).next;
            ASSERT_NEAR(s.belief.sum(), 1.0, 1e-10);
            ASSERT_GE(s.belief.minCoeff(), 0.0);
            ASSERT_LT(s.jacobian.colwise().sum().cwiseAbs().maxCoeff(), 1e-8);
        }
    }
}
