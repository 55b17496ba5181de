#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "hmmq/theta.hpp"
#include "oracles.hpp"

using namespace hmmq;

namespace {

ThetaParams random_theta(RandomStream& rng, int states = 3, int actions = 2, int obs = 3) {
    return ThetaParams::random_init(states, actions, obs, ThetaInit{1.5, 4.0, 1.3}, rng);
}

ExtendedObs random_y(RandomStream& rng, int actions = 2, int obs = 3) {
    return {rng.uniform_index(obs), rng.uniform_index(actions), rng.uniform(-5.0, 5.0)};
}

}  // namespace

TEST(Layout, OffsetsCoverFlatVector) {
    const ParamLayout lay{4, 2, 2};
    EXPECT_EQ(lay.size(), 16 + 8 + 8 + 1);
    EXPECT_EQ(lay.p_logit(3, 3), 15);
    EXPECT_EQ(lay.o_logit(0, 0), 16);
    EXPECT_EQ(lay.r_value(0, 0), 24);
    EXPECT_EQ(lay.r_value(1, 3), 31);
    EXPECT_EQ(lay.sigma(), 32);
}

TEST(Theta, FlattenRoundTrip) {
    RandomStream rng(4);
    const ThetaParams t = random_theta(rng);
    EXPECT_TRUE(ThetaParams::unflatten(t.layout(), t.flatten()) == t);
}

TEST(Realize, ZeroLogitsGiveUniformRows) {
    const RealizedModel m = realize(ThetaParams::zeros(4, 2, 2));
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) EXPECT_DOUBLE_EQ(m.transition(i, j), 0.25);
}

TEST(Realize, ClosedFormTwoColumnRow) {
    ThetaParams t = ThetaParams::zeros(2, 1, 2);
    t.p_logits(0, 0) = std::log(2.0);
    const RealizedModel m = realize(t);
    EXPECT_NEAR(m.transition(0, 0), 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(m.transition(0, 1), 1.0 / 3.0, 1e-15);
}

TEST(Realize, RandomLogitsGiveStrictlyPositiveStochasticRows) {
    RandomStream rng(8);
    ThetaBounds bounds;
    for (int trial = 0; trial < 100; ++trial) {
        ThetaParams t = random_theta(rng);
        t.p_logits *= 20.0;  // push past the box, then project
        t = project(t, bounds);
        const RealizedModel m = realize(t);
        for (int i = 0; i < 3; ++i) {
            EXPECT_NEAR(m.transition.row(i).sum(), 1.0, 1e-12);
            EXPECT_NEAR(m.obs.row(i).sum(), 1.0, 1e-12);
        }
        EXPECT_GT(m.transition.minCoeff(), 0.0);
        EXPECT_GT(m.obs.minCoeff(), 0.0);
    }
}

TEST(Project, Examples) {
    const ThetaBounds bounds;
    RandomStream rng(1);
    const ThetaParams inside = random_theta(rng);
    EXPECT_TRUE(project(inside, bounds) == inside);

    ThetaParams t = inside;
    t.p_logits(0, 1) = 15.0;
    t.sigma_param = 0.01;
    t.r_values(1, 2) = -5000.0;
    const ThetaParams p = project(t, bounds);
    EXPECT_EQ(p.p_logits(0, 1), 10.0);
    EXPECT_EQ(p.sigma_param, 0.1);
    EXPECT_EQ(p.r_values(1, 2), -1000.0);
    EXPECT_TRUE(in_bounds(p, bounds));
    EXPECT_FALSE(in_bounds(t, bounds));
}

TEST(Project, IdempotentAndNonExpansive) {
    RandomStream rng(21);
    ThetaBounds bounds;
    bounds.logit_lo = -1.0;
    bounds.logit_hi = 1.0;
    bounds.sigma_floor = 0.5;
    bounds.sigma_ceil = 1.0;
    bounds.r_lo = -2.0;
    bounds.r_hi = 2.0;
    for (int trial = 0; trial < 100; ++trial) {
        ThetaParams a = random_theta(rng), b = random_theta(rng);
        a.sigma_param = rng.uniform(0.0, 3.0);
        b.sigma_param = rng.uniform(0.0, 3.0);
        const ThetaParams pa = project(a, bounds), pb = project(b, bounds);
        EXPECT_TRUE(project(pa, bounds) == pa);
        EXPECT_LE((pa.flatten() - pb.flatten()).norm(), (a.flatten() - b.flatten()).norm() + 1e-12);
    }
}

TEST(Emission, ModeValue) {
    RandomStream rng(2);
    const ThetaParams t = random_theta(rng);
    const BehaviorPolicy mu{oracle::random_stochastic(3, 2, rng)};
    const RealizedModel m = realize(t);
    const ExtendedObs y{1, 0, t.r_values(0, 2)};
    const VectorXd b = emission(y, t, mu);
    EXPECT_NEAR(b(2), m.obs(2, 1) * mu.mu(1, 0) / std::sqrt(2.0 * std::numbers::pi * t.sigma_param * t.sigma_param),
                1e-15);
}

TEST(Emission, UniformObsAndPolicyLeaveGaussianShape) {
    RandomStream rng(3);
    ThetaParams t = random_theta(rng);
    t.o_logits.setZero();
    const BehaviorPolicy mu{Eigen::MatrixXd::Constant(3, 2, 0.5)};
    const ExtendedObs y{2, 1, 0.7};
    const VectorXd b = emission(y, t, mu);
    VectorXd g(3);
    for (int i = 0; i < 3; ++i) g(i) = oracle::gaussian_pdf(0.7, t.r_values(1, i), t.sigma_param);
    EXPECT_LT((b / b.sum() - g / g.sum()).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Emission, TrueModelFirstStateValue) {
    // Logits equal to log-probabilities realize the given matrices exactly.
    const PomdpModel m = paper_s4_model();
    ThetaParams t = ThetaParams::zeros(4, 2, 2);
    t.o_logits = m.obs.array().log().matrix();
    t.r_values = m.reward_mean;
    t.sigma_param = 1.0;
    const VectorXd b = emission(ExtendedObs{0, 0, 0.0}, t, paper_s4_policy());
    const double scalar = 0.95 * 0.6 * (1.0 / std::sqrt(2.0 * 3.14159265358979323846));
    EXPECT_NEAR(b(0), scalar, 1e-15);
    EXPECT_NEAR(b(0), 0.2273971, 1e-7);
}

TEST(EmissionGrad, MatchesCentralDifferences) {
    RandomStream rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        const ThetaParams t = random_theta(rng);
        const BehaviorPolicy mu{oracle::random_stochastic(3, 2, rng)};
        const ExtendedObs y = random_y(rng);
        const MatrixXd g = emission_grad(y, t, mu);
        ASSERT_EQ(g.rows(), t.layout().size());
        for (int i = 0; i < 3; ++i) {
            const VectorXd fd = oracle::central_difference(
                t, [&](const ThetaParams& x) { return oracle::emission(x, mu, y)(i); }, 1e-6);
            for (Eigen::Index l = 0; l < fd.size(); ++l) {
                const double scale = std::max({std::abs(fd(l)), std::abs(g(l, i)), 1e-6});
                EXPECT_LT(std::abs(fd(l) - g(l, i)) / scale, 1e-5) << "trial " << trial << " l " << l << " i " << i;
            }
        }
    }
}

TEST(EmissionGrad, StructuralZeros) {
    RandomStream rng(6);
    const ThetaParams t = random_theta(rng);
    const BehaviorPolicy mu{oracle::random_stochastic(3, 2, rng)};
    const ParamLayout lay = t.layout();
    const ExtendedObs y{0, 1, t.r_values(1, 1)};
    const MatrixXd g = emission_grad(y, t, mu);
    EXPECT_EQ(g(lay.r_value(1, 1), 1), 0.0);
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) EXPECT_EQ(g(lay.p_logit(i, j), 0), 0.0);
        double row = 0.0;
        for (int o = 0; o < 3; ++o) row += g(lay.o_logit(i, o), i);
        EXPECT_NEAR(row, 0.0, 1e-15);
        EXPECT_EQ(g(lay.r_value(0, i), i), 0.0);  // other action
    }
}

TEST(TransitionGrad, MatchesCentralDifferences) {
    RandomStream rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        const ThetaParams t = random_theta(rng);
        const std::vector<MatrixXd> g = transition_grad(t);
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                const VectorXd fd = oracle::central_difference(
                    t, [&](const ThetaParams& x) { return oracle::softmax_rows(x.p_logits)(i, j); }, 1e-6);
                for (Eigen::Index l = 0; l < fd.size(); ++l) {
                    const double scale = std::max({std::abs(fd(l)), std::abs(g[l](i, j)), 1e-6});
                    EXPECT_LT(std::abs(fd(l) - g[l](i, j)) / scale, 1e-5);
                }
            }
        }
    }
}

TEST(TransitionGrad, SymmetricPointAndRowSums) {
    const std::vector<MatrixXd> g = transition_grad(ThetaParams::zeros(2, 1, 1));
    const ParamLayout lay{2, 1, 1};
    EXPECT_DOUBLE_EQ(g[lay.p_logit(0, 1)](0, 1), 0.25);
    RandomStream rng(8);
    const std::vector<MatrixXd> h = transition_grad(random_theta(rng));
    for (const MatrixXd& d : h) {
        for (Eigen::Index i = 0; i < d.rows(); ++i) EXPECT_NEAR(d.row(i).sum(), 0.0, 1e-12);
    }
    for (std::size_t l = static_cast<std::size_t>(ParamLayout{3, 2, 3}.o_logit(0, 0)); l < h.size(); ++l)
        EXPECT_EQ(h[l].cwiseAbs().maxCoeff(), 0.0);
}

TEST(StepSchedule, Values) {
    const StepSchedule s{0.4, 1.0};
    EXPECT_DOUBLE_EQ(s.at(1), 1.0);
    EXPECT_DOUBLE_EQ(s.at(32), 0.25);
    EXPECT_NEAR(s.at(10), 0.398107170553497, 1e-15);
    EXPECT_GT(s.at(100), s.at(101));
    EXPECT_THROW(s.at(0), ContractViolation);
}
