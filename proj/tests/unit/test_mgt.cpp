#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "mgthmm/mgt.hpp"
#include "oracles.hpp"

using namespace mgthmm;

namespace {

Vec v2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

MgtConfig base_config(int k, int L, int P, int m, double dt, double T) {
    MgtConfig c;
    c.k = k;
    c.L = L;
    c.P = P;
    c.m = m;
    c.dt = dt;
    c.dt_coupled = dt;
    c.T = T;
    c.inverter = InverterSpec::exact();
    c.eta = 1e-5;
    return c;
}

double sup_distance(const RunRecord& a, const RunRecord& b) {
    EXPECT_EQ(a.states.size(), b.states.size());
    double d = 0.0;
    for (std::size_t i = 0; i < std::min(a.states.size(), b.states.size()); ++i) {
        d = std::max(d, (a.states[i] - b.states[i]).lpNorm<Eigen::Infinity>());
    }
    return d;
}

bool bitwise_equal(const RunRecord& a, const RunRecord& b) {
    if (a.states.size() != b.states.size() || a.times != b.times) return false;
    for (std::size_t i = 0; i < a.states.size(); ++i) {
        if (a.states[i] != b.states[i]) return false;
    }
    return true;
}

// Observed order of the final state under two dt halvings.
double observed_order(const FastSlowSystem& s, InverterSpec inv, double eta, int k, double dt, double T) {
    std::vector<Vec> finals;
    for (int h = 0; h < 3; ++h) {
        ManifoldEvaluator ev(s, inv, eta, k);
        ev.set_warm_cache_enabled(false);
        finals.push_back(solve_hmm(s, k, s.x0, dt / (1 << h), 0.0, T, ev).final_state());
    }
    return std::log2((finals[0] - finals[1]).norm() / (finals[1] - finals[2]).norm());
}

}  // namespace

TEST(Rk4, ZeroField) {
    const Vec x = v2(0.3, -2.0);
    EXPECT_EQ(rk4_step([](double, const Vec& v) -> Vec { return Vec::Zero(v.size()); }, 0.0, x, 0.1), x);
}

TEST(Rk4, ExponentialSeries) {
    const Vec out = rk4_step([](double, const Vec& v) -> Vec { return v; }, 0.0, Vec::Ones(1), 0.1);
    double want = 0.0, term = 1.0;
    for (int j = 0; j <= 4; ++j) {
        want += term;
        term *= 0.1 / (j + 1);
    }
    EXPECT_NEAR(out(0), want, 1e-15);
    EXPECT_NEAR(out(0), 1.1051708333, 1e-10);
}

TEST(Rk4, StageTimes) {
    // x' = t integrates exactly
    const Vec out = rk4_step([](double t, const Vec&) -> Vec { return Vec::Constant(1, 3.0 * t * t); }, 1.0,
                             Vec::Zero(1), 0.5);
    EXPECT_NEAR(out(0), 1.5 * 1.5 * 1.5 - 1.0, 1e-14);
}

TEST(Rk4, RotationLocalOrder) {
    const oracle::Mat J = oracle::rot_j();
    const Vec x = v2(1.0, 0.0);
    auto field = [&](double, const Vec& v) -> Vec { return J * v; };
    std::vector<double> err;
    for (double dt : {0.2, 0.1, 0.05}) {
        const Vec exact = oracle::expm(J * dt) * x;
        err.push_back((rk4_step(field, 0.0, x, dt) - exact).norm());
    }
    EXPECT_GE(std::log2(err[0] / err[1]), 4.8);
    EXPECT_GE(std::log2(err[1] / err[2]), 4.8);
}

TEST(Rk4, Errors) {
    auto field = [](double, const Vec& v) -> Vec { return v; };
    EXPECT_THROW(rk4_step(field, 0.0, Vec::Ones(1), 0.0), ConfigError);
    EXPECT_THROW(rk4_step([](double, const Vec&) -> Vec { return Vec::Constant(1, NAN); }, 0.0, Vec::Ones(1), 0.1),
                 NumericalError);
}

TEST(Reference, DriftMatchesMatrixExponential) {
    const double e = 0.05;
    const auto s = make_problem(ProblemId::LinearDrift, e);
    const RunRecord ref = solve_reference(s, s.x0, s.y0, 1e-4, 25.0, 10000);
    oracle::Mat A = oracle::Mat::Zero(4, 4);
    A.topLeftCorner(2, 2).setIdentity();
    A.topRightCorner(2, 2).setIdentity();
    A.bottomLeftCorner(2, 2) = (oracle::rot_j() - oracle::Mat::Identity(2, 2)) / e;
    A.bottomRightCorner(2, 2) = -oracle::Mat::Identity(2, 2) / e;
    Vec z0(4);
    z0 << s.x0, s.y0;
    ASSERT_EQ(ref.times.size(), 26u);
    for (std::size_t i = 0; i < ref.times.size(); i += 5) {
        const Vec exact = oracle::expm(A * ref.times[i]) * z0;
        EXPECT_LE((ref.states[i] - exact.head(2)).norm(), 1e-6) << "t=" << ref.times[i];
    }
}

TEST(Reference, RestingStateStaysPut) {
    auto s = make_problem(ProblemId::LinearRotation, 0.05);
    s.f = [](const Vec& x, const Vec&) -> Vec { return Vec::Zero(x.size()); };
    const Vec x0 = v2(0.4, 0.2);
    const RunRecord ref = solve_reference(s, x0, s.analytic_gamma(x0), 1e-3, 1.0);
    for (const auto& x : ref.states) EXPECT_EQ(x, x0);
}

TEST(Reference, EnzymeMatchesAdaptiveOracle) {
    const double e = 0.01;
    const auto s = make_problem(ProblemId::Enzyme, e);
    const RunRecord ref = solve_reference(s, s.x0, s.y0, 1e-3, 20.0, 1000);
    auto full = [&](const oracle::Vec& z) -> oracle::Vec {
        oracle::Vec dz(2);
        dz << s.f(z.head(1), z.tail(1)), s.g(z.head(1), z.tail(1)) / e;
        return dz;
    };
    oracle::Vec z0(2);
    z0 << s.x0, s.y0;
    for (std::size_t i = 1; i < ref.times.size(); ++i) {
        EXPECT_LT(ref.states[i](0), ref.states[i - 1](0));
        EXPECT_TRUE(ref.states[i].allFinite());
    }
    const oracle::Vec want = oracle::dopri5(full, z0, 20.0, 1e-11, 1e-13);
    EXPECT_NEAR(ref.final_state()(0), want(0), 1e-8);
}

TEST(Reference, InstabilityIsReported) {
    const auto s = make_problem(ProblemId::LinearRotation, 0.01);
    EXPECT_THROW(solve_reference(s, s.x0, s.y0, 0.05, 10.0), NumericalError);
    EXPECT_THROW(solve_reference(s, Vec::Zero(3), s.y0, 1e-3, 1.0), DimensionError);
}

TEST(Layer, ExitsImmediatelyOnManifold) {
    const auto s = make_problem(ProblemId::Enzyme, 0.05);
    ManifoldEvaluator ev(s, InverterSpec::exact(), 5e-6, 1);
    MgtConfig cfg = base_config(0, 1, 2, 1, 1e-2, 1.0);
    cfg.dt_coupled = 1e-3;
    const Vec y0 = ev.gamma(1, s.x0);
    const LayerResult r = solve_initial_layer(s, s.x0, y0, cfg, ev);
    EXPECT_EQ(r.t_exit, 0.0);
    EXPECT_EQ(r.steps, 0);
    EXPECT_FALSE(r.warning);
}

TEST(Layer, RotationExitTimeFollowsDecay) {
    const double e = 0.05;
    const auto s = make_problem(ProblemId::LinearRotation, e);
    ManifoldEvaluator ev(s, InverterSpec::exact(), 1e-6, 1);
    MgtConfig cfg = base_config(1, 0, 2, 0, 1e-3, 1.0);
    cfg.dt_coupled = 1e-4;
    const Vec x0 = v2(1, 0), y0 = v2(0.9, 0.1);
    const double z0 = (y0 - ev.gamma(1, x0)).norm();
    const LayerResult r = solve_initial_layer(s, x0, y0, cfg, ev);
    const double predicted = e * std::log(z0 / r.threshold);
    EXPECT_NEAR(r.t_exit, predicted, 0.2 * predicted);
    EXPECT_LE(r.residual, r.threshold);
    EXPECT_FALSE(r.warning);
    EXPECT_EQ(r.steps, std::llround(r.t_exit / cfg.dt_coupled));
    EXPECT_GT(r.cost.g_evals, 0u);
}

TEST(Layer, SlowStateFrozenWithoutSlowField) {
    auto s = make_problem(ProblemId::LinearRotation, 0.05);
    s.f = [](const Vec& x, const Vec&) -> Vec { return Vec::Zero(x.size()); };
    ManifoldEvaluator ev(s, InverterSpec::exact(), 1e-6, 0);
    MgtConfig cfg = base_config(0, 0, 2, 0, 1e-3, 1.0);
    cfg.dt_coupled = 1e-4;
    const LayerResult r = solve_initial_layer(s, v2(1, 0), v2(0.5, 0.5), cfg, ev);
    EXPECT_GT(r.t_exit, 0.0);
    EXPECT_EQ(r.x, v2(1, 0));
}

TEST(Layer, DisabledReturnsStart) {
    const auto s = make_problem(ProblemId::LinearRotation, 0.05);
    ManifoldEvaluator ev(s, InverterSpec::exact(), 1e-6, 1);
    MgtConfig cfg = base_config(0, 1, 2, 1, 1e-3, 1.0);
    cfg.layer.enabled = false;
    const LayerResult r = solve_initial_layer(s, s.x0, s.y0, cfg, ev);
    EXPECT_EQ(r.t_exit, 0.0);
    EXPECT_EQ(r.x, s.x0);
}

TEST(Hmm, RotationFullTurn) {
    const auto s = make_problem(ProblemId::LinearRotation, 0.05);
    ManifoldEvaluator ev(s, InverterSpec::exact(), 1e-6, 0);
    const double T = 2.0 * std::numbers::pi;
    const RunRecord r = solve_hmm(s, 0, v2(1, 0), T / 600, 0.0, T, ev);
    EXPECT_LE((r.final_state() - v2(1, 0)).norm(), 1e-8);
    EXPECT_EQ(r.counters.micro_calls, 600u * 4u);
}

TEST(Hmm, DriftFirstOrderModel) {
    const double e = 0.05, T = 5.0;
    const auto s = make_problem(ProblemId::LinearDrift, e);
    ManifoldEvaluator ev(s, InverterSpec::exact(), 1e-5, 1);
    const RunRecord r = solve_hmm(s, 1, s.x0, 1e-2, 0.0, T, ev);
    const Vec exact_recursion = oracle::expm(oracle::drift_force_matrix(1, e) * T) * s.x0;
    EXPECT_LE((r.final_state() - exact_recursion).norm(), 1e-8);
    oracle::Mat printed = e * oracle::Mat::Identity(2, 2) + (1 + e) * oracle::rot_j();
    const Vec x_printed = oracle::expm(printed * T) * s.x0;
    EXPECT_LE((r.final_state() - x_printed).norm(), 2.0 * e * e * T);
}

TEST(Hmm, ObservedOrderUnderDtHalving) {
    struct Case {
        ProblemId id;
        double eps;
        InverterSpec inv;
        double eta;
        int k;
        double dt;
        double T;
    };
    const std::vector<Case> cases = {
        {ProblemId::CubicChua, 0.02, InverterSpec::relaxation(0.1, 10), 1e-4, 0, 0.08, 2.56},
        {ProblemId::LinearRotation, 0.05, InverterSpec::exact(), 1e-5, 1, 0.2, 3.2},
        {ProblemId::LinearDrift, 0.05, InverterSpec::exact(), 1e-5, 2, 0.2, 3.2},
        {ProblemId::Enzyme, 0.05, InverterSpec::exact(), 1e-5, 1, 0.2, 3.2},
        {ProblemId::Robertson, 0.05, InverterSpec::exact(), 1e-5, 1, 0.4, 6.4},
    };
    for (const auto& c : cases) {
        const auto s = make_problem(c.id, c.eps);
        EXPECT_GE(observed_order(s, c.inv, c.eta, c.k, c.dt, c.T), 3.8) << to_string(c.id);
    }
}

TEST(TwoGrid, ExactCorrectionMatchesHigherOrderHmm) {
    for (ProblemId id : {ProblemId::Enzyme, ProblemId::LinearRotation}) {
        const auto s = make_problem(id, 0.05);
        for (int k = 0; k <= 1; ++k) {
            for (auto strategy : {CorrectionStrategy::Field, CorrectionStrategy::Manifold}) {
                MgtConfig cfg = base_config(k, 1, 3, 2, 0.01, 0.6);
                cfg.strategy = strategy;
                cfg.mode = CorrectionMode::ExactEveryStage;
                ManifoldEvaluator a(s, cfg.inverter, cfg.eta, k + 1);
                ManifoldEvaluator b(s, cfg.inverter, cfg.eta, k + 1);
                const RunRecord tg = solve_two_grid(s, cfg, s.x0, 0.0, a);
                const RunRecord hmm = solve_hmm(s, k + 1, s.x0, cfg.dt, 0.0, cfg.T, b);
                EXPECT_LE(sup_distance(tg, hmm), 1e-12) << to_string(id) << " k=" << k;
            }
        }
    }
}

TEST(TwoGrid, RequiresOneLevel) {
    const auto s = make_problem(ProblemId::Enzyme, 0.05);
    ManifoldEvaluator ev(s, InverterSpec::exact(), 1e-5, 3);
    EXPECT_THROW(solve_two_grid(s, base_config(0, 2, 2, 1, 0.01, 1.0), s.x0, 0.0, ev), ConfigError);
}

TEST(Mgt, ZeroCorrectionsEqualHmmBitwise) {
    const auto s = make_problem(ProblemId::CubicChua, 0.02);
    for (int L = 1; L <= 2; ++L) {
        MgtConfig cfg = base_config(0, L, 2, 2, 0.02, 1.0);
        cfg.inverter = InverterSpec::relaxation(0.1, 10);
        cfg.mode = CorrectionMode::Zero;
        ManifoldEvaluator a(s, cfg.inverter, 1e-4, L);
        ManifoldEvaluator b(s, cfg.inverter, 1e-4, L);
        const RunRecord mg = solve_mgt(s, cfg, s.x0, 0.0, a);
        const RunRecord hmm = solve_hmm(s, 0, s.x0, cfg.dt, 0.0, cfg.T, b);
        EXPECT_TRUE(bitwise_equal(mg, hmm)) << "L=" << L;
    }
}

TEST(Mgt, OneLevelEqualsTwoGridBitwise) {
    const auto s = make_problem(ProblemId::Enzyme, 0.05);
    for (auto strategy : {CorrectionStrategy::Field, CorrectionStrategy::Manifold}) {
        MgtConfig cfg = base_config(0, 1, 4, 3, 0.01, 2.0);
        cfg.strategy = strategy;
        ManifoldEvaluator a(s, cfg.inverter, cfg.eta, 1);
        ManifoldEvaluator b(s, cfg.inverter, cfg.eta, 1);
        const RunRecord mg = solve_mgt(s, cfg, s.x0, 0.5, a);
        const RunRecord tg = solve_two_grid(s, cfg, s.x0, 0.5, b);
        EXPECT_TRUE(bitwise_equal(mg, tg));
        EXPECT_EQ(mg.counters.micro_calls, tg.counters.micro_calls);
        EXPECT_EQ(tg.method, "twogrid");
    }
}

TEST(Mgt, CorrectionImprovesOnBaseOrder) {
    const double e = 0.05;
    const auto s = make_problem(ProblemId::Enzyme, e);
    const MgtConfig cfg = base_config(0, 1, 4, 3, 0.01, 4.0);
    ManifoldEvaluator a(s, cfg.inverter, cfg.eta, 1), b(s, cfg.inverter, cfg.eta, 1), c(s, cfg.inverter, cfg.eta, 1);
    const Vec x1 = solve_mgt(s, cfg, s.x0, 0.0, a).final_state();
    const Vec h0 = solve_hmm(s, 0, s.x0, cfg.dt, 0.0, cfg.T, b).final_state();
    const Vec h1 = solve_hmm(s, 1, s.x0, cfg.dt, 0.0, cfg.T, c).final_state();
    EXPECT_LT((x1 - h1).norm(), 0.05 * (h0 - h1).norm());
}

TEST(Invariants, CostRatioFormula) {
    const auto s = make_problem(ProblemId::LinearRotation, 0.05);
    for (int P : {2, 3, 5}) {
        for (int L = 1; L <= 3; ++L) {
            if (P == 5 && L == 3) continue;
            const int k = 0;
            MgtConfig cfg = base_config(k, L, P, 2, 0.01, 40.0);
            ManifoldEvaluator a(s, cfg.inverter, cfg.eta, k + L);
            ManifoldEvaluator b(s, cfg.inverter, cfg.eta, k + L);
            const double mg = static_cast<double>(solve_mgt(s, cfg, s.x0, 0.0, a).counters.micro_calls);
            const double hmm = static_cast<double>(solve_hmm(s, k, s.x0, cfg.dt, 0.0, cfg.T, b).counters.micro_calls);
            const double want = P == 2 ? 1.0 + L / 2.0
                                       : (P - 1.0) / (P - 2.0) - std::pow(2.0 / P, L) / (P - 2.0);
            EXPECT_GE(mg / hmm, 0.9 * want) << "P=" << P << " L=" << L;
            EXPECT_LE(mg / hmm, 1.1 * want) << "P=" << P << " L=" << L;
        }
    }
}

TEST(Invariants, MonotoneTime) {
    const auto s = make_problem(ProblemId::Enzyme, 0.05);
    MgtConfig cfg = base_config(0, 2, 2, 1, 0.01, 1.0);
    ManifoldEvaluator ev(s, cfg.inverter, cfg.eta, 2);
    const double t0 = 0.13;
    const RunRecord r = solve_mgt(s, cfg, s.x0, t0, ev);
    ASSERT_EQ(r.times.size(), 88u);
    for (std::size_t i = 1; i < r.times.size(); ++i) {
        EXPECT_GT(r.times[i], r.times[i - 1]);
        EXPECT_NEAR(r.times[i] - r.times[i - 1], cfg.dt, 1e-12);
        EXPECT_TRUE(r.states[i].allFinite());
        EXPECT_GE(r.cumulative[i].micro_calls, r.cumulative[i - 1].micro_calls);
    }
    EXPECT_NEAR(r.times.back(), cfg.T, 1e-12);
}

TEST(Grid, Hierarchy) {
    const GridHierarchy g{0.01, 3, 2};
    EXPECT_NEAR(g.tau(2), 0.09, 1e-15);
    EXPECT_EQ(g.stride(1), 3);
    EXPECT_EQ(g.highest_level(0), 2);
    EXPECT_EQ(g.highest_level(3), 1);
    EXPECT_EQ(g.highest_level(9), 2);
    EXPECT_EQ(g.highest_level(4), 0);
}

TEST(Config, Validation) {
    const MgtConfig ok = base_config(0, 1, 2, 1, 0.01, 1.0);
    EXPECT_NO_THROW(ok.validate(1));
    auto bad = [&](auto mutate) {
        MgtConfig c = ok;
        mutate(c);
        return c;
    };
    EXPECT_THROW(bad([](MgtConfig& c) { c.P = 1; }).validate(1), ConfigError);
    EXPECT_THROW(bad([](MgtConfig& c) { c.m = -1; }).validate(1), ConfigError);
    EXPECT_THROW(bad([](MgtConfig& c) { c.T = 0.0; }).validate(1), ConfigError);
    EXPECT_THROW(bad([](MgtConfig& c) { c.dt_coupled = 0.02; }).validate(1), ConfigError);
    EXPECT_THROW(bad([](MgtConfig& c) { c.k = 1; }).validate(1), ConfigError);
    EXPECT_THROW(bad([](MgtConfig& c) {
                     c.L = 2;
                     c.strategy = CorrectionStrategy::Manifold;
                 }).validate(2),
                 ConfigError);
    EXPECT_NO_THROW(bad([](MgtConfig& c) {
                        c.L = 0;
                        c.P = 1;
                    }).validate(1));
    EXPECT_EQ(parse_strategy("Manifold"), CorrectionStrategy::Manifold);
    EXPECT_THROW(parse_strategy("both"), ConfigError);
}

TEST(Config, StepCount) {
    EXPECT_EQ(step_count(0.0, 1.0, 0.1), 10);
    EXPECT_EQ(step_count(0.5, 0.5, 0.1), 0);
    EXPECT_THROW(step_count(0.0, 1.0, 0.3), ConfigError);
    EXPECT_THROW(step_count(1.0, 0.0, 0.1), ConfigError);
    const auto s = make_problem(ProblemId::Enzyme, 0.05);
    ManifoldEvaluator ev(s, InverterSpec::exact(), 1e-5, 1);
    EXPECT_THROW(solve_mgt(s, base_config(0, 0, 2, 1, 0.01, 1.0), s.x0, 0.0, ev), ConfigError);
    EXPECT_THROW(solve_mgt(s, base_config(0, 1, 2, 1, 0.3, 1.0), s.x0, 0.0, ev), ConfigError);
}

TEST(Suggest, Examples) {
    const auto a = suggest_parameters(0, 1, 4, 0.01);
    EXPECT_EQ(a.m, 3);
    EXPECT_EQ(a.P, 4);
    EXPECT_FALSE(a.balance_warning);
    ASSERT_EQ(a.tau_hints.size(), 2u);
    EXPECT_NEAR(a.tau_hints[1], std::pow(0.01, 0.25), 1e-15);

    for (double e : {0.3, 0.01, 1e-4}) {
        const auto b = suggest_parameters(1, 1, 4, e);
        EXPECT_EQ(b.m, 2);
        EXPECT_FALSE(b.balance_warning);
    }

    const auto c = suggest_parameters(2, 0, 4, 0.01);
    EXPECT_EQ(c.m, 3);
    EXPECT_FALSE(c.balance_warning);

    // k = 0 with three levels and m = 3: 0 < 3/4 * 3 - 1
    EXPECT_TRUE(suggest_parameters(0, 3, 4, 0.01).balance_warning);
    EXPECT_THROW(suggest_parameters(0, 1, 0, 0.01), ConfigError);
    EXPECT_THROW(suggest_parameters(0, 1, 4, 1.5), ConfigError);
}
