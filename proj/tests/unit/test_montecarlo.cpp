#include "refdiff/errors.hpp"
#include "refdiff/montecarlo.hpp"
#include "refdiff/poisson.hpp"

#include <gtest/gtest.h>
#include <omp.h>

#include <cmath>

using namespace refdiff;

namespace {

DiffusionModel rbm(double mu = 0.0, double s2 = 1.0, double b = 1.0) {
    return {ConstantDrift{mu}, ConstantSq{s2}, TwoBarrier{b}};
}

McConfig small(double dt = 1e-3, double horizon = 5.0, std::int64_t reps = 8) {
    McConfig mc;
    mc.dt = dt;
    mc.horizon_t = horizon;
    mc.replications = reps;
    mc.seed = 42;
    mc.batch_count = 0;
    return mc;
}

bool same(const PathRecord& a, const PathRecord& b) {
    return a.a_final == b.a_final && a.a_per_time == b.a_per_time && a.l_final == b.l_final &&
           a.u_final == b.u_final && a.x_final == b.x_final && a.occupation == b.occupation;
}

}  // namespace

TEST(SimulatePath, DeterministicIntegrand) {
    auto mc = small(1e-3, 7.3);
    mc.x0 = 0.4;
    const auto p = simulate_path(rbm(0, 1e-8), {ConstantCost{1}, 0, 0}, mc, 3);
    EXPECT_EQ(p.a_final, mc.horizon_t);
}

TEST(SimulatePath, ZeroFunctional) {
    for (const auto& p : simulate_replications(rbm(0.5), {ZeroCost{}, 0, 0}, small())) EXPECT_EQ(p.a_final, 0.0);
}

TEST(SimulatePath, ZeroDriftOccupationIsUniform) {
    auto mc = small(1e-3, 1000.0, 2);
    mc.x0 = 0.5;
    const auto est = summarize_paths(rbm(), {ZeroCost{}, 1, 1}, mc, simulate_replications(rbm(), {ZeroCost{}, 1, 1}, mc), {});
    for (double d : est.occupation.density) EXPECT_NEAR(d, 1.0, 0.05);
}

TEST(SimulatePath, PathInvariants) {
    for (auto scheme : {ReflectionScheme::Projection, ReflectionScheme::BrownianBridge}) {
        auto mc = small(1e-3, 20.0);
        mc.scheme = scheme;
        const auto trace = trace_path(rbm(0.3, 1.0, 0.5), {ConstantCost{0.5}, 1, 2}, mc, 1);
        ASSERT_EQ(trace.size(), 20001u);
        int lower_pushes = 0, upper_pushes = 0;
        for (std::size_t k = 1; k < trace.size(); ++k) {
            const auto& prev = trace[k - 1];
            const auto& cur = trace[k];
            EXPECT_GE(cur.x, 0.0);
            EXPECT_LE(cur.x, 0.5);
            EXPECT_GE(cur.l, prev.l);
            EXPECT_GE(cur.u, prev.u);
            EXPECT_FALSE(cur.l > prev.l && cur.u > prev.u) << "step " << k;
            if (scheme == ReflectionScheme::Projection) {
                if (cur.l > prev.l) EXPECT_EQ(cur.x, 0.0);
                if (cur.u > prev.u) EXPECT_EQ(cur.x, 0.5);
            }
            lower_pushes += cur.l > prev.l;
            upper_pushes += cur.u > prev.u;
        }
        EXPECT_GT(lower_pushes, 0);
        EXPECT_GT(upper_pushes, 0);
        const auto rec = simulate_path(rbm(0.3, 1.0, 0.5), {ConstantCost{0.5}, 1, 2}, mc, 1);
        EXPECT_EQ(rec.l_final, trace.back().l);
        EXPECT_EQ(rec.x_final, trace.back().x);
        EXPECT_NEAR(rec.a_final, trace.back().a, 1e-9);
    }
}

TEST(SimulatePath, ProjectionPushesOnlyFromOutside) {
    auto mc = small(1e-3, 5.0);
    mc.scheme = ReflectionScheme::Projection;
    mc.x0 = 0.5;
    // Far from both barriers for the first steps: no local time at all.
    const auto trace = trace_path(rbm(0, 1e-4, 1.0), {ZeroCost{}, 1, 1}, mc, 0);
    EXPECT_EQ(trace.back().l, 0.0);
    EXPECT_EQ(trace.back().u, 0.0);
}

TEST(SimulateReplications, ParallelMatchesSerialBitwise) {
    const auto m = rbm(-0.4, 1.3, 1.0);
    const AdditiveFunctional fn{OuDrift{1, 0.2}, 0.7, 1.1};
    const auto mc = small(1e-3, 3.0, 16);
    const int saved = omp_get_max_threads();
    omp_set_num_threads(4);
    const auto parallel = simulate_replications(m, fn, mc);
    omp_set_num_threads(saved);
    const auto serial = simulate_replications_serial(m, fn, mc);
    ASSERT_EQ(parallel.size(), serial.size());
    for (std::size_t i = 0; i < serial.size(); ++i) {
        EXPECT_TRUE(same(parallel[i], serial[i])) << i;
        EXPECT_TRUE(same(serial[i], simulate_path(m, fn, mc, i))) << i;
    }
}

TEST(SimulateReplications, SeedChangesPaths) {
    auto mc = small();
    const auto a = simulate_path(rbm(), {ZeroCost{}, 1, 1}, mc, 0);
    mc.seed += 1;
    EXPECT_NE(a.a_final, simulate_path(rbm(), {ZeroCost{}, 1, 1}, mc, 0).a_final);
}

TEST(McConfig, Validation) {
    auto mc = small();
    mc.dt = 0;
    EXPECT_THROW(check_mc_config(rbm(), mc), ValidationError);
    mc = small();
    mc.dt = 10;
    EXPECT_THROW(check_mc_config(rbm(), mc), ValidationError);
    mc = small();
    mc.replications = 1;
    EXPECT_THROW(check_mc_config(rbm(), mc), ValidationError);
    mc = small();
    mc.x0 = 1.5;
    EXPECT_THROW(check_mc_config(rbm(), mc), ValidationError);
    mc = small(0.05);
    EXPECT_THROW(check_mc_config(rbm(), mc), ValidationError);
    EXPECT_NO_THROW(check_mc_config(rbm(), small()));
}

TEST(Estimators, ConstantCostExact) {
    const auto est = estimate_lln_clt(rbm(0.3), {ConstantCost{0.1}, 0, 0}, small());
    EXPECT_EQ(est.alpha.value, 0.1);
    EXPECT_EQ(est.alpha.se, 0.0);
    EXPECT_EQ(est.eta2.value, 0.0);
}

TEST(Estimators, CgfExactCases) {
    const std::vector<double> thetas{-2.0, 0.0, 0.5, 3.0};
    const auto unit = estimate_scaled_cgf(rbm(), {ConstantCost{1}, 0, 0}, small(), thetas);
    for (std::size_t i = 0; i < thetas.size(); ++i) EXPECT_EQ(unit.cgf[i].value, thetas[i]);
    const auto rbm_cgf = estimate_scaled_cgf(rbm(), {ZeroCost{}, 1, 1}, small(), thetas);
    EXPECT_EQ(rbm_cgf.cgf[1].value, 0.0);
}

TEST(Estimators, CgfNeverOverflows) {
    const std::vector<double> thetas{-800.0, 800.0};
    const auto est = estimate_scaled_cgf(rbm(), {ZeroCost{}, 1, 1}, small(1e-3, 5.0, 50), thetas);
    for (const auto& p : est.cgf) {
        EXPECT_TRUE(std::isfinite(p.value));
        EXPECT_TRUE(std::isfinite(p.se));
        EXPECT_GT(p.top_weight_fraction, 0.5);
        EXPECT_TRUE(p.unreliable);
    }
}

TEST(Estimators, CgfConvexAcrossTheta) {
    std::vector<double> thetas;
    for (int i = -6; i <= 6; ++i) thetas.push_back(0.25 * i);
    const auto est = estimate_scaled_cgf(rbm(1), {ZeroCost{}, 0, 1}, small(1e-3, 10.0, 400), thetas);
    for (std::size_t i = 1; i + 1 < thetas.size(); ++i) {
        const double second = est.cgf[i + 1].value - 2 * est.cgf[i].value + est.cgf[i - 1].value;
        EXPECT_GE(second, -3 * (est.cgf[i + 1].se + 2 * est.cgf[i].se + est.cgf[i - 1].se));
    }
}

TEST(Estimators, ProjectionBiasShrinksWithStep) {
    // α = 1 exactly for this model; the projection scheme underestimates local time.
    double previous = 1e300;
    for (double dt : {4e-3, 1e-3, 2.5e-4}) {
        auto mc = small(dt, 100.0, 200);
        mc.scheme = ReflectionScheme::Projection;
        const auto est = estimate_lln_clt(rbm(), {ZeroCost{}, 1, 1}, mc);
        const double bias = std::abs(est.alpha.value - 1.0);
        EXPECT_LT(bias, previous) << dt;
        previous = bias;
    }
}

TEST(Estimators, BatchMeansAgreesWithReplications) {
    auto mc = small(1e-3, 400.0, 100);
    mc.batch_count = 32;
    const auto est = estimate_lln_clt(rbm(), {ZeroCost{}, 1, 1}, mc);
    ASSERT_TRUE(est.eta2_batch_means);
    const double combined = std::hypot(est.eta2.se, est.eta2_batch_means->se);
    EXPECT_LE(std::abs(est.eta2.value - est.eta2_batch_means->value), 3 * combined);
    EXPECT_GT(est.alpha.se, 0);
    EXPECT_GT(est.eta2.se, 0);
}

TEST(Estimators, SingleBarrierAlpha) {
    const DiffusionModel m{ConstantDrift{-1}, ConstantSq{1}, SingleBarrier{}};
    const AdditiveFunctional fn{ZeroCost{}, 1, 0};
    auto mc = small(1e-3, 1000.0, 20);
    const auto est = estimate_lln_clt(m, fn, mc);
    EXPECT_LE(std::abs(est.alpha.value - 1.0), 3 * est.alpha.se);
}

TEST(Estimators, SummarizeNeedsTwoPaths) {
    std::vector<PathRecord> one(1);
    EXPECT_THROW(summarize_paths(rbm(), {}, small(), one, {}), ValidationError);
}
