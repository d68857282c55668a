#include "pcrm/solvers.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <cstring>
#include <vector>

using namespace pcrm;

namespace {

Vector v2(double a, double b)
{
    Vector v(2);
    v << a, b;
    return v;
}

std::vector<AffineSubspace> axes()
{
    Matrix e2(1, 2), e1(1, 2);
    e2 << 0, 1;
    e1 << 1, 0;
    return {build_subspace(e2, Vector::Zero(1)), build_subspace(e1, Vector::Zero(1))};
}

std::vector<double> random_weights(oracle::Gen& g, std::size_t blocks)
{
    std::vector<double> p(blocks + 1);
    double total = 0.0;
    for (auto& w : p) {
        w = g.uniform(0.05, 1.0);
        total += w;
    }
    if (g.integer(0, 2) == 0) {
        total -= p[0];
        p[0] = 0.0;
    }
    for (auto& w : p)
        w /= total;
    return p;
}

/// Random consistent instance with a planted common point.
ProblemInstance random_instance(oracle::Gen& g, Index n, int blocks, int max_rows)
{
    std::vector<Index> rows;
    for (int i = 0; i < blocks; ++i)
        rows.push_back(g.integer(1, max_rows));
    return build_planted_instance(n, rows, g.uniform(0.0, 0.2), g.seed());
}

} // namespace

TEST(FspmStep, CimminoAverageOfAxes)
{
    const auto blocks = axes();
    const std::vector<double> p{0.0, 0.5, 0.5};
    EXPECT_LE((fspm_step(v2(1, 1), blocks, p) - v2(0.5, 0.5)).norm(), 1e-15);
}

TEST(FspmStep, FixedPointOnIntersection)
{
    const auto blocks = axes();
    const std::vector<double> p{0.2, 0.3, 0.5};
    EXPECT_LE(fspm_step(v2(0, 0), blocks, p).norm(), 1e-15);
}

TEST(FspmStep, UniformWeightsMatchDirectAverage)
{
    oracle::Gen g(41);
    const auto inst = random_instance(g, 8, 4, 3);
    const Vector x  = g.vector(8);
    Vector direct   = x;
    for (const auto& U : inst.subspaces)
        direct += U.project(x);
    direct /= 5.0;
    EXPECT_LE((fspm_step(x, inst.blocks(), uniform_weights(4)) - direct).norm(), 1e-12 * (1 + direct.norm()));
}

TEST(FspmStep, InvalidWeights)
{
    const auto blocks = axes();
    const Vector x    = v2(1, 1);
    EXPECT_THROW(fspm_step(x, blocks, std::vector<double>{0.5, 0.5}), invalid_weights);
    EXPECT_THROW(fspm_step(x, blocks, std::vector<double>{-0.1, 0.6, 0.5}), invalid_weights);
    EXPECT_THROW(fspm_step(x, blocks, std::vector<double>{0.5, 0.5, 0.0}), invalid_weights);
    EXPECT_THROW(fspm_step(x, blocks, std::vector<double>{0.2, 0.5, 0.5}), invalid_weights);
}

TEST(CrmStep, AxesExample)
{
    // R1 x = (1,-1), R2 R1 x = (-1,-1); circumcenter (0,0).
    EXPECT_LE(crm_step(v2(1, 1), axes()).norm(), 1e-15);
}

TEST(CrmStep, FixedPoint)
{
    oracle::Gen g(42);
    const auto inst = random_instance(g, 6, 3, 2);
    const Vector s  = project_intersection(inst.blocks(), g.vector(6));
    EXPECT_LE((crm_step(s, inst.blocks()) - s).norm(), 1e-10 * (1 + s.norm()));
}

TEST(CrmStep, FejerOnRandomInstances)
{
    oracle::Gen g(43);
    for (int trial = 0; trial < 50; ++trial) {
        const auto inst = random_instance(g, 5, 3, 2);
        const Vector x  = 3.0 * g.vector(5);
        const Vector s  = project_intersection(inst.blocks(), x);
        EXPECT_LE((crm_step(x, inst.blocks()) - s).norm(), (x - s).norm() * (1 + 1e-12));
    }
}

TEST(PcrmStep, AxesExample)
{
    // Reflections (1,-1) and (-1,1); circumcenter (0,0).
    EXPECT_LE(pcrm_step(v2(1, 1), axes()).norm(), 1e-15);
}

TEST(PcrmStep, HyperplanesSolvedInOneStep)
{
    oracle::Gen g(44);
    for (int trial = 0; trial < 30; ++trial) {
        const Index n   = g.integer(2, 20);
        const int count = g.integer(1, static_cast<int>(n));
        const auto inst = build_planted_instance(n, std::vector<Index>(static_cast<std::size_t>(count), 1), 0.0,
                                                 g.seed());
        const Vector x  = 4.0 * g.vector(n);
        const Vector c  = pcrm_step(x, inst.blocks());
        for (const auto& U : inst.subspaces)
            EXPECT_LE(U.constraint_residual(c), 1e-10 * (1 + U.rhs().norm()));
    }
}

TEST(PcrmStep, DominatesFspmStep)
{
    oracle::Gen g(45);
    for (int trial = 0; trial < 200; ++trial) {
        const auto inst = random_instance(g, g.integer(3, 12), g.integer(1, 5), 3);
        const Index n   = inst.ambient_dim;
        const Vector x  = 3.0 * g.vector(n);
        const Vector s  = project_intersection(inst.blocks(), x);
        const auto p    = random_weights(g, inst.block_count());
        const double d_pcrm = (pcrm_step(x, inst.blocks()) - s).norm();
        const double d_fspm = (fspm_step(x, inst.blocks(), p) - s).norm();
        EXPECT_LE(d_pcrm, d_fspm + 1e-9);
    }
}

TEST(PcrmStep, BitwiseIdenticalAcrossWorkerCounts)
{
    const auto inst = build_instance(600, 40, 0.1, 9);
    oracle::Gen g(46);
    const Vector x   = g.vector(40);
    const Vector one = pcrm_step(x, inst.blocks(), 1);
    for (int w : {2, 3, 4, max_workers()}) {
        const Vector many = pcrm_step(x, inst.blocks(), w);
        ASSERT_EQ(one.size(), many.size());
        EXPECT_EQ(0, std::memcmp(one.data(), many.data(), sizeof(double) * static_cast<std::size_t>(one.size())))
            << "workers=" << w;
    }
}

TEST(PcrmStep, EmptyBlockListRejected)
{
    EXPECT_THROW(pcrm_step(v2(1, 1), std::vector<AffineSubspace>{}), dimension_mismatch);
    EXPECT_THROW(crm_step(v2(1, 1), std::vector<AffineSubspace>{}), dimension_mismatch);
}

TEST(Solve, SingletonInstanceConverges)
{
    const auto inst = build_instance(300, 30, 0.1, 5);
    SolverConfig config;
    config.method = Method::pcrm;
    const auto result = solve(inst, config);
    EXPECT_EQ(result.trace.status, Status::converged);
    EXPECT_LE(result.trace.rel_err, 1e-5);
    EXPECT_LT(result.trace.iterations, 10000);
}

TEST(Solve, StartInsideIntersectionStopsAtZero)
{
    const auto inst = build_instance(120, 20, 0.0, 3);
    for (auto method : {Method::fspm, Method::cimmino, Method::crm, Method::pcrm}) {
        SolverConfig config;
        config.method = method;
        const auto result = solve(inst, config, inst.known_solution);
        EXPECT_EQ(result.trace.status, Status::converged);
        EXPECT_EQ(result.trace.iterations, 0);
        EXPECT_EQ(result.trace.projections, 0);
        ASSERT_EQ(result.trace.records.size(), 1u);
    }
    SolverConfig config;
    config.stop_rule = StopRule::feasibility_residual;
    EXPECT_EQ(solve(inst, config, inst.known_solution).trace.iterations, 0);
}

TEST(Solve, UnderdeterminedLimitIsProjectionOfStart)
{
    oracle::Gen g(47);
    const auto inst = build_underdetermined_instance(10, {3, 3}, 0.0, 17);
    const Vector x0 = 2.0 * g.vector(10);
    const Vector s  = project_intersection(inst.blocks(), x0);
    for (auto method : {Method::fspm, Method::cimmino, Method::crm, Method::pcrm}) {
        SolverConfig config;
        config.method         = method;
        config.stop_rule      = StopRule::feasibility_residual;
        config.tolerance      = 1e-12;
        config.max_iterations = 100000;
        const auto result = solve(inst, config, x0);
        EXPECT_EQ(result.trace.status, Status::converged) << to_string(method);
        EXPECT_LE((result.x - s).norm(), 1e-5 * (1 + s.norm())) << to_string(method);
    }
}

TEST(Solve, ProjectionAccounting)
{
    const auto inst = build_instance(200, 20, 0.0, 8);
    for (auto method : {Method::fspm, Method::cimmino, Method::crm, Method::pcrm}) {
        SolverConfig config;
        config.method         = method;
        config.max_iterations = 7;
        config.tolerance      = 1e-300;
        const auto result = solve(inst, config);
        const auto& recs  = result.trace.records;
        ASSERT_EQ(recs.size(), 8u);
        for (std::size_t k = 1; k < recs.size(); ++k)
            EXPECT_EQ(recs[k].projections - recs[k - 1].projections, 11);
        EXPECT_EQ(result.trace.projections, 77);
        EXPECT_EQ(result.trace.status, Status::max_iter);
    }
}

TEST(Solve, StepNormRule)
{
    const auto inst = build_underdetermined_instance(6, {2, 2}, 0.0, 2);
    SolverConfig config;
    config.method    = Method::cimmino;
    config.stop_rule = StopRule::step_norm;
    config.tolerance = 1e-9;
    const auto result = solve(inst, config);
    EXPECT_EQ(result.trace.status, Status::converged);
    EXPECT_LE(residual(inst.blocks(), result.x), 1e-6);
}

TEST(Solve, Errors)
{
    const auto inst = build_underdetermined_instance(6, {2, 2}, 0.0, 2);
    SolverConfig config;
    EXPECT_THROW(solve(inst, config), missing_reference);

    config.stop_rule = StopRule::feasibility_residual;
    config.method    = Method::fspm;
    config.weights   = {0.5, 0.5};
    EXPECT_THROW(solve(inst, config), invalid_weights);
    config.weights.clear();
    EXPECT_THROW(solve(inst, config, Vector::Zero(5)), dimension_mismatch);
}

TEST(Solve, NonFiniteIterateReportsBreakdown)
{
    const auto inst = build_instance(60, 10, 0.0, 4);
    SolverConfig config;
    config.method = Method::fspm;
    const auto result = solve(inst, config, Vector::Constant(10, 1e308));
    EXPECT_EQ(result.trace.status, Status::diverged_numerically);
    EXPECT_EQ(result.trace.iterations, 1);
}

TEST(EstimateRate, GeometricTrace)
{
    IterationTrace trace;
    for (int k = 0; k < 20; ++k)
        trace.records.push_back({k, 0.0, std::pow(0.5, k), 0, 0.0});
    const auto est = estimate_rate(trace);
    EXPECT_NEAR(est.rate, 0.5, 1e-6);
    EXPECT_TRUE(est.contracting);
}

TEST(EstimateRate, ConstantTraceIsNotContracting)
{
    IterationTrace trace;
    for (int k = 0; k < 10; ++k)
        trace.records.push_back({k, 0.0, 0.7, 0, 0.0});
    const auto est = estimate_rate(trace);
    EXPECT_EQ(est.rate, 1.0);
    EXPECT_FALSE(est.contracting);
}

TEST(EstimateRate, InsufficientData)
{
    IterationTrace trace;
    trace.records.push_back({0, 0.0, 1.0, 0, 0.0});
    trace.records.push_back({1, 0.0, 0.5, 0, 0.0});
    trace.records.push_back({2, 0.0, 0.0, 0, 0.0});
    EXPECT_THROW(estimate_rate(trace), insufficient_data);
}

TEST(EstimateRate, PcrmNoSlowerThanCimmino)
{
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto inst = build_underdetermined_instance(40, {6, 6, 6, 6, 6}, 0.1, seed);
        const Vector s  = project_intersection(inst.blocks(), Vector::Zero(40));
        SolverConfig config;
        config.tolerance      = 1e-9;
        config.max_iterations = 5000;

        config.method    = Method::pcrm;
        const auto pcrm_rate = estimate_rate(solve(inst, config, std::nullopt, s).trace);
        config.method    = Method::cimmino;
        const auto cim_rate = estimate_rate(solve(inst, config, std::nullopt, s).trace);
        EXPECT_LE(pcrm_rate.rate, cim_rate.rate + 1e-6) << "seed " << seed;
        EXPECT_TRUE(pcrm_rate.contracting);
    }
}

// Iterate-level properties of P-CRM and F-SPM on random consistent instances.

TEST(SolverProperties, PcrmPythagoreanIdentityAndBlockDistances)
{
    oracle::Gen g(48);
    for (int trial = 0; trial < 40; ++trial) {
        const auto inst = random_instance(g, g.integer(4, 20), g.integer(2, 6), 4);
        Vector x        = 3.0 * g.vector(inst.ambient_dim);
        const Vector s  = project_intersection(inst.blocks(), x);
        for (int k = 0; k < 15 && (x - s).norm() > 1e-6 * (1 + s.norm()); ++k) {
            const Vector c  = pcrm_step(x, inst.blocks());
            const double lhs = (c - s).squaredNorm() + (x - c).squaredNorm();
            const double rhs = (x - s).squaredNorm();
            EXPECT_NEAR(lhs, rhs, 1e-8 * rhs);
            for (const auto& U : inst.subspaces) {
                const double sum = U.distance(c) * U.distance(c) + U.distance(x) * U.distance(x);
                EXPECT_LE(sum, (x - c).squaredNorm() + 1e-8);
            }
            x = c;
        }
    }
}

TEST(SolverProperties, ProjectionOfIteratesIsInvariant)
{
    oracle::Gen g(49);
    for (int trial = 0; trial < 20; ++trial) {
        const auto inst = random_instance(g, g.integer(6, 16), g.integer(2, 4), 2);
        const Vector x0 = 2.0 * g.vector(inst.ambient_dim);
        const Vector s  = project_intersection(inst.blocks(), x0);
        Vector xp = x0;
        Vector xf = x0;
        const auto p = uniform_weights(inst.block_count());
        for (int k = 0; k < 10; ++k) {
            xp = pcrm_step(xp, inst.blocks());
            xf = fspm_step(xf, inst.blocks(), p);
            EXPECT_LE((project_intersection(inst.blocks(), xp) - s).norm(), 1e-7 * (1 + s.norm()));
            EXPECT_LE((project_intersection(inst.blocks(), xf) - s).norm(), 1e-7 * (1 + s.norm()));
        }
    }
}

TEST(SolverProperties, DistanceToSolutionDecreases)
{
    oracle::Gen g(50);
    for (int trial = 0; trial < 10; ++trial) {
        const auto inst = random_instance(g, g.integer(6, 16), g.integer(2, 4), 3);
        const Vector x0 = 2.0 * g.vector(inst.ambient_dim);
        const Vector s  = project_intersection(inst.blocks(), x0);
        for (auto method : {Method::fspm, Method::cimmino, Method::crm, Method::pcrm}) {
            SolverConfig config;
            config.method         = method;
            config.tolerance      = 1e-8;
            config.max_iterations = 3000;
            const auto trace = solve(inst, config, x0, s).trace;
            for (std::size_t k = 1; k < trace.records.size(); ++k)
                EXPECT_LE(trace.records[k].distance, trace.records[k - 1].distance * (1 + 1e-12) + 1e-14)
                    << to_string(method) << " k=" << k;
        }
    }
}
