#pragma once

#include "pcrm/affine.hpp"
#include "pcrm/circumcenter.hpp"
#include "pcrm/errors.hpp"
#include "pcrm/problem_gen.hpp"
#include "pcrm/types.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace pcrm {

enum class Method { fspm, cimmino, crm, pcrm };
enum class StopRule { rel_err_to_known, feasibility_residual, step_norm };
enum class Status { converged, max_iter, diverged_numerically };

inline std::string_view to_string(Method m)
{
    switch (m) {
    case Method::fspm: return "fspm";
    case Method::cimmino: return "cimmino";
    case Method::crm: return "crm";
    case Method::pcrm: return "pcrm";
    }
    return "?";
}

inline std::string_view to_string(Status s)
{
    switch (s) {
    case Status::converged: return "converged";
    case Status::max_iter: return "max_iter";
    case Status::diverged_numerically: return "diverged_numerically";
    }
    return "?";
}

inline std::string_view to_string(StopRule r)
{
    switch (r) {
    case StopRule::rel_err_to_known: return "rel_err";
    case StopRule::feasibility_residual: return "residual";
    case StopRule::step_norm: return "step";
    }
    return "?";
}

inline std::optional<Method> parse_method(std::string_view s)
{
    if (s == "fspm") return Method::fspm;
    if (s == "cimmino") return Method::cimmino;
    if (s == "crm") return Method::crm;
    if (s == "pcrm") return Method::pcrm;
    return std::nullopt;
}

inline std::optional<StopRule> parse_stop_rule(std::string_view s)
{
    if (s == "rel_err" || s == "rel") return StopRule::rel_err_to_known;
    if (s == "residual") return StopRule::feasibility_residual;
    if (s == "step") return StopRule::step_norm;
    return std::nullopt;
}

struct SolverConfig {
    Method method = Method::pcrm;
    /// p_0 .. p_m for the simultaneous-projection methods; empty selects the
    /// method default (uniform 1/(m+1) for fspm, p_0 = 0 and 1/m for cimmino).
    std::vector<double> weights;
    double tolerance    = 1e-5;
    int max_iterations  = 10000;
    StopRule stop_rule  = StopRule::rel_err_to_known;
    int workers         = 1;
    /// Record max_i dist(x_k, U_i) every iteration.  Costs one extra projection
    /// per block, which is not counted in the projection total.
    bool record_residuals = true;
};

struct IterationRecord {
    int k = 0;
    double residual = std::numeric_limits<double>::quiet_NaN();
    double distance = std::numeric_limits<double>::quiet_NaN(); ///< ||x_k - reference||
    long long projections = 0;                                   ///< cumulative
    double elapsed_s = 0.0;
};

struct IterationTrace {
    std::vector<IterationRecord> records;
    Status status = Status::max_iter;
    int iterations = 0;
    long long projections = 0;
    double wall_time_s = 0.0;
    double rel_err = std::numeric_limits<double>::quiet_NaN(); ///< final, when a reference is known
};

struct SolveResult {
    IterationTrace trace;
    Vector x;
};

inline std::vector<double> uniform_weights(std::size_t blocks)
{
    return std::vector<double>(blocks + 1, 1.0 / static_cast<double>(blocks + 1));
}

inline std::vector<double> cimmino_weights(std::size_t blocks)
{
    std::vector<double> p(blocks + 1, 1.0 / static_cast<double>(blocks));
    p[0] = 0.0;
    return p;
}

/// p_0 >= 0, p_i > 0 for i >= 1, sum = 1.
inline void validate_weights(std::span<const double> weights, std::size_t blocks)
{
    if (weights.size() != blocks + 1)
        throw invalid_weights("expected " + std::to_string(blocks + 1) + " weights, got " +
                              std::to_string(weights.size()));
    if (!(weights[0] >= 0.0))
        throw invalid_weights("p_0 must be non-negative");
    for (std::size_t i = 1; i < weights.size(); ++i)
        if (!(weights[i] > 0.0))
            throw invalid_weights("p_" + std::to_string(i) + " must be positive");
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (!(std::abs(total - 1.0) <= 1e-12 * static_cast<double>(weights.size())))
        throw invalid_weights("weights must sum to 1 (sum = " + std::to_string(total) + ")");
}

/// Runs one independent task per block on a bounded OpenMP team.  Each task
/// writes only its own slot, so results do not depend on the worker count.
class BlockExecutor {
public:
    explicit BlockExecutor(int workers = 1) : workers_(std::max(1, workers)) {}

    int workers() const { return workers_; }

    template <class Fn>
    void for_each_block(std::size_t count, Fn&& fn) const
    {
        const auto n = static_cast<long long>(count);
#ifdef _OPENMP
#pragma omp parallel for num_threads(workers_) schedule(static) if (workers_ > 1 && n > 1)
#endif
        for (long long i = 0; i < n; ++i)
            fn(static_cast<std::size_t>(i));
    }

private:
    int workers_;
};

inline int max_workers()
{
#ifdef _OPENMP
    return std::max(1, omp_get_num_procs());
#else
    return 1;
#endif
}

/// T(x) = p_0 x + sum_i p_i P_{U_i}(x).
inline Vector fspm_step(const Vector& x, SubspaceList subspaces, std::span<const double> weights,
                        const BlockExecutor& exec = BlockExecutor{})
{
    validate_weights(weights, subspaces.size());
    std::vector<Vector> projections(subspaces.size());
    exec.for_each_block(subspaces.size(), [&](std::size_t i) { projections[i] = subspaces[i].project(x); });

    Vector out = weights[0] * x;
    for (std::size_t i = 0; i < subspaces.size(); ++i)
        out += weights[i + 1] * projections[i];
    return out;
}

/// circ(x, R_1 x, R_2 R_1 x, ..., R_m ... R_1 x); inherently sequential.
inline Vector crm_step(const Vector& x, SubspaceList subspaces)
{
    if (subspaces.empty())
        throw dimension_mismatch("crm_step: no subspaces");
    std::vector<Vector> points;
    points.reserve(subspaces.size() + 1);
    points.push_back(x);
    for (const auto& U : subspaces)
        points.push_back(U.reflect(points.back()));
    return circumcenter(points);
}

/// circ(x, R_1 x, R_2 x, ..., R_m x).  The reflections are computed
/// concurrently; the Gram system is assembled afterwards in block order.
inline Vector pcrm_step(const Vector& x, SubspaceList subspaces, const BlockExecutor& exec)
{
    if (subspaces.empty())
        throw dimension_mismatch("pcrm_step: no subspaces");
    std::vector<Vector> points(subspaces.size() + 1);
    points[0] = x;
    exec.for_each_block(subspaces.size(), [&](std::size_t i) { points[i + 1] = subspaces[i].reflect(x); });
    return circumcenter(points);
}

inline Vector pcrm_step(const Vector& x, SubspaceList subspaces, int workers = 1)
{
    return pcrm_step(x, subspaces, BlockExecutor(workers));
}

/// Weights actually used by `config` on an instance with `blocks` blocks.
inline std::vector<double> effective_weights(const SolverConfig& config, std::size_t blocks)
{
    if (!config.weights.empty())
        return config.weights;
    return config.method == Method::cimmino ? cimmino_weights(blocks) : uniform_weights(blocks);
}

/// Projections charged for one iteration: one per reflection for CRM/P-CRM,
/// one per positive p_i (i >= 1) for the simultaneous-projection methods.
inline long long projections_per_iteration(Method method, std::span<const double> weights, std::size_t blocks)
{
    if (method == Method::crm || method == Method::pcrm)
        return static_cast<long long>(blocks);
    long long count = 0;
    for (std::size_t i = 1; i < weights.size(); ++i)
        count += weights[i] > 0.0 ? 1 : 0;
    return count;
}

/// Iterate from x0 (default: the null vector) until the stop rule fires or
/// max_iterations is reached.  `reference`, when given, overrides the
/// instance's known solution for distances and the relative-error rule.
inline SolveResult solve(const ProblemInstance& instance, const SolverConfig& config,
                         std::optional<Vector> x0 = std::nullopt, std::optional<Vector> reference = std::nullopt)
{
    const SubspaceList blocks = instance.blocks();
    if (blocks.empty())
        throw dimension_mismatch("solve: instance has no blocks");
    if (!(config.tolerance > 0.0))
        throw error("solve: tolerance must be positive");
    if (config.max_iterations < 1)
        throw error("solve: max_iterations must be at least 1");
    if (config.workers < 1)
        throw error("solve: workers must be at least 1");

    const Index n = instance.ambient_dim;
    Vector x      = x0 ? *x0 : Vector::Zero(n);
    detail::require_dims(x.size() == n, "solve", "initial point dimension");

    if (!reference && instance.known_solution)
        reference = instance.known_solution;
    if (reference)
        detail::require_dims(reference->size() == n, "solve", "reference dimension");
    if (config.stop_rule == StopRule::rel_err_to_known && !reference)
        throw missing_reference("solve: relative-error stop rule needs a known solution");

    std::vector<double> weights;
    if (config.method == Method::fspm || config.method == Method::cimmino) {
        weights = effective_weights(config, blocks.size());
        validate_weights(weights, blocks.size());
    }
    const long long per_iteration = projections_per_iteration(config.method, weights, blocks.size());
    const BlockExecutor exec(config.workers);

    const double ref_norm = reference ? reference->norm() : 0.0;
    const double rel_den  = ref_norm > 0.0 ? ref_norm : 1.0;
    const bool want_residual =
        config.record_residuals || config.stop_rule == StopRule::feasibility_residual;

    SolveResult result;
    IterationTrace& trace = result.trace;

    using clock      = std::chrono::steady_clock;
    const auto start = clock::now();

    auto record = [&](int k, const Vector& point) {
        IterationRecord r;
        r.k           = k;
        r.projections = trace.projections;
        if (want_residual)
            r.residual = residual(blocks, point);
        if (reference)
            r.distance = (point - *reference).norm();
        r.elapsed_s = std::chrono::duration<double>(clock::now() - start).count();
        trace.records.push_back(r);
        return r;
    };

    auto stopped = [&](const IterationRecord& r, const Vector& point, double step) {
        switch (config.stop_rule) {
        case StopRule::rel_err_to_known:
            return r.distance / rel_den <= config.tolerance;
        case StopRule::feasibility_residual:
            return r.residual <= config.tolerance * (1.0 + point.norm());
        case StopRule::step_norm:
            return step <= config.tolerance;
        }
        return false;
    };

    trace.status = Status::max_iter;
    if (stopped(record(0, x), x, std::numeric_limits<double>::infinity())) {
        trace.status = Status::converged;
    } else {
        for (int k = 1; k <= config.max_iterations; ++k) {
            Vector next;
            switch (config.method) {
            case Method::fspm:
            case Method::cimmino: next = fspm_step(x, blocks, weights, exec); break;
            case Method::crm: next = crm_step(x, blocks); break;
            case Method::pcrm: next = pcrm_step(x, blocks, exec); break;
            }
            trace.projections += per_iteration;
            trace.iterations = k;
            if (!next.allFinite()) {
                trace.status = Status::diverged_numerically;
                break;
            }
            const double step = (next - x).norm();
            x                 = std::move(next);
            if (stopped(record(k, x), x, step)) {
                trace.status = Status::converged;
                break;
            }
        }
    }

    trace.wall_time_s = std::chrono::duration<double>(clock::now() - start).count();
    if (reference)
        trace.rel_err = (x - *reference).norm() / rel_den;
    result.x = std::move(x);
    return result;
}

struct RateEstimate {
    double rate = 1.0;
    bool contracting = false; ///< rate < 1
    int points = 0;
};

/// exp of the least-squares slope of log ||x_k - reference|| against k, over
/// records with a positive finite distance.  Needs at least three such records.
inline RateEstimate estimate_rate(const IterationTrace& trace)
{
    std::vector<double> ks;
    std::vector<double> logs;
    for (const auto& r : trace.records) {
        if (std::isfinite(r.distance) && r.distance > 0.0) {
            ks.push_back(static_cast<double>(r.k));
            logs.push_back(std::log(r.distance));
        }
    }
    if (ks.size() < 3)
        throw insufficient_data("estimate_rate: need at least 3 iterations with positive distance, got " +
                                std::to_string(ks.size()));
    const double count = static_cast<double>(ks.size());
    const double kbar  = std::accumulate(ks.begin(), ks.end(), 0.0) / count;
    // Offsetting by the first log (not the mean) keeps a constant trace at slope exactly 0.
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < ks.size(); ++i) {
        sxy += (ks[i] - kbar) * (logs[i] - logs[0]);
        sxx += (ks[i] - kbar) * (ks[i] - kbar);
    }
    RateEstimate est;
    est.rate        = std::exp(sxy / sxx);
    est.contracting = est.rate < 1.0;
    est.points      = static_cast<int>(ks.size());
    return est;
}

} // namespace pcrm
