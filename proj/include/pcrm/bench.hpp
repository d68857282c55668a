#pragma once

#include "pcrm/errors.hpp"
#include "pcrm/io.hpp"
#include "pcrm/problem_gen.hpp"
#include "pcrm/solvers.hpp"

#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <ostream>
#include <string>
#include <tuple>
#include <vector>

namespace pcrm {

struct BenchRecord {
    std::string method;
    Index blocks       = 0;
    Index m            = 0;
    Index n            = 0;
    double coherence   = 0.0;
    std::uint64_t seed = 0;
    int workers        = 1;
    int iterations     = 0;
    long long projections = 0;
    double time_s      = 0.0;
    double rel_err     = 0.0;
    bool converged     = false;
};

inline constexpr const char* bench_csv_header =
    "method,blocks,m,n,coherence,seed,workers,iterations,projections,time_s,rel_err,converged";

inline constexpr const char* aggregate_csv_header =
    "method,blocks,m,n,workers,runs,iterations,projections,time_s,rel_err,converged";

namespace detail {

inline std::string format_double(const char* fmt, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, v);
    return buf;
}

} // namespace detail

inline std::string to_csv_row(const BenchRecord& r)
{
    std::string row;
    row += r.method + ',';
    row += std::to_string(r.blocks) + ',';
    row += std::to_string(r.m) + ',';
    row += std::to_string(r.n) + ',';
    row += detail::format_double("%.6g", r.coherence) + ',';
    row += std::to_string(r.seed) + ',';
    row += std::to_string(r.workers) + ',';
    row += std::to_string(r.iterations) + ',';
    row += std::to_string(r.projections) + ',';
    row += detail::format_double("%.6f", r.time_s) + ',';
    row += detail::format_double("%.6e", r.rel_err) + ',';
    row += r.converged ? "true" : "false";
    return row;
}

inline BenchRecord make_record(const ProblemInstance& inst, const SolverConfig& config, const IterationTrace& trace)
{
    BenchRecord r;
    r.method      = std::string(to_string(config.method));
    r.blocks      = static_cast<Index>(inst.block_count());
    r.m           = inst.descriptor.m;
    r.n           = inst.descriptor.n;
    r.coherence   = inst.descriptor.coherence;
    r.seed        = inst.descriptor.seed;
    r.workers     = config.workers;
    r.iterations  = trace.iterations;
    r.projections = trace.projections;
    r.time_s      = trace.wall_time_s;
    r.rel_err     = trace.rel_err;
    r.converged   = trace.status == Status::converged;
    return r;
}

/// Mean of the numeric fields over one (method, blocks, m, n, workers) group.
struct AggregateRecord {
    std::string method;
    Index blocks = 0;
    Index m      = 0;
    Index n      = 0;
    int workers  = 1;
    int runs     = 0;
    double iterations  = 0.0;
    double projections = 0.0;
    double time_s      = 0.0;
    double rel_err     = 0.0;
    bool converged     = true; ///< all runs converged
};

/// Groups in first-appearance order, averaging over coherence and seed.
inline std::vector<AggregateRecord> aggregate(const std::vector<BenchRecord>& records)
{
    using Key = std::tuple<std::string, Index, Index, Index, int>;
    std::map<Key, std::size_t> slot;
    std::vector<AggregateRecord> out;
    for (const auto& r : records) {
        const Key key{r.method, r.blocks, r.m, r.n, r.workers};
        auto [it, inserted] = slot.try_emplace(key, out.size());
        if (inserted) {
            AggregateRecord a;
            a.method  = r.method;
            a.blocks  = r.blocks;
            a.m       = r.m;
            a.n       = r.n;
            a.workers = r.workers;
            out.push_back(a);
        }
        auto& a = out[it->second];
        ++a.runs;
        a.iterations += r.iterations;
        a.projections += static_cast<double>(r.projections);
        a.time_s += r.time_s;
        a.rel_err += r.rel_err;
        a.converged = a.converged && r.converged;
    }
    for (auto& a : out) {
        const double runs = static_cast<double>(a.runs);
        a.iterations /= runs;
        a.projections /= runs;
        a.time_s /= runs;
        a.rel_err /= runs;
    }
    return out;
}

inline std::string to_csv_row(const AggregateRecord& a)
{
    std::string row;
    row += a.method + ',';
    row += std::to_string(a.blocks) + ',';
    row += std::to_string(a.m) + ',';
    row += std::to_string(a.n) + ',';
    row += std::to_string(a.workers) + ',';
    row += std::to_string(a.runs) + ',';
    row += detail::format_double("%.4f", a.iterations) + ',';
    row += detail::format_double("%.4f", a.projections) + ',';
    row += detail::format_double("%.6f", a.time_s) + ',';
    row += detail::format_double("%.6e", a.rel_err) + ',';
    row += a.converged ? "true" : "false";
    return row;
}

struct BenchConfig {
    std::vector<Index> m_values{5000, 7500, 10000, 12500};
    std::vector<Index> n_values{100, 250, 500};
    std::vector<double> coherence_values{0.0, 0.1, 0.2};
    std::vector<Method> methods{Method::crm, Method::pcrm};
    std::vector<std::uint64_t> seeds{1, 2, 3};
    double tolerance   = 1e-5;
    int max_iterations = 10000;
    std::vector<int> workers{1};
    std::string output = "bench.csv";
};

/// Reads a JSON config; absent keys keep their defaults.
///   {"m":[...], "n":[...], "coherence":[...], "methods":["crm","pcrm"], "seeds":[...],
///    "tolerance":1e-5, "max_iterations":10000, "workers":[1,8], "output":"bench.csv"}
inline BenchConfig bench_config_from_json(const io::json& j)
{
    BenchConfig c;
    if (j.contains("m")) c.m_values = j.at("m").get<std::vector<Index>>();
    if (j.contains("n")) c.n_values = j.at("n").get<std::vector<Index>>();
    if (j.contains("coherence")) c.coherence_values = j.at("coherence").get<std::vector<double>>();
    if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("tolerance")) c.tolerance = j.at("tolerance").get<double>();
    if (j.contains("max_iterations")) c.max_iterations = j.at("max_iterations").get<int>();
    if (j.contains("workers")) c.workers = j.at("workers").get<std::vector<int>>();
    if (j.contains("output")) c.output = j.at("output").get<std::string>();
    if (j.contains("methods")) {
        c.methods.clear();
        for (const auto& name : j.at("methods")) {
            const auto m = parse_method(name.get<std::string>());
            if (!m)
                throw error("bench config: unknown method '" + name.get<std::string>() + "'");
            c.methods.push_back(*m);
        }
    }
    return c;
}

inline void validate(const BenchConfig& c)
{
    if (c.m_values.empty() || c.n_values.empty() || c.coherence_values.empty() || c.methods.empty() ||
        c.seeds.empty() || c.workers.empty())
        throw error("bench config: every grid axis must be non-empty");
    for (double coh : c.coherence_values)
        if (!(coh >= 0.0 && coh <= 1.0))
            throw invalid_coherence("bench config: coherence out of [0, 1]");
    for (int w : c.workers)
        if (w < 1)
            throw error("bench config: workers must be at least 1");
    if (!(c.tolerance > 0.0) || c.max_iterations < 1)
        throw error("bench config: tolerance must be positive and max_iterations at least 1");
}

/// Runs every (m, n, c, seed) instance against every method and worker count.
/// CRM is sequential, so it runs once per instance with one worker.  Cells
/// with m <= n are skipped.  `sink` sees each record as soon as it exists and
/// may return false to stop the sweep.  Returns the number of failed cells.
inline int run_bench(const BenchConfig& config, const std::function<bool(const BenchRecord&)>& sink)
{
    validate(config);
    int failures = 0;
    for (Index m : config.m_values) {
        for (Index n : config.n_values) {
            if (m <= n)
                continue;
            for (double coh : config.coherence_values) {
                for (std::uint64_t seed : config.seeds) {
                    const ProblemInstance inst = build_instance(m, n, coh, seed);
                    for (Method method : config.methods) {
                        for (int w : config.workers) {
                            if (method == Method::crm && w != config.workers.front())
                                continue;
                            SolverConfig sc;
                            sc.method           = method;
                            sc.tolerance        = config.tolerance;
                            sc.max_iterations   = config.max_iterations;
                            sc.stop_rule        = StopRule::rel_err_to_known;
                            sc.workers          = method == Method::crm ? 1 : w;
                            sc.record_residuals = false;
                            BenchRecord rec;
                            try {
                                rec = make_record(inst, sc, solve(inst, sc).trace);
                            } catch (const error&) {
                                rec           = make_record(inst, sc, IterationTrace{});
                                rec.converged = false;
                            }
                            if (!rec.converged)
                                ++failures;
                            if (!sink(rec))
                                return failures;
                        }
                    }
                }
            }
        }
    }
    return failures;
}

} // namespace pcrm
