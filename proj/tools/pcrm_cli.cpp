// pcrm: generate benchmark instances, run solvers, sweep the benchmark grid
// and report subspace angles.
//
//   pcrm gen     --m 5000 --n 500 --coherence 0.1 --seed 42 --out inst.json
//   pcrm solve   --inst inst.json --method pcrm --workers 8 [--csv results.csv]
//   pcrm bench   [--config grid.json] [--methods crm,pcrm] [--out bench.csv] [--aggregate]
//   pcrm analyze --inst inst.json [--mode angle|regularity] [--samples 10000]
//
// Exit codes: 0 ok, 2 usage or input error, 3 solve hit max iterations,
// 4 numerical breakdown, 5 some bench cell failed, 130 interrupted.
// Data goes to stdout, diagnostics to stderr.

#include "pcrm/pcrm.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

enum ExitCode : int {
    exit_ok          = 0,
    exit_usage       = 2,
    exit_max_iter    = 3,
    exit_breakdown   = 4,
    exit_bench_fail  = 5,
    exit_interrupted = 130,
};

std::atomic<bool> interrupted{false};

extern "C" void on_sigint(int) { interrupted = true; }

struct GenOptions {
    pcrm::Index m = 0;
    pcrm::Index n = 0;
    double coherence   = 0.0;
    std::uint64_t seed = 0;
    std::vector<pcrm::Index> block_rows;
    std::string out;
};

struct SolveOptions {
    std::string inst;
    std::string method = "pcrm";
    int workers        = 1;
    std::string weights;
    double tolerance   = 1e-5;
    int max_iterations = 10000;
    std::string stop   = "auto";
    std::string csv;
    std::string trace;
};

struct BenchOptions {
    std::string config;
    std::optional<std::string> methods;
    std::vector<pcrm::Index> m_values;
    std::vector<pcrm::Index> n_values;
    std::vector<double> coherence;
    std::vector<std::uint64_t> seeds;
    std::vector<int> workers;
    std::optional<double> tolerance;
    std::optional<int> max_iterations;
    std::string out;
    bool aggregate = false;
};

struct AnalyzeOptions {
    std::string inst;
    std::string mode   = "angle";
    int samples        = 10000;
    std::uint64_t seed = 1;
};

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> parts;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, sep))
        if (!item.empty())
            parts.push_back(item);
    return parts;
}

int run_gen(const GenOptions& opt)
{
    if (!(opt.coherence >= 0.0 && opt.coherence <= 1.0)) {
        std::cerr << "gen: --coherence must lie in [0, 1]\n";
        return exit_usage;
    }
    pcrm::ProblemInstance inst;
    if (opt.block_rows.empty()) {
        if (opt.n < 1 || opt.m <= opt.n) {
            std::cerr << "gen: requires m > n >= 1 (or --block-rows for a planted instance)\n";
            return exit_usage;
        }
        inst = pcrm::build_instance(opt.m, opt.n, opt.coherence, opt.seed);
    } else {
        inst = pcrm::build_planted_instance(opt.n, opt.block_rows, opt.coherence, opt.seed);
    }

    auto j            = pcrm::io::to_json(inst.descriptor);
    j["content_hash"] = pcrm::io::hash_hex(pcrm::content_hash(inst));
    std::ofstream out(opt.out);
    if (!out) {
        std::cerr << "gen: cannot write '" << opt.out << "'\n";
        return exit_usage;
    }
    out << j.dump(2) << '\n';
    std::cout << inst.descriptor.block_count << '\n';
    return exit_ok;
}

std::vector<double> parse_weights(const std::string& spec, std::size_t blocks)
{
    if (spec.empty())
        return {};
    if (spec == "uniform")
        return pcrm::uniform_weights(blocks);
    if (spec == "cimmino")
        return pcrm::cimmino_weights(blocks);
    std::vector<double> w;
    for (const auto& part : split(spec, ','))
        w.push_back(std::stod(part));
    return w;
}

void write_trace(const std::string& path, const pcrm::IterationTrace& trace)
{
    std::ofstream out(path);
    out << "k,residual,distance,projections,elapsed_s\n";
    char buf[160];
    for (const auto& r : trace.records) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%lld,%.6f\n", r.k, r.residual, r.distance, r.projections,
                      r.elapsed_s);
        out << buf;
    }
}

void append_csv(const std::string& path, const std::string& row)
{
    const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
    std::ofstream out(path, std::ios::app);
    if (fresh)
        out << pcrm::bench_csv_header << '\n';
    out << row << '\n';
}

int run_solve(const SolveOptions& opt)
{
    const auto method = pcrm::parse_method(opt.method);
    if (!method) {
        std::cerr << "solve: unknown method '" << opt.method << "'\n";
        return exit_usage;
    }
    const pcrm::ProblemInstance inst = pcrm::io::load_instance(opt.inst);

    pcrm::SolverConfig config;
    config.method           = *method;
    config.tolerance        = opt.tolerance;
    config.max_iterations   = opt.max_iterations;
    config.workers          = opt.workers == 0 ? pcrm::max_workers() : opt.workers;
    config.record_residuals = !opt.trace.empty();
    config.weights          = parse_weights(opt.weights, inst.block_count());
    if (!config.weights.empty())
        pcrm::validate_weights(config.weights, inst.block_count());

    if (opt.stop == "auto") {
        config.stop_rule = inst.known_solution ? pcrm::StopRule::rel_err_to_known
                                               : pcrm::StopRule::feasibility_residual;
    } else if (auto rule = pcrm::parse_stop_rule(opt.stop)) {
        config.stop_rule = *rule;
    } else {
        std::cerr << "solve: unknown stop rule '" << opt.stop << "'\n";
        return exit_usage;
    }

    // Without a planted solution, report errors against the exact projection of x0 = 0.
    std::optional<pcrm::Vector> reference = inst.known_solution;
    if (!reference)
        reference = pcrm::project_intersection(inst.blocks(), pcrm::Vector::Zero(inst.ambient_dim));

    pcrm::SolveResult result;
    try {
        result = pcrm::solve(inst, config, std::nullopt, reference);
    } catch (const pcrm::degenerate_system& e) {
        std::cerr << "solve: numerical breakdown: " << e.what() << '\n';
        return exit_breakdown;
    } catch (const pcrm::numerical_breakdown& e) {
        std::cerr << "solve: numerical breakdown: " << e.what() << '\n';
        return exit_breakdown;
    }

    const std::string row = pcrm::to_csv_row(pcrm::make_record(inst, config, result.trace));
    std::cout << pcrm::bench_csv_header << '\n' << row << '\n';
    if (!opt.csv.empty())
        append_csv(opt.csv, row);
    if (!opt.trace.empty())
        write_trace(opt.trace, result.trace);

    std::cerr << "status " << pcrm::to_string(result.trace.status) << ", content hash "
              << pcrm::io::hash_hex(pcrm::content_hash(inst)) << '\n';
    switch (result.trace.status) {
    case pcrm::Status::converged: return exit_ok;
    case pcrm::Status::max_iter: return exit_max_iter;
    case pcrm::Status::diverged_numerically: return exit_breakdown;
    }
    return exit_breakdown;
}

int run_bench(const BenchOptions& opt)
{
    pcrm::BenchConfig config;
    if (!opt.config.empty())
        config = pcrm::bench_config_from_json(pcrm::io::read_json_file(opt.config));
    if (opt.methods) {
        config.methods.clear();
        for (const auto& name : split(*opt.methods, ',')) {
            const auto m = pcrm::parse_method(name);
            if (!m) {
                std::cerr << "bench: unknown method '" << name << "'\n";
                return exit_usage;
            }
            config.methods.push_back(*m);
        }
    }
    if (!opt.m_values.empty()) config.m_values = opt.m_values;
    if (!opt.n_values.empty()) config.n_values = opt.n_values;
    if (!opt.coherence.empty()) config.coherence_values = opt.coherence;
    if (!opt.seeds.empty()) config.seeds = opt.seeds;
    if (!opt.workers.empty()) config.workers = opt.workers;
    if (opt.tolerance) config.tolerance = *opt.tolerance;
    if (opt.max_iterations) config.max_iterations = *opt.max_iterations;
    if (!opt.out.empty()) config.output = opt.out;
    for (auto& w : config.workers)
        if (w == 0)
            w = pcrm::max_workers();

    try {
        pcrm::validate(config);
    } catch (const pcrm::error& e) {
        std::cerr << "bench: " << e.what() << '\n';
        return exit_usage;
    }

    std::ofstream out(config.output);
    if (!out) {
        std::cerr << "bench: cannot write '" << config.output << "'\n";
        return exit_usage;
    }
    out << pcrm::bench_csv_header << '\n' << std::flush;

    std::vector<pcrm::BenchRecord> records;
    std::signal(SIGINT, on_sigint);
    const int failed = pcrm::run_bench(config, [&](const pcrm::BenchRecord& r) {
        out << pcrm::to_csv_row(r) << '\n' << std::flush;
        records.push_back(r);
        std::cerr << pcrm::to_csv_row(r) << '\n';
        return !interrupted.load();
    });
    std::signal(SIGINT, SIG_DFL);

    if (opt.aggregate) {
        std::cout << pcrm::aggregate_csv_header << '\n';
        for (const auto& a : pcrm::aggregate(records))
            std::cout << pcrm::to_csv_row(a) << '\n';
    }
    if (interrupted)
        return exit_interrupted;
    return failed > 0 ? exit_bench_fail : exit_ok;
}

int run_analyze(const AnalyzeOptions& opt)
{
    const pcrm::ProblemInstance inst = pcrm::io::load_instance(opt.inst);
    pcrm::io::json report;
    if (opt.mode == "angle") {
        if (inst.block_count() > 2) {
            std::cerr << "analyze: angle mode needs an instance with at most 2 blocks, got "
                      << inst.block_count() << '\n';
            return exit_usage;
        }
        const auto& U   = inst.subspaces.front();
        const auto& V   = inst.subspaces.back();
        const auto a    = pcrm::angle_report(U, V);
        const auto bound = pcrm::verify_error_bound(U, V, opt.samples, opt.seed);
        report["friedrichs_cosine"]    = a.friedrichs_cosine;
        report["error_bound_constant"] = a.error_bound_constant;
        report["intersection_dim"]     = a.intersection_dim;
        report["principal_cosines"]    = a.principal_cosines;
        report["bound_check"] = {{"samples", bound.samples},
                                 {"violations", bound.violations},
                                 {"worst_ratio", bound.worst_ratio},
                                 {"passed", bound.violations == 0}};
    } else if (opt.mode == "regularity") {
        const double r = pcrm::estimate_regularity(inst, opt.samples, opt.seed);
        report["regularity_constant"] = r;
        report["samples"]             = opt.samples;
        // sqrt(1 - 1/r^2); r only bounds the true constant from below, so this is indicative.
        report["implied_pcrm_rate"] = r > 1.0 ? std::sqrt(1.0 - 1.0 / (r * r)) : 0.0;
    } else {
        std::cerr << "analyze: unknown mode '" << opt.mode << "'\n";
        return exit_usage;
    }
    std::cout << report.dump(2) << '\n';
    return exit_ok;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Circumcentered-reflection and simultaneous-projection solvers for affine intersections"};
    app.require_subcommand(1);

    GenOptions gen;
    auto* gen_cmd = app.add_subcommand("gen", "Write an instance descriptor");
    gen_cmd->add_option("--m", gen.m, "Rows (dense random instance)");
    gen_cmd->add_option("--n", gen.n, "Columns")->required();
    gen_cmd->add_option("--coherence", gen.coherence, "Coherence c in [0, 1]");
    gen_cmd->add_option("--seed", gen.seed, "PRNG seed")->required();
    gen_cmd->add_option("--block-rows", gen.block_rows, "Planted instance with these block row counts")
        ->delimiter(',');
    gen_cmd->add_option("--out", gen.out, "Descriptor path")->required();

    SolveOptions solve;
    auto* solve_cmd = app.add_subcommand("solve", "Run one solver on one instance");
    solve_cmd->add_option("--inst", solve.inst, "Instance JSON (descriptor or explicit)")->required();
    solve_cmd->add_option("--method", solve.method, "fspm | cimmino | crm | pcrm");
    solve_cmd->add_option("--workers", solve.workers, "Reflection workers (0 = all cores)")
        ->check(CLI::NonNegativeNumber);
    solve_cmd->add_option("--weights", solve.weights, "uniform | cimmino | p0,p1,...,pm");
    solve_cmd->add_option("--tol", solve.tolerance, "Stopping tolerance")->check(CLI::PositiveNumber);
    solve_cmd->add_option("--max-iter", solve.max_iterations, "Iteration cap")->check(CLI::PositiveNumber);
    solve_cmd->add_option("--stop", solve.stop, "auto | rel_err | residual | step");
    solve_cmd->add_option("--csv", solve.csv, "Append the record to this CSV");
    solve_cmd->add_option("--trace", solve.trace, "Write the per-iteration trace to this CSV");

    BenchOptions bench;
    auto* bench_cmd = app.add_subcommand("bench", "Sweep the benchmark grid");
    bench_cmd->add_option("--config", bench.config, "Grid config JSON");
    bench_cmd->add_option("--methods", bench.methods, "Comma-separated methods");
    bench_cmd->add_option("--m", bench.m_values, "Row counts")->delimiter(',');
    bench_cmd->add_option("--n", bench.n_values, "Column counts")->delimiter(',');
    bench_cmd->add_option("--coherence", bench.coherence, "Coherence values")->delimiter(',');
    bench_cmd->add_option("--seeds", bench.seeds, "Seeds")->delimiter(',');
    bench_cmd->add_option("--workers", bench.workers, "Worker counts (0 = all cores)")->delimiter(',');
    bench_cmd->add_option("--tol", bench.tolerance, "Stopping tolerance");
    bench_cmd->add_option("--max-iter", bench.max_iterations, "Iteration cap");
    bench_cmd->add_option("--out", bench.out, "Output CSV");
    bench_cmd->add_flag("--aggregate", bench.aggregate, "Print per-(method, blocks, m, n) means to stdout");

    AnalyzeOptions analyze;
    auto* analyze_cmd = app.add_subcommand("analyze", "Angles, error bounds and regularity estimates");
    analyze_cmd->add_option("--inst", analyze.inst, "Instance JSON")->required();
    analyze_cmd->add_option("--mode", analyze.mode, "angle | regularity");
    analyze_cmd->add_option("--samples", analyze.samples, "Sample count")->check(CLI::PositiveNumber);
    analyze_cmd->add_option("--seed", analyze.seed, "Sampling seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_usage;
    }

    try {
        if (*gen_cmd) return run_gen(gen);
        if (*solve_cmd) return run_solve(solve);
        if (*bench_cmd) return run_bench(bench);
        if (*analyze_cmd) return run_analyze(analyze);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_usage;
    }
    return exit_usage;
}
