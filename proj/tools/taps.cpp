// taps <mode> --config <path> [--out <dir>] [--seed <u64>] [--threads <k>]
//
// modes: solve (factors + run log), study (convergence CSV), oracle-compare
// (full tensor-product reference comparison), validate (spec diagnostics).
// Exit codes: 0 success, 2 solver non-convergence, 1 any error.

#include <taps/config.hpp>
#include <taps/gallery.hpp>
#include <taps/io.hpp>
#include <taps/manufacture.hpp>
#include <taps/oracle.hpp>
#include <taps/solver.hpp>
#include <taps/study.hpp>

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

namespace
{

using Scalar = double;

nlohmann::json report_of(const taps::SolveReport<Scalar>& report)
{
    nlohmann::json j;
    j["converged"] = report.converged;
    j["sweeps"] = report.sweeps;
    j["nonlinear_iterations"] = report.nonlinear_iterations;
    j["sweep_deltas"] = report.sweep_deltas;
    j["nonlinear_deltas"] = report.nonlinear_deltas;
    j["wall_seconds"] = report.wall_seconds;
    if (!report.message.empty())
        j["message"] = report.message;
    nlohmann::json stationarity = nlohmann::json::array();
    for (const auto& r : report.stationarity)
        stationarity.push_back({{"field", r.field}, {"dim", r.dim}, {"value", r.value}});
    j["stationarity"] = std::move(stationarity);
    return j;
}

void write_report(const std::filesystem::path& dir, const nlohmann::json& report)
{
    taps::write_text_file(dir / "report.json", report.dump(2) + "\n");
}

long long oracle_unknowns(const taps::ProblemSpec<Scalar>& spec)
{
    long long total = 0;
    for (const auto& field : spec.fields)
    {
        long long block = 1;
        for (const auto& dname : field.dims)
        {
            const auto& dim = spec.dims[size_t(spec.dim_index(dname))];
            block *= dim.n_elements + 1 - (long long)(dim.dirichlet_nodes.size());
        }
        total += block;
    }
    return total;
}

int run_solve(taps::RunConfig<Scalar>& config, const std::filesystem::path& out_dir)
{
    if (!config.exact.empty())
        config.problem.forcing = taps::manufacture(config.problem, config.exact);

    taps::Solver<Scalar> solver(config.problem);
    auto [state, report] = solver.solve();

    nlohmann::json j;
    j["config"] = taps::resolved_config_json(config);
    j["result"] = report_of(report);
    j["result"]["dof_equiv"] = taps::equivalent_dof(config.problem);

    nlohmann::json files = nlohmann::json::array();
    for (const auto& field : state.fields)
    {
        const std::string name = "factors-" + field.name + ".taps";
        taps::write_factors(out_dir / name, field);
        files.push_back(name);
    }
    j["result"]["factor_files"] = std::move(files);

    if (!config.exact.empty())
    {
        std::vector<taps::TDField<Scalar>> fields;
        std::vector<taps::SeparableFunction<Scalar>> exacts;
        for (const auto& field : state.fields)
        {
            fields.push_back(field);
            exacts.push_back(config.exact.at(field.name));
        }
        j["result"]["rel_l2_error"] =
            taps::relative_l2_error(solver.tables(), fields, exacts);
    }

    write_report(out_dir, j);
    if (!report.converged)
    {
        std::cerr << "not converged: " << report.message << "\n";
        return 2;
    }
    std::cout << "converged in " << report.sweeps << " sweeps ("
              << report.wall_seconds << " s)\n";
    return 0;
}

int run_study_mode(taps::RunConfig<Scalar>& config, const std::filesystem::path& out_dir)
{
    taps::StudyResult<Scalar> result = taps::run_study(config.study);
    taps::write_study_csv(out_dir / "study.csv", result);

    bool all_converged = true;
    for (const auto& row : result.rows)
        all_converged = all_converged && row.converged;

    nlohmann::json j;
    j["config"] = taps::resolved_config_json(config);
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : result.rows)
    {
        nlohmann::json r;
        r["preset"] = row.preset;
        r["p"] = row.p;
        r["s"] = row.s;
        r["a"] = row.a;
        r["M"] = row.modes;
        r["n"] = row.n;
        r["dof_equiv"] = row.dof_equiv;
        r["rel_l2_error"] = row.rel_l2_error;
        if (row.exact_flag)
            r["rate"] = "exact";
        else if (row.rate_fitted)
            r["rate"] = row.rate;
        else
            r["rate"] = nullptr;
        r["wall_seconds"] = row.wall_seconds;
        r["converged"] = row.converged;
        rows.push_back(std::move(r));
    }
    j["result"] = {{"rows", std::move(rows)}, {"all_converged", all_converged}};
    write_report(out_dir, j);

    std::cout << taps::study_csv(result);
    if (!all_converged)
    {
        std::cerr << "one or more study cells did not converge\n";
        return 2;
    }
    return 0;
}

int run_oracle_compare(taps::RunConfig<Scalar>& config, const std::filesystem::path& out_dir)
{
    if (!config.exact.empty())
        config.problem.forcing = taps::manufacture(config.problem, config.exact);

    taps::Solver<Scalar> solver(config.problem);
    auto t0 = std::chrono::steady_clock::now();
    auto [state, report] = solver.solve();
    auto t1 = std::chrono::steady_clock::now();
    auto full = taps::oracle_full_solve(config.problem);
    const double oracle_seconds = std::chrono::duration<double>(
                                      std::chrono::steady_clock::now() - t1)
                                      .count();
    (void)t0;
    const Scalar difference =
        taps::mass_norm_relative_difference(config.problem, state, full);

    const auto& dim0 = config.problem.dims.front();
    std::ostringstream csv;
    csv << "preset,p,s,a,M,n,unknowns,mass_rel_difference,taps_seconds,oracle_seconds,"
           "converged\n";
    csv << config.problem.name << "," << dim0.basis.p << "," << dim0.basis.s << ","
        << taps::detail::format_g17(double(dim0.basis.a)) << ","
        << config.problem.solver.modes << "," << dim0.n_elements << ","
        << oracle_unknowns(config.problem) << ","
        << taps::detail::format_g17(double(difference)) << ","
        << taps::detail::format_g17(report.wall_seconds) << ","
        << taps::detail::format_g17(oracle_seconds) << ","
        << (report.converged ? "true" : "false") << "\n";
    taps::write_text_file(out_dir / "oracle_compare.csv", csv.str());

    nlohmann::json j;
    j["config"] = taps::resolved_config_json(config);
    j["result"] = report_of(report);
    j["result"]["mass_rel_difference"] = difference;
    j["result"]["oracle_unknowns"] = oracle_unknowns(config.problem);
    j["result"]["oracle_seconds"] = oracle_seconds;
    write_report(out_dir, j);

    std::cout << csv.str();
    return report.converged ? 0 : 2;
}

int run_validate(const taps::RunConfig<Scalar>& config)
{
    const auto issues = taps::validate(config.problem);
    if (issues.empty())
    {
        std::cout << "ok: spec '" << config.problem.name << "' is solvable\n";
        return 0;
    }
    for (const auto& issue : issues)
        std::cerr << "invalid: " << issue << "\n";
    return 1;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"separated-representation space-parameter-time PDE solver"};
    app.name("taps");
    std::string mode_arg, config_path, out_arg;
    std::uint64_t seed_arg = 0;
    int threads_arg = 0;
    app.add_option("mode", mode_arg, "solve | study | oracle-compare | validate")
        ->required()
        ->check(CLI::IsMember({"solve", "study", "oracle-compare", "validate"}));
    app.add_option("--config", config_path, "configuration file (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    auto* out_opt = app.add_option("--out", out_arg, "output directory");
    auto* seed_opt = app.add_option("--seed", seed_arg, "seed override");
    auto* threads_opt =
        app.add_option("--threads", threads_arg, "worker thread cap")->check(CLI::Range(1, 1024));

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::CallForHelp& e)
    {
        return app.exit(e);
    }
    catch (const CLI::ParseError& e)
    {
        app.exit(e);
        return 1;
    }

    try
    {
        taps::RunConfig<Scalar> config = taps::parse_config<Scalar>(config_path);

        if (taps::to_string(config.mode) != mode_arg)
            throw std::invalid_argument("mode '" + mode_arg +
                                        "' does not match config mode '" +
                                        taps::to_string(config.mode) + "'");

        if (seed_opt->count() > 0)
        {
            config.problem.solver.seed = seed_arg;
            if (!config.study_seeds_given)
                config.study.seeds = {seed_arg};
            config.study.base.solver.seed = seed_arg;
        }

        if (threads_opt->count() > 0)
        {
            config.threads = threads_arg;
        }
        else if (const char* env = std::getenv("TAPS_THREADS"))
        {
            char* end = nullptr;
            long v = std::strtol(env, &end, 10);
            if (end == env || *end != '\0' || v < 1)
                throw std::invalid_argument("TAPS_THREADS must be a positive integer, got '" +
                                            std::string(env) + "'");
            config.threads = int(v);
        }
        config.study.threads = config.threads;
        Eigen::setNbThreads(config.threads);

        if (out_opt->count() > 0)
            config.output_dir = out_arg;
        const std::filesystem::path out_dir(config.output_dir);
        if (config.mode != taps::RunMode::validate)
            std::filesystem::create_directories(out_dir);

        switch (config.mode)
        {
        case taps::RunMode::solve:
            return run_solve(config, out_dir);
        case taps::RunMode::study:
            return run_study_mode(config, out_dir);
        case taps::RunMode::oracle_compare:
            return run_oracle_compare(config, out_dir);
        case taps::RunMode::validate:
            return run_validate(config);
        }
        return 1;
    }
    catch (const std::exception& e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
