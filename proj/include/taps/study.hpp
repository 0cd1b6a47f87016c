#pragma once

#include <taps/manufacture.hpp>
#include <taps/oracle.hpp>
#include <taps/solver.hpp>

#include <cmath>
#include <mutex>
#include <thread>

namespace taps
{

template <typename T>
struct HyperPoint
{
    int p = 1;
    int s = 1;
    T a = T(0); // dilation; <= 0 means element size
};

template <typename T>
struct StudyPlan
{
    ProblemSpec<T> base;
    std::map<std::string, SeparableFunction<T>> exact;
    std::vector<int> levels;           // n_elements per level, strictly increasing
    std::vector<HyperPoint<T>> hypers; // one rate fit per entry
    int modes = 16;
    std::vector<std::uint64_t> seeds{1}; // best (lowest-error) run is reported
    std::string label;                   // table name; defaults to base.name
    int threads = 1;                     // concurrent (hyper, level) cells
};

template <typename T>
struct StudyRow
{
    std::string preset;
    int p = 1;
    int s = 1;
    T a = T(0);
    int modes = 0;
    int n = 0;
    long long dof_equiv = 0; // full tensor-product unknowns the cell stands in for
    T rel_l2_error = T(0);
    T rate = std::numeric_limits<T>::quiet_NaN(); // per hyperparameter set
    bool rate_fitted = false;
    bool exact_flag = false; // exactly representable: rate fit skipped
    double wall_seconds = 0;
    bool converged = false;
};

template <typename T>
struct StudyResult
{
    std::vector<StudyRow<T>> rows;
};

// least-squares slope of log(error) against log(h), h proportional to 1/n;
// non-finite and non-positive errors are excluded
template <typename T>
T fit_rate(const std::vector<T>& errors, const std::vector<T>& ns)
{
    if (errors.size() != ns.size())
        throw std::invalid_argument("fit_rate: size mismatch");
    std::vector<T> x, y;
    for (size_t i = 0; i < errors.size(); i++)
    {
        if (!std::isfinite(double(errors[i])) || errors[i] <= T(0) || ns[i] <= T(0))
            continue;
        x.push_back(std::log(T(1) / ns[i]));
        y.push_back(std::log(errors[i]));
    }
    if (x.size() < 2)
        throw std::invalid_argument("fit_rate: fewer than 2 usable points");
    T mx = T(0), my = T(0);
    for (size_t i = 0; i < x.size(); i++)
    {
        mx += x[i];
        my += y[i];
    }
    mx /= T(x.size());
    my /= T(x.size());
    T sxy = T(0), sxx = T(0);
    for (size_t i = 0; i < x.size(); i++)
    {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxy / sxx;
}

template <typename T>
long long equivalent_dof(const ProblemSpec<T>& spec)
{
    long long nodes = 1;
    for (const auto& dim : spec.dims)
        nodes *= dim.n_elements + 1;
    return nodes * (long long)(spec.fields.size());
}

namespace detail
{

template <typename T>
StudyRow<T> run_study_cell(const StudyPlan<T>& plan, const HyperPoint<T>& hyper, int n,
                           const std::string& label)
{
    ProblemSpec<T> spec = plan.base;
    set_resolution(spec, n);
    set_basis(spec, BasisConfig<T>{hyper.p, hyper.s, hyper.a});
    spec.solver.modes = plan.modes;
    spec.forcing = manufacture(spec, plan.exact);

    StudyRow<T> row;
    row.preset = label;
    row.p = hyper.p;
    row.s = hyper.s;
    row.a = hyper.a;
    row.modes = plan.modes;
    row.n = n;
    row.dof_equiv = equivalent_dof(spec);

    bool first = true;
    for (std::uint64_t seed : plan.seeds)
    {
        spec.solver.seed = seed;
        Solver<T> solver(spec);
        auto [state, report] = solver.solve();
        std::vector<TDField<T>> fields;
        std::vector<SeparableFunction<T>> exacts;
        for (const auto& field : spec.fields)
        {
            fields.push_back(state.fields[size_t(spec.field_index(field.name))]);
            exacts.push_back(plan.exact.at(field.name));
        }
        T err = relative_l2_error(solver.tables(), fields, exacts);
        if (first || err < row.rel_l2_error)
        {
            row.rel_l2_error = err;
            row.wall_seconds = report.wall_seconds;
            row.converged = report.converged;
            first = false;
        }
    }
    return row;
}

} // namespace detail

// one manufactured-solution convergence table: for every hyperparameter set
// and refinement level, manufacture the forcing, solve, and record the
// relative L2 error; a rate is fitted per hyperparameter set over the last
// max(2, L-1) levels unless the exact solution is already representable.
// Cells run on plan.threads workers; aggregation stays deterministic.
template <typename T>
StudyResult<T> run_study(const StudyPlan<T>& plan)
{
    if (plan.levels.size() < 2)
        throw std::invalid_argument("study needs >= 2 refinement levels");
    for (size_t i = 1; i < plan.levels.size(); i++)
        if (plan.levels[i] <= plan.levels[i - 1])
            throw std::invalid_argument("study levels must be strictly increasing");
    if (plan.seeds.empty())
        throw std::invalid_argument("study needs at least one seed");
    std::vector<HyperPoint<T>> hypers = plan.hypers;
    if (hypers.empty())
        hypers.push_back({});
    const std::string label = plan.label.empty() ? plan.base.name : plan.label;
    const size_t n_levels = plan.levels.size();
    const size_t n_cells = hypers.size() * n_levels;

    std::vector<StudyRow<T>> rows(n_cells);
    const int workers = std::max(1, std::min<int>(plan.threads, int(n_cells)));
    std::mutex mutex;
    size_t next = 0;
    std::exception_ptr failure;
    auto work = [&]() {
        for (;;)
        {
            size_t cell;
            {
                std::lock_guard<std::mutex> lock(mutex);
                if (failure || next >= n_cells)
                    return;
                cell = next++;
            }
            try
            {
                StudyRow<T> row = detail::run_study_cell(
                    plan, hypers[cell / n_levels], plan.levels[cell % n_levels], label);
                std::lock_guard<std::mutex> lock(mutex);
                rows[cell] = std::move(row);
            }
            catch (...)
            {
                std::lock_guard<std::mutex> lock(mutex);
                if (!failure)
                    failure = std::current_exception();
                return;
            }
        }
    };
    if (workers == 1)
    {
        work();
    }
    else
    {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; w++)
            pool.emplace_back(work);
        for (auto& t : pool)
            t.join();
    }
    if (failure)
        std::rethrow_exception(failure);

    StudyResult<T> result;
    for (size_t h = 0; h < hypers.size(); h++)
    {
        auto* group = &rows[h * n_levels];
        bool representable = true;
        for (size_t i = 0; i < n_levels; i++)
            representable = representable && group[i].rel_l2_error <= T(1e-8);
        if (representable)
        {
            for (size_t i = 0; i < n_levels; i++)
                group[i].exact_flag = true;
        }
        else
        {
            const size_t tail = std::min(n_levels, std::max<size_t>(2, n_levels - 1));
            std::vector<T> errs, ns;
            for (size_t i = n_levels - tail; i < n_levels; i++)
            {
                errs.push_back(group[i].rel_l2_error);
                ns.push_back(T(group[i].n));
            }
            try
            {
                T rate = fit_rate(errs, ns);
                for (size_t i = 0; i < n_levels; i++)
                {
                    group[i].rate = rate;
                    group[i].rate_fitted = true;
                }
            }
            catch (const std::invalid_argument&)
            {
                // not enough usable points; rows keep an unfitted rate
            }
        }
        for (size_t i = 0; i < n_levels; i++)
            result.rows.push_back(std::move(group[i]));
    }
    return result;
}

} // namespace taps
