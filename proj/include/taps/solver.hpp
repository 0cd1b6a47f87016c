#pragma once

#include <taps/inner_products.hpp>
#include <taps/problem.hpp>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>

#include <chrono>
#include <optional>
#include <random>

namespace taps
{

template <typename T>
struct SolveState
{
    std::vector<TDField<T>> fields; // aligned with spec.fields
};

template <typename T>
struct StationarityResidual
{
    std::string field;
    std::string dim;
    T value = T(0);
};

template <typename T>
struct SolveReport
{
    bool converged = false;
    int sweeps = 0;
    int nonlinear_iterations = 0;
    std::vector<T> sweep_deltas;
    std::vector<T> nonlinear_deltas;
    std::vector<StationarityResidual<T>> stationarity;
    double wall_seconds = 0;
    std::string message;
};

template <typename T>
MatrixX<T> hadamard_product(const std::vector<MatrixX<T>>& grams, index_t rows, index_t cols)
{
    MatrixX<T> out = MatrixX<T>::Ones(rows, cols);
    for (const auto& g : grams)
        out.array() *= g.array();
    return out;
}

namespace detail
{

// deterministic uniform [-1, 1] independent of distribution implementations
template <typename T>
T uniform_pm1(std::mt19937_64& rng)
{
    return T(2) * (T(rng() >> 11) * T(0x1p-53)) - T(1);
}

} // namespace detail

// alternating subspace iteration on the separated representation: per target
// dimension, each field's factor block solves (sum_t coeff_t C_t kron K_t)
// vec(U) = vec(Q), the C_t being Hadamard products of the other dimensions'
// Gram contractions
template <typename T>
class Solver
{
  public:
    // proximal damping for multi-mode block solves, relative to the RMS scale
    // of the block matrix; leaves fixed points untouched (see solve_subspace)
    static constexpr T proximal_damping = T(1e-5);

    explicit Solver(ProblemSpec<T> spec) : spec_(std::move(spec))
    {
        auto issues = validate(spec_);
        if (!issues.empty())
        {
            std::string msg = "invalid problem spec:";
            for (const auto& s : issues)
                msg += "\n  - " + s;
            throw std::invalid_argument(msg);
        }

        for (const auto& dim : spec_.dims)
        {
            meshes_.push_back(build_mesh(dim));
            tables_.emplace(dim.name,
                            eval_basis(meshes_.back(), dim.basis,
                                       dim.basis.p + spec_.solver.quadrature_increment));
            dmaps_.push_back(make_dirichlet_map(meshes_.back().n_nodes(), dim.dirichlet_nodes));
        }

        term_ops_.resize(spec_.terms.size());
        for (size_t t = 0; t < spec_.terms.size(); t++)
        {
            const auto& term = spec_.terms[t];
            const auto& field = spec_.fields[size_t(spec_.field_index(term.test_field))];
            for (const auto& dname : field.dims)
                term_ops_[t].emplace(dname,
                                     assemble_operator(tables_.at(dname), term.op(dname)));
        }

        loads_.resize(spec_.fields.size());
        for (size_t f = 0; f < spec_.fields.size(); f++)
        {
            auto it = spec_.forcing.find(spec_.fields[f].name);
            if (it == spec_.forcing.end())
                continue;
            for (const auto& term : it->second.terms)
            {
                std::map<std::string, VectorX<T>> per_dim;
                for (const auto& dname : spec_.fields[f].dims)
                {
                    const Factor<T>* factor = term.factor(dname);
                    per_dim.emplace(dname, factor
                                               ? assemble_load(tables_.at(dname), *factor)
                                               : assemble_load(tables_.at(dname)));
                }
                loads_[f].push_back({term.coeff, std::move(per_dim)});
            }
        }

        // dimension sweep order: spatial, then parametric, then temporal
        for (int role = 0; role < 3; role++)
            for (size_t d = 0; d < spec_.dims.size(); d++)
                if (int(spec_.dims[d].role) == role)
                    sweep_order_.push_back(index_t(d));
    }

    const ProblemSpec<T>& spec() const { return spec_; }
    const TableMap<T>& tables() const { return tables_; }
    const std::vector<Mesh1D<T>>& meshes() const { return meshes_; }
    const DirichletMap& dirichlet(index_t dim) const { return dmaps_[size_t(dim)]; }

    std::vector<BasisConfig<T>> bases() const
    {
        std::vector<BasisConfig<T>> out;
        for (const auto& dim : spec_.dims)
            out.push_back(dim.basis);
        return out;
    }

    SolveState<T> init_factors() const { return init_factors(spec_.solver.seed); }

    SolveState<T> init_factors(std::uint64_t seed) const
    {
        std::mt19937_64 rng(seed);
        SolveState<T> state;
        for (const auto& field : spec_.fields)
        {
            TDField<T> td;
            td.name = field.name;
            td.dims = field.dims;
            for (const auto& dname : field.dims)
            {
                const index_t di = spec_.dim_index(dname);
                MatrixX<T> u(meshes_[size_t(di)].n_nodes(), spec_.solver.modes);
                for (index_t m = 0; m < u.cols(); m++)
                    for (index_t i = 0; i < u.rows(); i++)
                        u(i, m) = detail::uniform_pm1<T>(rng);
                for (index_t c : spec_.dims[size_t(di)].dirichlet_nodes)
                    u.row(c).setZero();
                td.factors.push_back(std::move(u));
            }
            normalize_modes(td);
            state.fields.push_back(std::move(td));
        }
        return state;
    }

    // Hadamard product of the non-target Gram contractions of one weak-form
    // term, test factors from its test field, trial factors from its trial
    // field
    MatrixX<T> contract_coefficients(const SolveState<T>& state, size_t term_idx,
                                     const std::string& target_dim) const
    {
        const auto& term = spec_.terms[term_idx];
        const auto& test = state.fields[size_t(spec_.field_index(term.test_field))];
        const auto& trial = state.fields[size_t(spec_.field_index(term.trial_field))];
        MatrixX<T> c = MatrixX<T>::Ones(test.n_modes(), trial.n_modes());
        for (size_t d = 0; d < test.dims.size(); d++)
        {
            if (test.dims[d] == target_dim)
                continue;
            const auto& k = term_ops_[term_idx].at(test.dims[d]).values;
            c.array() *= (test.factors[d].transpose() * k *
                          trial.factors[size_t(trial.dim_index(test.dims[d]))])
                             .array();
        }
        return c;
    }

    // full-height force block Q (n_d x M): separable forcing loads scaled by
    // the other dimensions' factor contractions, minus lagged couplings
    MatrixX<T> assemble_rhs(const SolveState<T>& state, index_t field_idx,
                            const std::string& target_dim) const
    {
        const auto& field = state.fields[size_t(field_idx)];
        const index_t di = spec_.dim_index(target_dim);
        const index_t n = meshes_[size_t(di)].n_nodes();
        const index_t modes = field.n_modes();
        MatrixX<T> q = MatrixX<T>::Zero(n, modes);

        for (const auto& [coeff, per_dim] : loads_[size_t(field_idx)])
        {
            VectorX<T> scale = VectorX<T>::Ones(modes);
            for (size_t d = 0; d < field.dims.size(); d++)
            {
                if (field.dims[d] == target_dim)
                    continue;
                scale.array() *=
                    (field.factors[d].transpose() * per_dim.at(field.dims[d])).array();
            }
            q += coeff * per_dim.at(target_dim) * scale.transpose();
        }

        for (size_t t = 0; t < spec_.terms.size(); t++)
        {
            const auto& term = spec_.terms[t];
            if (term.test_field != spec_.fields[size_t(field_idx)].name ||
                term.trial_field == term.test_field)
                continue;
            const auto& trial = state.fields[size_t(spec_.field_index(term.trial_field))];
            MatrixX<T> c = contract_coefficients(state, t, target_dim);
            const auto& k = term_ops_[t].at(target_dim).values;
            q.noalias() -=
                term.coeff * (k * trial.factors[size_t(trial.dim_index(target_dim))]) *
                c.transpose();
        }
        return q;
    }

    // rebuild the previous-iterate weighted mass matrices used by the
    // linearized reaction terms
    void set_previous_iterate(const SolveState<T>& state)
    {
        nl_mass_.clear();
        for (const auto& nl : spec_.nonlinear)
        {
            const index_t f = spec_.field_index(nl.field);
            if (nl_mass_.count(f))
                continue;
            const auto& field = state.fields[size_t(f)];
            std::map<std::string, std::vector<MatrixX<T>>> per_dim;
            for (size_t d = 0; d < field.dims.size(); d++)
            {
                std::vector<MatrixX<T>> per_mode;
                for (index_t m = 0; m < field.n_modes(); m++)
                {
                    auto w = UnivariateWeight<T>::previous_mode_weight(int(m));
                    w.nodal = field.factors[d].col(m);
                    per_mode.push_back(
                        assemble_operator(tables_.at(field.dims[d]),
                                          OperatorSpec<T>::weighted_mass(w))
                            .values);
                }
                per_dim.emplace(field.dims[d], std::move(per_mode));
            }
            nl_mass_.emplace(f, std::move(per_dim));
        }
    }

    // reduced block system for one (field, dimension) pair:
    // A = sum_t coeff_t C_t (x) K_t over free nodes, b = vec of the reduced RHS
    struct SubspaceSystem
    {
        SparseMatrix<T> a;
        VectorX<T> b;
    };

    SubspaceSystem assemble_subspace(const SolveState<T>& state, index_t field_idx,
                                     const std::string& target_dim) const
    {
        const auto& field = state.fields[size_t(field_idx)];
        const index_t d_global = spec_.dim_index(target_dim);
        const DirichletMap& map = dmaps_[size_t(d_global)];
        const index_t n_free = map.n_free();
        const index_t modes = field.n_modes();
        const index_t size = n_free * modes;

        SparseMatrix<T> a(size, size);
        std::vector<Eigen::Triplet<T>> triplets;
        auto add_kron = [&](T coeff, const MatrixX<T>& c, const MatrixX<T>& k_full,
                            index_t hbw) {
            MatrixX<T> k = apply_dirichlet(k_full, map);
            for (index_t m = 0; m < modes; m++)
                for (index_t mm = 0; mm < modes; mm++)
                {
                    const T cmn = coeff * c(m, mm);
                    if (cmn == T(0))
                        continue;
                    for (index_t i = 0; i < n_free; i++)
                    {
                        const index_t j0 = std::max<index_t>(0, i - hbw);
                        const index_t j1 = std::min(n_free - 1, i + hbw);
                        for (index_t j = j0; j <= j1; j++)
                            if (k(i, j) != T(0))
                                triplets.emplace_back(m * n_free + i, mm * n_free + j,
                                                      cmn * k(i, j));
                    }
                }
        };

        const std::string& fname = spec_.fields[size_t(field_idx)].name;
        for (size_t t = 0; t < spec_.terms.size(); t++)
        {
            const auto& term = spec_.terms[t];
            if (term.test_field != fname || term.trial_field != fname)
                continue;
            MatrixX<T> c = contract_coefficients(state, t, target_dim);
            const auto& op = term_ops_[t].at(target_dim);
            add_kron(term.coeff, c, op.values, op.half_bandwidth);
        }
        for (const auto& nl : spec_.nonlinear)
        {
            if (nl.field != fname)
                continue;
            auto it = nl_mass_.find(field_idx);
            if (it == nl_mass_.end())
                throw std::runtime_error(
                    "nonlinear solve: previous iterate not set for field '" + fname + "'");
            for (index_t p = 0; p < index_t(it->second.at(target_dim).size()); p++)
            {
                MatrixX<T> gamma = MatrixX<T>::Ones(modes, modes);
                for (size_t d = 0; d < field.dims.size(); d++)
                {
                    if (field.dims[d] == target_dim)
                        continue;
                    const auto& mprev = it->second.at(field.dims[d])[size_t(p)];
                    gamma.array() *=
                        (field.factors[d].transpose() * mprev * field.factors[d]).array();
                }
                const auto& mp = it->second.at(target_dim)[size_t(p)];
                add_kron(nl.coeff, gamma, mp, tables_.at(target_dim).band - 1);
            }
        }
        a.setFromTriplets(triplets.begin(), triplets.end());

        MatrixX<T> q_full = assemble_rhs(state, field_idx, target_dim);
        MatrixX<T> q(n_free, modes);
        for (index_t i = 0; i < n_free; i++)
            q.row(i) = q_full.row(map.free_nodes[size_t(i)]);

        return {std::move(a), vec(q)};
    }

    // one factor-block update; returns the block's relative residual measured
    // before the update, so a full sweep reports how far the incoming iterate
    // was from satisfying every block equation.
    //
    // With several modes the block matrix can become numerically singular
    // (redundant modes leave the represented field invariant under mode
    // mixing), so the solve is damped proximally: (A + delta I) x = b + delta
    // x_cur. Fixed points still satisfy A x = b exactly, but the update picks
    // the solution nearest the current factor, which stops mode-mixing drift
    // between equivalent representations.
    T solve_subspace(SolveState<T>& state, index_t field_idx,
                     const std::string& target_dim) const
    {
        auto& field = state.fields[size_t(field_idx)];
        const index_t d_local = field.dim_index(target_dim);
        const index_t d_global = spec_.dim_index(target_dim);
        const DirichletMap& map = dmaps_[size_t(d_global)];
        const index_t n_free = map.n_free();
        const index_t modes = field.n_modes();
        const index_t size = n_free * modes;
        const std::string& fname = spec_.fields[size_t(field_idx)].name;

        SubspaceSystem sys = assemble_subspace(state, field_idx, target_dim);
        const T b_norm = sys.b.norm();

        MatrixX<T> u_red(n_free, modes);
        for (index_t i = 0; i < n_free; i++)
            u_red.row(i) = field.factors[size_t(d_local)].row(map.free_nodes[size_t(i)]);
        const VectorX<T> x_cur = vec(u_red);
        const T pre_res = (sys.a * x_cur - sys.b).norm() / (b_norm > T(0) ? b_norm : T(1));

        VectorX<T> x;
        if (b_norm == T(0))
        {
            // homogeneous block: the exact minimizer is zero, no factorization needed
            x = VectorX<T>::Zero(size);
        }
        else
        {
            SparseMatrix<T> a = sys.a;
            VectorX<T> b = sys.b;
            if (modes > 1)
            {
                const T damping = proximal_damping * sys.a.norm() / std::sqrt(T(size));
                SparseMatrix<T> id(size, size);
                id.setIdentity();
                a = sys.a + damping * id;
                b += damping * x_cur;
            }

            const bool iterative =
                spec_.solver.linear_solver == SolverParams<T>::linear_solver_t::iterative ||
                size > 200000;
            if (iterative)
            {
                Eigen::BiCGSTAB<SparseMatrix<T>, Eigen::DiagonalPreconditioner<T>> solver;
                solver.setTolerance(spec_.solver.iterative_tol);
                solver.setMaxIterations(spec_.solver.iterative_max_iter);
                solver.compute(a);
                x = solver.solve(b);
                if (solver.info() != Eigen::Success)
                    throw std::runtime_error("iterative subspace solve failed in dimension '" +
                                             target_dim + "' of field '" + fname + "'");
            }
            else
            {
                Eigen::SparseLU<SparseMatrix<T>> solver;
                solver.compute(a);
                if (solver.info() != Eigen::Success)
                    throw std::runtime_error("singular subspace system in dimension '" +
                                             target_dim + "' of field '" + fname + "'");
                x = solver.solve(b);
            }

            const T res = (a * x - b).norm() / b.norm();
            const T res_tol = iterative ? T(10) * spec_.solver.iterative_tol : T(1e-10);
            if (res > res_tol)
                throw std::runtime_error(
                    "subspace solve residual " + std::to_string(double(res)) + " exceeds " +
                    std::to_string(double(res_tol)) + " in dimension '" + target_dim +
                    "' of field '" + fname + "'");
        }

        MatrixX<T> u_new = MatrixX<T>::Zero(field.factors[size_t(d_local)].rows(), modes);
        MatrixX<T> x_mat = unvec(x, n_free, modes);
        for (index_t i = 0; i < n_free; i++)
            u_new.row(map.free_nodes[size_t(i)]) = x_mat.row(i);

        field.factors[size_t(d_local)] = std::move(u_new);
        return pre_res;
    }

    // relative residual of the current factor block in its own subspace system:
    // ||A vec(U) - b|| / ||b||  (absolute residual when b = 0)
    T subspace_residual(const SolveState<T>& state, index_t field_idx,
                        const std::string& target_dim) const
    {
        const auto& field = state.fields[size_t(field_idx)];
        const index_t d_local = field.dim_index(target_dim);
        const index_t d_global = spec_.dim_index(target_dim);
        const DirichletMap& map = dmaps_[size_t(d_global)];
        const index_t n_free = map.n_free();
        const index_t modes = field.n_modes();

        SubspaceSystem sys = assemble_subspace(state, field_idx, target_dim);
        MatrixX<T> u_red(n_free, modes);
        for (index_t i = 0; i < n_free; i++)
            u_red.row(i) = field.factors[size_t(d_local)].row(map.free_nodes[size_t(i)]);
        VectorX<T> x = vec(u_red);

        const T b_norm = sys.b.norm();
        return (sys.a * x - sys.b).norm() / (b_norm > T(0) ? b_norm : T(1));
    }

    // one full pass over all dimensions and fields, then mode rebalancing;
    // returns the largest relative Frobenius change across all factors, taken
    // between the normalized states before and after the pass
    T sweep(SolveState<T>& state) const
    {
        std::vector<std::vector<MatrixX<T>>> before(state.fields.size());
        for (size_t f = 0; f < state.fields.size(); f++)
            before[f] = state.fields[f].factors;

        for (index_t d_global : sweep_order_)
        {
            const std::string& dname = spec_.dims[size_t(d_global)].name;
            for (size_t f = 0; f < spec_.fields.size(); f++)
            {
                const auto& fdims = spec_.fields[f].dims;
                if (std::find(fdims.begin(), fdims.end(), dname) == fdims.end())
                    continue;
                solve_subspace(state, index_t(f), dname);
            }
        }
        for (auto& field : state.fields)
            normalize_modes(field);

        T delta = T(0);
        for (size_t f = 0; f < state.fields.size(); f++)
            for (size_t d = 0; d < before[f].size(); d++)
            {
                const T change = (state.fields[f].factors[d] - before[f][d]).norm() /
                                 std::max(before[f][d].norm(), std::numeric_limits<T>::min());
                delta = std::max(delta, change);
            }
        return delta;
    }

    std::vector<StationarityResidual<T>> stationarity(const SolveState<T>& state) const
    {
        std::vector<StationarityResidual<T>> out;
        for (index_t d_global : sweep_order_)
        {
            const std::string& dname = spec_.dims[size_t(d_global)].name;
            for (size_t f = 0; f < spec_.fields.size(); f++)
            {
                const auto& fdims = spec_.fields[f].dims;
                if (std::find(fdims.begin(), fdims.end(), dname) == fdims.end())
                    continue;
                out.push_back(
                    {spec_.fields[f].name, dname, subspace_residual(state, index_t(f), dname)});
            }
        }
        return out;
    }

    std::pair<SolveState<T>, SolveReport<T>> solve(std::optional<SolveState<T>> init = {})
    {
        const auto t0 = std::chrono::steady_clock::now();
        SolveState<T> state = init ? std::move(*init) : init_factors();
        SolveReport<T> report;
        const bool nonlinear = !spec_.nonlinear.empty();
        const int outer = nonlinear ? spec_.solver.max_nonlinear : 1;

        for (int it = 0; it < outer; it++)
        {
            SolveState<T> prev;
            if (nonlinear)
            {
                set_previous_iterate(state);
                prev = state;
            }
            bool inner_converged = false;
            for (int s = 0; s < spec_.solver.max_sweeps; s++)
            {
                T delta = sweep(state);
                report.sweeps++;
                report.sweep_deltas.push_back(delta);
                if (delta <= spec_.solver.tol_subspace)
                {
                    inner_converged = true;
                    break;
                }
            }
            if (!nonlinear)
            {
                report.converged = inner_converged;
                if (!inner_converged)
                    report.message = "subspace iteration not converged after " +
                                     std::to_string(report.sweeps) + " sweeps";
                break;
            }
            report.nonlinear_iterations = it + 1;
            T nl_delta = relative_change(state, prev);
            report.nonlinear_deltas.push_back(nl_delta);
            if (inner_converged && nl_delta <= spec_.solver.tol_nonlinear)
            {
                report.converged = true;
                break;
            }
            if (it + 1 == outer)
                report.message = "fixed-point iteration not converged after " +
                                 std::to_string(it + 1) + " iterations";
        }

        if (nonlinear)
            set_previous_iterate(state); // linearize at the final state
        report.stationarity = stationarity(state);
        report.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return {std::move(state), std::move(report)};
    }

    // max over fields of |a - b| / |b| in L2
    T relative_change(const SolveState<T>& a, const SolveState<T>& b) const
    {
        T worst = T(0);
        for (size_t f = 0; f < a.fields.size(); f++)
        {
            auto [diff_sq, bb] = detail::difference_radicand(tables_, a.fields[f], b.fields[f]);
            worst = std::max(worst, std::sqrt(diff_sq) /
                                        std::max(std::sqrt(std::max(T(0), bb)),
                                                 std::numeric_limits<T>::min()));
        }
        return worst;
    }

  private:
    struct ForcingLoad
    {
        T coeff;
        std::map<std::string, VectorX<T>> per_dim;
    };

    ProblemSpec<T> spec_;
    std::vector<Mesh1D<T>> meshes_;
    TableMap<T> tables_;
    std::vector<DirichletMap> dmaps_;
    std::vector<std::map<std::string, OperatorMatrix1D<T>>> term_ops_;
    std::vector<std::vector<ForcingLoad>> loads_;
    std::map<index_t, std::map<std::string, std::vector<MatrixX<T>>>> nl_mass_;
    std::vector<index_t> sweep_order_;
};

template <typename T>
std::pair<SolveState<T>, SolveReport<T>> solve(const ProblemSpec<T>& spec,
                                               std::optional<SolveState<T>> init = {})
{
    Solver<T> solver(spec);
    return solver.solve(std::move(init));
}

} // namespace taps
