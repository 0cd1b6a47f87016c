#pragma once

#include <taps/solver.hpp>

namespace taps
{

namespace detail
{

// triplets of coeff * (mats[D-1] kron ... kron mats[0]), dimension 0 fastest
template <typename T>
std::vector<Eigen::Triplet<T>> kron_triplets(const std::vector<MatrixX<T>>& mats, T coeff)
{
    std::vector<Eigen::Triplet<T>> acc{{0, 0, coeff}};
    index_t rows = 1;
    index_t cols = 1;
    for (const auto& k : mats)
    {
        std::vector<Eigen::Triplet<T>> next;
        for (index_t j = 0; j < k.cols(); j++)
            for (index_t i = 0; i < k.rows(); i++)
            {
                if (k(i, j) == T(0))
                    continue;
                for (const auto& t : acc)
                    next.emplace_back(i * rows + t.row(), j * cols + t.col(),
                                      k(i, j) * t.value());
            }
        acc = std::move(next);
        rows *= k.rows();
        cols *= k.cols();
    }
    return acc;
}

// v_new kron acc where v_new indexes a new slowest dimension
template <typename T>
VectorX<T> kron_vec(const VectorX<T>& v_new, const VectorX<T>& acc)
{
    VectorX<T> out(v_new.size() * acc.size());
    for (index_t i = 0; i < v_new.size(); i++)
        out.segment(i * acc.size(), acc.size()) = v_new(i) * acc;
    return out;
}

// y = (mats[D-1] kron ... kron mats[0]) x via repeated axis application;
// each step moves the processed (fastest) axis to the slowest position, so
// the original order is restored after all D steps
template <typename T>
VectorX<T> apply_kron(const std::vector<MatrixX<T>>& mats, VectorX<T> x)
{
    for (const auto& m : mats)
    {
        const index_t rest = x.size() / m.cols();
        Eigen::Map<const MatrixX<T>> view(x.data(), m.cols(), rest);
        MatrixX<T> yt = (m * view).transpose();
        x = Eigen::Map<const VectorX<T>>(yt.data(), yt.size());
    }
    return x;
}

template <typename T>
MatrixX<T> dense_values(const ShapeTable<T>& table)
{
    MatrixX<T> out = MatrixX<T>::Zero(table.n_points(), table.n_nodes());
    for (index_t q = 0; q < table.n_points(); q++)
        for (index_t k = 0; k < table.band; k++)
            out(q, table.first[size_t(q)] + k) = table.N(q, k);
    return out;
}

template <typename T>
VectorX<T> factor_at(const Factor<T>* factor, const VectorX<T>& points)
{
    if (!factor)
        return VectorX<T>::Ones(points.size());
    VectorX<T> out(points.size());
    for (index_t i = 0; i < points.size(); i++)
        out(i) = factor->value(points(i));
    return out;
}

} // namespace detail

// full nodal coefficient vector of a separated field, dimension 0 fastest
template <typename T>
VectorX<T> expand_full(const TDField<T>& field)
{
    index_t total = 1;
    for (const auto& u : field.factors)
        total *= u.rows();
    VectorX<T> out = VectorX<T>::Zero(total);
    for (index_t m = 0; m < field.n_modes(); m++)
    {
        VectorX<T> acc = VectorX<T>::Ones(1);
        for (const auto& u : field.factors)
            acc = detail::kron_vec(VectorX<T>(u.col(m)), acc);
        out += acc;
    }
    return out;
}

// direct Galerkin solve of the full tensor-product system, all fields
// coupled; returns full-grid nodal vectors with zeros at constrained nodes
template <typename T>
std::map<std::string, VectorX<T>> oracle_full_solve(const ProblemSpec<T>& spec,
                                                    index_t max_unknowns = 20000)
{
    if (!spec.nonlinear.empty())
        throw std::invalid_argument("oracle full solve supports linear problems only");
    Solver<T> ws(spec); // reuse validation, meshes, tables and operator assembly

    std::vector<DirichletMap> maps;
    for (size_t d = 0; d < spec.dims.size(); d++)
        maps.push_back(ws.dirichlet(index_t(d)));

    auto free_sizes = [&](const std::vector<std::string>& dims) {
        std::vector<index_t> out;
        for (const auto& dname : dims)
            out.push_back(maps[size_t(spec.dim_index(dname))].n_free());
        return out;
    };
    auto block_size = [&](const std::vector<std::string>& dims) {
        index_t total = 1;
        for (index_t s : free_sizes(dims))
            total *= s;
        return total;
    };

    std::vector<index_t> offsets{0};
    for (const auto& field : spec.fields)
        offsets.push_back(offsets.back() + block_size(field.dims));
    const index_t total = offsets.back();
    if (total > max_unknowns)
        throw std::invalid_argument("oracle full solve limited to " +
                                    std::to_string(max_unknowns) + " unknowns, got " +
                                    std::to_string(total));

    std::vector<Eigen::Triplet<T>> triplets;
    for (size_t t = 0; t < spec.terms.size(); t++)
    {
        const auto& term = spec.terms[t];
        const index_t fi = spec.field_index(term.test_field);
        const index_t gi = spec.field_index(term.trial_field);
        const auto& dims = spec.fields[size_t(fi)].dims;
        std::vector<MatrixX<T>> mats;
        for (const auto& dname : dims)
            mats.push_back(apply_dirichlet(
                assemble_operator(ws.tables().at(dname), term.op(dname)).values,
                maps[size_t(spec.dim_index(dname))]));
        for (auto& trip : detail::kron_triplets(mats, term.coeff))
            triplets.emplace_back(offsets[size_t(fi)] + trip.row(),
                                  offsets[size_t(gi)] + trip.col(), trip.value());
    }
    SparseMatrix<T> a(total, total);
    a.setFromTriplets(triplets.begin(), triplets.end());

    VectorX<T> b = VectorX<T>::Zero(total);
    for (size_t f = 0; f < spec.fields.size(); f++)
    {
        auto it = spec.forcing.find(spec.fields[f].name);
        if (it == spec.forcing.end())
            continue;
        for (const auto& term : it->second.terms)
        {
            VectorX<T> acc = VectorX<T>::Ones(1) * term.coeff;
            for (const auto& dname : spec.fields[f].dims)
            {
                const Factor<T>* factor = term.factor(dname);
                VectorX<T> load = factor ? assemble_load(ws.tables().at(dname), *factor)
                                         : assemble_load(ws.tables().at(dname));
                acc = detail::kron_vec(
                    apply_dirichlet(load, maps[size_t(spec.dim_index(dname))]), acc);
            }
            b.segment(offsets[f], acc.size()) += acc;
        }
    }

    Eigen::SparseLU<SparseMatrix<T>> lu;
    lu.compute(a);
    if (lu.info() != Eigen::Success)
        throw std::runtime_error("oracle full solve: singular system");
    VectorX<T> x = lu.solve(b);

    std::map<std::string, VectorX<T>> out;
    for (size_t f = 0; f < spec.fields.size(); f++)
    {
        const auto& dims = spec.fields[f].dims;
        std::vector<index_t> fs = free_sizes(dims);
        std::vector<index_t> full_stride(dims.size());
        index_t full_total = 1;
        for (size_t d = 0; d < dims.size(); d++)
        {
            full_stride[d] = full_total;
            full_total *= maps[size_t(spec.dim_index(dims[d]))].n_full;
        }
        VectorX<T> full = VectorX<T>::Zero(full_total);
        const index_t n_block = block_size(dims);
        for (index_t lin = 0; lin < n_block; lin++)
        {
            index_t rem = lin;
            index_t idx = 0;
            for (size_t d = 0; d < dims.size(); d++)
            {
                const auto& map = maps[size_t(spec.dim_index(dims[d]))];
                idx += map.free_nodes[size_t(rem % fs[d])] * full_stride[d];
                rem /= fs[d];
            }
            full(idx) = x(offsets[f] + lin);
        }
        out.emplace(spec.fields[f].name, std::move(full));
    }
    return out;
}

// relative difference of separated vs full-grid nodal solutions in the norm
// induced by the tensor-product mass matrix, pooled over fields
template <typename T>
T mass_norm_relative_difference(const ProblemSpec<T>& spec, const SolveState<T>& state,
                                const std::map<std::string, VectorX<T>>& full)
{
    Solver<T> ws(spec);
    T num = T(0);
    T den = T(0);
    for (size_t f = 0; f < spec.fields.size(); f++)
    {
        const auto& field = state.fields[f];
        std::vector<MatrixX<T>> mass;
        for (const auto& dname : field.dims)
            mass.push_back(
                assemble_operator(ws.tables().at(dname), OperatorSpec<T>::mass()).values);
        const VectorX<T>& ref = full.at(field.name);
        VectorX<T> diff = expand_full(field) - ref;
        num += diff.dot(detail::apply_kron(mass, diff));
        den += ref.dot(detail::apply_kron(mass, VectorX<T>(ref)));
    }
    if (den <= T(0))
        throw std::invalid_argument("mass norm difference: reference has zero norm");
    return std::sqrt(std::max(T(0), num) / den);
}

// relative L2 error of full-grid nodal solutions against separable exacts,
// evaluated on the tensor quadrature grid, pooled over fields
template <typename T>
T full_grid_relative_l2_error(const ProblemSpec<T>& spec,
                              const std::map<std::string, VectorX<T>>& fields,
                              const std::map<std::string, SeparableFunction<T>>& exact)
{
    Solver<T> ws(spec);
    T num = T(0);
    T den = T(0);
    for (const auto& field : spec.fields)
    {
        std::vector<MatrixX<T>> n_mats;
        VectorX<T> w = VectorX<T>::Ones(1);
        for (const auto& dname : field.dims)
        {
            const auto& table = ws.tables().at(dname);
            n_mats.push_back(detail::dense_values(table));
            w = detail::kron_vec(table.weights, w);
        }
        VectorX<T> uh = detail::apply_kron(n_mats, fields.at(field.name));

        VectorX<T> g = VectorX<T>::Zero(uh.size());
        for (const auto& term : exact.at(field.name).terms)
        {
            VectorX<T> acc = VectorX<T>::Ones(1) * term.coeff;
            for (const auto& dname : field.dims)
                acc = detail::kron_vec(
                    detail::factor_at(term.factor(dname), ws.tables().at(dname).points),
                    acc);
            g += acc;
        }
        num += ((uh - g).array().square() * w.array()).sum();
        den += (g.array().square() * w.array()).sum();
    }
    if (den <= T(0))
        throw std::invalid_argument("full grid error: exact solution has zero norm");
    return std::sqrt(std::max(T(0), num) / den);
}

// fix some (parametric) dimensions at point values: every surviving weak-form
// term keeps its operators on the remaining dimensions with the fixed-
// dimension weights folded into its coefficient
template <typename T>
ProblemSpec<T> restrict_problem(const ProblemSpec<T>& spec, const std::map<std::string, T>& fixed)
{
    for (const auto& [dname, v] : fixed)
    {
        const index_t d = spec.dim_index(dname);
        if (d < 0)
            throw std::invalid_argument("restrict: unknown dimension '" + dname + "'");
        const auto& dim = spec.dims[size_t(d)];
        if (v < dim.lo || v > dim.hi)
            throw std::invalid_argument("restrict: value outside dimension '" + dname + "'");
    }

    ProblemSpec<T> out;
    out.name = spec.name;
    out.solver = spec.solver;
    out.nonlinear = spec.nonlinear;
    for (const auto& dim : spec.dims)
        if (!fixed.count(dim.name))
            out.dims.push_back(dim);

    for (const auto& field : spec.fields)
    {
        FieldSpec restricted = field;
        restricted.dims.clear();
        for (const auto& dname : field.dims)
            if (!fixed.count(dname))
                restricted.dims.push_back(dname);
        if (restricted.dims.empty())
            throw std::invalid_argument("restrict: field '" + field.name +
                                        "' loses all dimensions");
        out.fields.push_back(std::move(restricted));
    }

    for (const auto& term : spec.terms)
    {
        WeakFormTerm<T> kept = term;
        kept.ops.clear();
        for (const auto& [dname, v] : fixed)
        {
            const OperatorSpec<T> op = term.op(dname);
            if (op.kind != OperatorKind::mass)
                throw std::invalid_argument(
                    "restrict: derivative operator on fixed dimension '" + dname + "'");
            switch (op.weight.kind)
            {
            case weight_kind::none:
                break;
            case weight_kind::coordinate:
                kept.coeff *= v;
                break;
            case weight_kind::indicator:
                kept.coeff *= (v >= op.weight.lo && v <= op.weight.hi) ? T(1) : T(0);
                break;
            case weight_kind::function:
                kept.coeff *= op.weight.fn.value(v);
                break;
            case weight_kind::previous_mode:
                throw std::invalid_argument(
                    "restrict: state-dependent weight on fixed dimension '" + dname + "'");
            }
        }
        if (kept.coeff == T(0))
            continue;
        for (const auto& [dname, op] : term.ops)
            if (!fixed.count(dname))
                kept.ops.emplace(dname, op);
        out.terms.push_back(std::move(kept));
    }

    for (const auto& [fname, fn] : spec.forcing)
    {
        SeparableFunction<T> restricted;
        for (const auto& term : fn.terms)
        {
            SeparableTerm<T> kept;
            kept.coeff = term.coeff;
            for (const auto& [dname, factor] : term.factor_by_dim)
            {
                auto it = fixed.find(dname);
                if (it == fixed.end())
                    kept.factor_by_dim.emplace(dname, factor);
                else
                    kept.coeff *= factor.value(it->second);
            }
            if (kept.coeff != T(0))
                restricted.terms.push_back(std::move(kept));
        }
        out.forcing.emplace(fname, std::move(restricted));
    }
    return out;
}

template <typename T>
SeparableFunction<T> restrict_separable(const SeparableFunction<T>& fn,
                                        const std::map<std::string, T>& fixed)
{
    SeparableFunction<T> out;
    for (const auto& term : fn.terms)
    {
        SeparableTerm<T> kept;
        kept.coeff = term.coeff;
        for (const auto& [dname, factor] : term.factor_by_dim)
        {
            auto it = fixed.find(dname);
            if (it == fixed.end())
                kept.factor_by_dim.emplace(dname, factor);
            else
                kept.coeff *= factor.value(it->second);
        }
        if (kept.coeff != T(0))
            out.terms.push_back(std::move(kept));
    }
    return out;
}

// evaluate the fixed dimensions' factors at their point values and fold the
// per-mode scalars into the first surviving factor block
template <typename T>
TDField<T> restrict_field(const ProblemSpec<T>& spec, const TDField<T>& field,
                          const std::map<std::string, T>& fixed)
{
    TDField<T> out;
    out.name = field.name;
    VectorX<T> scale = VectorX<T>::Ones(field.n_modes());
    for (size_t d = 0; d < field.dims.size(); d++)
    {
        auto it = fixed.find(field.dims[d]);
        if (it == fixed.end())
        {
            out.dims.push_back(field.dims[d]);
            out.factors.push_back(field.factors[d]);
            continue;
        }
        const auto& dim = spec.dims[size_t(spec.dim_index(field.dims[d]))];
        ShapeRow<T> row = shape_row(build_mesh(dim), dim.basis, it->second);
        for (index_t m = 0; m < field.n_modes(); m++)
        {
            T s = T(0);
            for (index_t k = 0; k < row.n.size(); k++)
                s += row.n(k) * field.factors[d](row.first + k, m);
            scale(m) *= s;
        }
    }
    if (out.factors.empty())
        throw std::invalid_argument("restrict: field '" + field.name +
                                    "' loses all dimensions");
    for (index_t m = 0; m < field.n_modes(); m++)
        out.factors[0].col(m) *= scale(m);
    return out;
}

} // namespace taps
