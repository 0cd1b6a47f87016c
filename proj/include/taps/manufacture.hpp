#pragma once

#include <taps/problem.hpp>

#include <cmath>
#include <functional>
#include <map>

namespace taps
{

namespace detail
{

// rewrite every term's factor along one dimension as a sum of factors
template <typename T>
SeparableFunction<T> apply_along(const SeparableFunction<T>& fn, const std::string& dim,
                                 const std::function<std::vector<Factor<T>>(const Factor<T>&)>& tf)
{
    SeparableFunction<T> out;
    for (const auto& term : fn.terms)
    {
        const Factor<T>* f = term.factor(dim);
        Factor<T> base = f ? *f : factors::constant(T(1));
        for (auto& piece : tf(base))
        {
            SeparableTerm<T> t = term;
            t.factor_by_dim[dim] = std::move(piece);
            out.terms.push_back(std::move(t));
        }
    }
    return out;
}

// strong-form action of one per-dimension operator on the trial factor:
// mass -> w g, mixed_nb -> w g', mixed_bn -> -(w g)', stiffness -> -(w g')'
template <typename T>
std::vector<Factor<T>> strong_apply(const OperatorSpec<T>& op, const Factor<T>& g)
{
    const Factor<T> w = op.weight.as_factor();
    auto negate = [](std::vector<Factor<T>> v) {
        for (auto& f : v)
            f.coeff = -f.coeff;
        return v;
    };
    switch (op.kind)
    {
        case OperatorKind::mass:
            return {w * g};
        case OperatorKind::mixed_nb:
        {
            std::vector<Factor<T>> out;
            for (auto& dg : derivative(g))
                out.push_back(w * dg);
            return out;
        }
        case OperatorKind::mixed_bn:
            return negate(derivative(w * g));
        case OperatorKind::stiffness:
        {
            std::vector<Factor<T>> out;
            for (auto& dg : derivative(g))
                for (auto& ddg : derivative(w * dg))
                {
                    ddg.coeff = -ddg.coeff;
                    out.push_back(std::move(ddg));
                }
            return out;
        }
    }
    return {};
}

// deterministic sample coordinates for the hyperplane checks
template <typename T>
std::vector<T> sample_coords(T lo, T hi)
{
    return {lo + T(0.31) * (hi - lo), lo + T(0.5) * (hi - lo), lo + T(0.77) * (hi - lo)};
}

template <typename T>
T sup_sample(const ProblemSpec<T>& spec, const FieldSpec& field, const SeparableFunction<T>& g)
{
    T sup = T(0);
    for (int pass = 0; pass < 3; pass++)
    {
        std::map<std::string, T> point;
        for (const auto& dname : field.dims)
        {
            const auto& dim = spec.dims[size_t(spec.dim_index(dname))];
            point[dname] = sample_coords(dim.lo, dim.hi)[size_t(pass)];
        }
        sup = std::max(sup, std::abs(g.value(point)));
    }
    return sup;
}

// the exact must vanish on every constrained hyperplane
template <typename T>
void check_constraints(const ProblemSpec<T>& spec, const FieldSpec& field,
                       const SeparableFunction<T>& g)
{
    const T scale = T(1) + sup_sample(spec, field, g);
    for (const auto& dname : field.dims)
    {
        const auto& dim = spec.dims[size_t(spec.dim_index(dname))];
        for (index_t node : dim.dirichlet_nodes)
        {
            const T x_star = dim.lo + (dim.hi - dim.lo) * T(node) / T(dim.n_elements);
            for (int pass = 0; pass < 3; pass++)
            {
                std::map<std::string, T> point;
                for (const auto& other : field.dims)
                {
                    const auto& od = spec.dims[size_t(spec.dim_index(other))];
                    point[other] = sample_coords(od.lo, od.hi)[size_t(pass)];
                }
                point[dname] = x_star;
                if (std::abs(g.value(point)) > T(1e-10) * scale)
                    throw std::invalid_argument(
                        "manufacture: exact of field '" + field.name +
                        "' does not vanish at constrained node " + std::to_string(node) +
                        " of dimension '" + dname + "'");
            }
        }
    }
}

// indicator-weighted stiffness is only consistent with a zero-derivative
// exact at the interior subdomain interfaces (otherwise the true strong form
// carries interface flux terms the separable rhs cannot represent)
template <typename T>
void check_indicator_flux(const ProblemSpec<T>& spec, const WeakFormTerm<T>& term,
                          const SeparableFunction<T>& g)
{
    for (const auto& [dname, op] : term.ops)
    {
        if (op.kind != OperatorKind::stiffness || op.weight.kind != weight_kind::indicator)
            continue;
        const auto& dim = spec.dims[size_t(spec.dim_index(dname))];
        for (T b : {op.weight.lo, op.weight.hi})
        {
            if (b <= dim.lo || b >= dim.hi)
                continue;
            for (const auto& gterm : g.terms)
            {
                const Factor<T>* f = gterm.factor(dname);
                if (!f)
                    continue;
                T dval = T(0), dsup = T(0);
                for (const auto& df : derivative(*f))
                {
                    dval += df.value(b);
                    for (const auto& xs : sample_coords(dim.lo, dim.hi))
                        dsup = std::max(dsup, std::abs(df.value(xs)));
                }
                if (std::abs(dval) > T(1e-8) * (T(1) + dsup))
                    throw std::invalid_argument(
                        "manufacture: exact has nonzero derivative " +
                        std::to_string(double(dval)) + " at indicator boundary " +
                        std::to_string(double(b)) + " of dimension '" + dname + "'");
            }
        }
    }
}

} // namespace detail

// forcing that makes `exact` the solution: every weak-form term's strong
// operator applied symbolically to the exact of its trial field, plus the
// expanded square for quadratic reactions
template <typename T>
std::map<std::string, SeparableFunction<T>> manufacture(
    const ProblemSpec<T>& spec, const std::map<std::string, SeparableFunction<T>>& exact)
{
    for (const auto& field : spec.fields)
    {
        if (!exact.count(field.name))
            throw std::invalid_argument("manufacture: no exact solution for field '" +
                                        field.name + "'");
        for (const auto& term : exact.at(field.name).terms)
            for (const auto& [dname, f] : term.factor_by_dim)
                if (std::find(field.dims.begin(), field.dims.end(), dname) == field.dims.end())
                    throw std::invalid_argument("manufacture: exact of field '" + field.name +
                                                "' uses dimension '" + dname +
                                                "' the field does not span");
    }

    for (const auto& field : spec.fields)
        detail::check_constraints(spec, field, exact.at(field.name));

    std::map<std::string, SeparableFunction<T>> rhs;
    for (const auto& field : spec.fields)
        rhs[field.name] = {};

    for (const auto& term : spec.terms)
    {
        const auto& g = exact.at(term.trial_field);
        detail::check_indicator_flux(spec, term, g);

        SeparableFunction<T> acc = g;
        const auto& test = spec.fields[size_t(spec.field_index(term.test_field))];
        for (const auto& dname : test.dims)
        {
            const auto& op = term.op(dname);
            if (op.kind == OperatorKind::mass && op.weight.kind == weight_kind::none)
                continue;
            acc = detail::apply_along<T>(acc, dname, [&](const Factor<T>& f) {
                return detail::strong_apply(op, f);
            });
        }
        for (auto& t : acc.terms)
        {
            t.coeff *= term.coeff;
            if (t.coeff != T(0))
                rhs[term.test_field].terms.push_back(std::move(t));
        }
    }

    for (const auto& nl : spec.nonlinear)
    {
        const auto& g = exact.at(nl.field);
        SeparableFunction<T> sq = product(g, g);
        for (auto& t : sq.terms)
        {
            t.coeff *= nl.coeff;
            if (t.coeff != T(0))
                rhs[nl.field].terms.push_back(std::move(t));
        }
    }
    return rhs;
}

} // namespace taps
