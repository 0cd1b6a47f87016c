#pragma once

#include <taps/assembly.hpp>
#include <taps/separable.hpp>

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace taps
{

// one separable bilinear term of the weak form: coeff * prod_d integral over
// dim d of (test op)(weight)(trial op); dimensions without an entry act as
// plain mass. test_field selects whose equation the term enters, trial_field
// whose factors it multiplies; unequal fields are lagged couplings.
template <typename T>
struct WeakFormTerm
{
    T coeff = T(1);
    std::string test_field;
    std::string trial_field;
    std::map<std::string, OperatorSpec<T>> ops;
    std::string label;

    const OperatorSpec<T>& op(const std::string& dim) const
    {
        static const OperatorSpec<T> default_mass = OperatorSpec<T>::mass();
        auto it = ops.find(dim);
        return it == ops.end() ? default_mass : it->second;
    }
};

enum class nonlinear_kind
{
    quadratic_reaction // u^2, linearized as u_prev * u_next
};

template <typename T>
struct NonlinearTerm
{
    nonlinear_kind kind = nonlinear_kind::quadratic_reaction;
    T coeff = T(1);
    std::string field;
};

struct FieldSpec
{
    std::string name;
    std::vector<std::string> dims;
};

template <typename T>
struct SolverParams
{
    enum class linear_solver_t
    {
        direct,   // sparse LU
        iterative // BiCGSTAB with diagonal preconditioning
    };

    int modes = 8;
    T tol_subspace = T(1e-6);
    int max_sweeps = 200;
    T tol_nonlinear = T(1e-6);
    int max_nonlinear = 50;
    int quadrature_increment = 2; // points per element = p + increment
    linear_solver_t linear_solver = linear_solver_t::direct;
    T iterative_tol = T(1e-10);
    int iterative_max_iter = 5000;
    std::uint64_t seed = 1;
};

template <typename T>
struct ProblemSpec
{
    std::string name;
    std::vector<DimensionSpec<T>> dims;
    std::vector<FieldSpec> fields;
    std::vector<WeakFormTerm<T>> terms;
    std::vector<NonlinearTerm<T>> nonlinear;
    std::map<std::string, SeparableFunction<T>> forcing; // keyed by field
    SolverParams<T> solver;

    index_t dim_index(const std::string& name) const
    {
        for (size_t d = 0; d < dims.size(); d++)
            if (dims[d].name == name)
                return index_t(d);
        return -1;
    }

    index_t field_index(const std::string& name) const
    {
        for (size_t f = 0; f < fields.size(); f++)
            if (fields[f].name == name)
                return index_t(f);
        return -1;
    }
};

// uniform resolution change; end-node constraints are remapped
template <typename T>
void set_resolution(ProblemSpec<T>& spec, int n_elements)
{
    for (auto& dim : spec.dims)
    {
        for (auto& node : dim.dirichlet_nodes)
        {
            if (node == 0)
                continue;
            if (node == index_t(dim.n_elements))
                node = n_elements;
            else
                throw std::invalid_argument(
                    "set_resolution: cannot remap interior constrained node " +
                    std::to_string(node) + " of dimension '" + dim.name + "'");
        }
        dim.n_elements = n_elements;
    }
}

template <typename T>
void set_basis(ProblemSpec<T>& spec, const BasisConfig<T>& basis)
{
    for (auto& dim : spec.dims)
        dim.basis = basis;
}

// structural diagnostics; empty result means the spec is solvable
template <typename T>
std::vector<std::string> validate(const ProblemSpec<T>& spec)
{
    std::vector<std::string> out;
    auto complain = [&](std::string msg) { out.push_back(std::move(msg)); };

    if (spec.dims.empty())
        complain("no dimensions declared");
    if (spec.fields.empty())
        complain("no fields declared");

    std::set<std::string> dim_names;
    for (const auto& dim : spec.dims)
    {
        if (!dim_names.insert(dim.name).second)
            complain("duplicate dimension '" + dim.name + "'");
        if (!(dim.hi > dim.lo))
            complain("dimension '" + dim.name + "': empty interval");
        if (dim.basis.p < 1)
            complain("dimension '" + dim.name + "': order p must be >= 1");
        if (dim.basis.s < dim.basis.p)
            complain("dimension '" + dim.name + "': patch size s < p");
        if (dim.n_elements < dim.basis.p)
            complain("dimension '" + dim.name + "': " + std::to_string(dim.n_elements) +
                     " elements cannot support order " + std::to_string(dim.basis.p));
        for (index_t node : dim.dirichlet_nodes)
            if (node < 0 || node > index_t(dim.n_elements))
                complain("dimension '" + dim.name + "': constrained node " +
                         std::to_string(node) + " out of range");
    }

    std::set<std::string> field_names;
    for (const auto& field : spec.fields)
    {
        if (!field_names.insert(field.name).second)
            complain("duplicate field '" + field.name + "'");
        if (field.dims.empty())
            complain("field '" + field.name + "' spans no dimensions");
        for (const auto& d : field.dims)
            if (!dim_names.count(d))
                complain("field '" + field.name + "' references unknown dimension '" + d + "'");
    }

    for (const auto& [fname, fn] : spec.forcing)
    {
        if (!field_names.count(fname))
        {
            complain("forcing references unknown field '" + fname + "'");
            continue;
        }
        const auto& field = spec.fields[size_t(spec.field_index(fname))];
        for (const auto& term : fn.terms)
            for (const auto& [dname, factor] : term.factor_by_dim)
                if (std::find(field.dims.begin(), field.dims.end(), dname) == field.dims.end())
                    complain("forcing of field '" + fname + "' uses dimension '" + dname +
                             "' the field does not span");
    }

    std::set<std::string> has_coercive_diag;
    std::set<std::string> time_derivative_dims;
    for (size_t t = 0; t < spec.terms.size(); t++)
    {
        const auto& term = spec.terms[t];
        const std::string where = "term " + std::to_string(t) +
                                  (term.label.empty() ? "" : " (" + term.label + ")");
        if (!field_names.count(term.test_field))
        {
            complain(where + ": unknown test field '" + term.test_field + "'");
            continue;
        }
        if (!field_names.count(term.trial_field))
        {
            complain(where + ": unknown trial field '" + term.trial_field + "'");
            continue;
        }
        const auto& test = spec.fields[size_t(spec.field_index(term.test_field))];
        const auto& trial = spec.fields[size_t(spec.field_index(term.trial_field))];
        if (term.test_field != term.trial_field && test.dims != trial.dims)
            complain(where + ": coupled fields span different dimension lists");

        bool coercive = true;
        for (const auto& [dname, op] : term.ops)
        {
            if (std::find(test.dims.begin(), test.dims.end(), dname) == test.dims.end())
                complain(where + ": operator on dimension '" + dname +
                         "' outside the test field's dimensions");
            if (!op.symmetric_kind())
            {
                coercive = false;
                index_t di = spec.dim_index(dname);
                if (di >= 0 && spec.dims[size_t(di)].role == dim_role::temporal)
                    time_derivative_dims.insert(dname);
            }
        }
        if (coercive && term.test_field == term.trial_field && term.coeff != T(0))
            has_coercive_diag.insert(term.test_field);

        // indicator weights must align with element boundaries
        for (const auto& [dname, op] : term.ops)
        {
            if (op.weight.kind != weight_kind::indicator)
                continue;
            index_t di = spec.dim_index(dname);
            if (di < 0)
                continue;
            const auto& dim = spec.dims[size_t(di)];
            for (T b : {op.weight.lo, op.weight.hi})
            {
                if (b <= dim.lo || b >= dim.hi)
                    continue;
                T rel = (b - dim.lo) / (dim.hi - dim.lo) * T(dim.n_elements);
                if (std::abs(rel - std::round(rel)) > T(1e-9) * T(dim.n_elements))
                    complain(where + ": indicator boundary " + std::to_string(double(b)) +
                             " does not align with the mesh of dimension '" + dname + "'");
            }
        }
    }

    for (const auto& field : spec.fields)
        if (field_names.count(field.name) && !has_coercive_diag.count(field.name))
            complain("field '" + field.name +
                     "' has no coercive diagonal term (mass/stiffness in every dimension)");

    for (const auto& dname : time_derivative_dims)
    {
        const auto& dim = spec.dims[size_t(spec.dim_index(dname))];
        bool node0 = false;
        for (index_t n : dim.dirichlet_nodes)
            node0 |= (n == 0);
        if (!node0)
            complain("temporal dimension '" + dname +
                     "' carries a time derivative but does not constrain node 0");
    }

    for (const auto& nl : spec.nonlinear)
        if (!field_names.count(nl.field))
            complain("nonlinear term references unknown field '" + nl.field + "'");

    const auto& sp = spec.solver;
    if (sp.modes < 1)
        complain("solver: modes must be >= 1");
    if (!(sp.tol_subspace > T(0)) || !(sp.tol_nonlinear > T(0)))
        complain("solver: tolerances must be positive");
    if (sp.max_sweeps < 1 || sp.max_nonlinear < 1)
        complain("solver: iteration limits must be >= 1");
    if (sp.quadrature_increment < 1)
        complain("solver: quadrature increment must be >= 1");

    return out;
}

} // namespace taps
