#pragma once

#include <taps/separable.hpp>
#include <taps/shape.hpp>

#include <optional>
#include <stdexcept>

namespace taps
{

enum class OperatorKind
{
    mass,      // integral(N_i N_j w)
    stiffness, // integral(B_i B_j w)
    mixed_nb,  // integral(N_i B_j), test undifferentiated
    mixed_bn   // integral(B_i N_j), transpose of mixed_nb
};

inline std::string to_string(OperatorKind k)
{
    switch (k)
    {
        case OperatorKind::mass: return "mass";
        case OperatorKind::stiffness: return "stiffness";
        case OperatorKind::mixed_nb: return "mixed_nb";
        case OperatorKind::mixed_bn: return "mixed_bn";
    }
    return "?";
}

enum class weight_kind
{
    none,
    coordinate,    // w(x) = x
    indicator,     // w(x) = 1 on [lo, hi], element-aligned
    function,      // closed-form factor
    previous_mode  // w(x) = sum_k N_k(x) nodal[k], rebuilt by the solver
};

template <typename T>
struct UnivariateWeight
{
    weight_kind kind = weight_kind::none;
    T lo = T(0), hi = T(0);
    Factor<T> fn;
    int mode = -1;      // which mode of the previous iterate
    VectorX<T> nodal;   // previous-iterate coefficients, set by the solver

    static UnivariateWeight none_weight() { return {}; }
    static UnivariateWeight coordinate()
    {
        UnivariateWeight w;
        w.kind = weight_kind::coordinate;
        return w;
    }
    static UnivariateWeight indicator(T lo, T hi)
    {
        UnivariateWeight w;
        w.kind = weight_kind::indicator;
        w.lo = lo;
        w.hi = hi;
        return w;
    }
    static UnivariateWeight function(Factor<T> f)
    {
        UnivariateWeight w;
        w.kind = weight_kind::function;
        w.fn = std::move(f);
        return w;
    }
    static UnivariateWeight previous_mode_weight(int mode)
    {
        UnivariateWeight w;
        w.kind = weight_kind::previous_mode;
        w.mode = mode;
        return w;
    }

    // the weight as a closed-form factor, for strong-form manufacture
    Factor<T> as_factor() const
    {
        switch (kind)
        {
            case weight_kind::none: return factors::constant(T(1));
            case weight_kind::coordinate: return factors::affine(T(1), T(0));
            case weight_kind::indicator: return factors::indicator(lo, hi);
            case weight_kind::function: return fn;
            case weight_kind::previous_mode:
                throw std::invalid_argument(
                    "previous_mode weight has no closed form; handled by the nonlinear path");
        }
        return factors::constant(T(1));
    }
};

// one per-dimension operator of a weak-form term
template <typename T>
struct OperatorSpec
{
    OperatorKind kind = OperatorKind::mass;
    UnivariateWeight<T> weight;

    static OperatorSpec mass() { return {OperatorKind::mass, {}}; }
    static OperatorSpec stiffness() { return {OperatorKind::stiffness, {}}; }
    static OperatorSpec mixed_nb() { return {OperatorKind::mixed_nb, {}}; }
    static OperatorSpec mixed_bn() { return {OperatorKind::mixed_bn, {}}; }
    static OperatorSpec weighted_mass(UnivariateWeight<T> w)
    {
        return {OperatorKind::mass, std::move(w)};
    }
    static OperatorSpec weighted_stiffness(UnivariateWeight<T> w)
    {
        return {OperatorKind::stiffness, std::move(w)};
    }

    bool symmetric_kind() const
    {
        return kind == OperatorKind::mass || kind == OperatorKind::stiffness;
    }
};

template <typename T>
struct OperatorMatrix1D
{
    MatrixX<T> values; // n x n, nonzeros within the basis band
    index_t half_bandwidth = 0;
    bool symmetric = false;
};

template <typename T>
using LoadVector1D = VectorX<T>;

namespace detail
{

template <typename T>
VectorX<T> weight_at_points(const ShapeTable<T>& table, const UnivariateWeight<T>& weight)
{
    const index_t nq = table.n_points();
    VectorX<T> w(nq);
    switch (weight.kind)
    {
        case weight_kind::none:
            w.setOnes();
            break;
        case weight_kind::coordinate:
            w = table.points;
            break;
        case weight_kind::indicator:
        {
            // subdomain boundaries must coincide with element boundaries so
            // each element is entirely in or out
            const auto& nodes = table.mesh.nodes;
            const T span = nodes[nodes.size() - 1] - nodes[0];
            for (T b : {weight.lo, weight.hi})
            {
                if (b <= nodes[0] || b >= nodes[nodes.size() - 1])
                    continue;
                T best = span;
                for (index_t i = 0; i < nodes.size(); i++)
                    best = std::min(best, std::abs(nodes[i] - b));
                if (best > T(1e-9) * span)
                    throw std::invalid_argument(
                        "indicator boundary " + std::to_string(double(b)) +
                        " does not align with an element boundary");
            }
            for (index_t e = 0; e < table.mesh.n_elements(); e++)
            {
                T mid = (table.mesh.nodes[e] + table.mesh.nodes[e + 1]) / T(2);
                T val = (mid >= weight.lo && mid <= weight.hi) ? T(1) : T(0);
                for (int q = 0; q < table.points_per_element; q++)
                    w[e * table.points_per_element + q] = val;
            }
            break;
        }
        case weight_kind::function:
            for (index_t q = 0; q < nq; q++)
                w[q] = weight.fn.value(table.points[q]);
            break;
        case weight_kind::previous_mode:
            if (weight.nodal.size() != table.n_nodes())
                throw std::invalid_argument(
                    "previous_mode weight: nodal coefficients not resolved (mode " +
                    std::to_string(weight.mode) + ")");
            w = table.interpolate(weight.nodal);
            break;
    }
    return w;
}

} // namespace detail

template <typename T>
OperatorMatrix1D<T> assemble_operator(const ShapeTable<T>& table, const OperatorSpec<T>& op)
{
    const index_t n = table.n_nodes();
    OperatorMatrix1D<T> out;
    out.values = MatrixX<T>::Zero(n, n);
    out.symmetric = op.symmetric_kind();

    const VectorX<T> w = detail::weight_at_points(table, op.weight);
    const bool test_b = op.kind == OperatorKind::stiffness || op.kind == OperatorKind::mixed_bn;
    const bool trial_b = op.kind == OperatorKind::stiffness || op.kind == OperatorKind::mixed_nb;
    const MatrixX<T>& test = test_b ? table.B : table.N;
    const MatrixX<T>& trial = trial_b ? table.B : table.N;

    for (index_t q = 0; q < table.n_points(); q++)
    {
        const T wq = table.weights[q] * w[q];
        if (wq == T(0))
            continue;
        const index_t f = table.first[q];
        for (index_t i = 0; i < table.band; i++)
        {
            const T ti = wq * test(q, i);
            if (ti == T(0))
                continue;
            for (index_t j = 0; j < table.band; j++)
                out.values(f + i, f + j) += ti * trial(q, j);
        }
    }

    out.half_bandwidth = table.band - 1;
    return out;
}

template <typename T>
LoadVector1D<T> assemble_load(const ShapeTable<T>& table, const Factor<T>& factor)
{
    VectorX<T> out = VectorX<T>::Zero(table.n_nodes());
    for (index_t q = 0; q < table.n_points(); q++)
    {
        const T wq = table.weights[q] * factor.value(table.points[q]);
        out.segment(table.first[q], table.band) += wq * table.N.row(q).transpose();
    }
    return out;
}

// unit load integral(N_i)
template <typename T>
LoadVector1D<T> assemble_load(const ShapeTable<T>& table)
{
    return assemble_load(table, factors::constant(T(1)));
}

// elimination map for homogeneous Dirichlet/initial constraints
struct DirichletMap
{
    std::vector<index_t> free_nodes; // ascending
    index_t n_full = 0;

    index_t n_free() const { return index_t(free_nodes.size()); }
};

inline DirichletMap make_dirichlet_map(index_t n, const std::vector<index_t>& constrained)
{
    std::vector<bool> is_constrained(size_t(n), false);
    for (index_t c : constrained)
    {
        if (c < 0 || c >= n)
            throw std::invalid_argument("dirichlet node " + std::to_string(c) +
                                        " outside [0, " + std::to_string(n - 1) + "]");
        is_constrained[size_t(c)] = true;
    }
    DirichletMap map;
    map.n_full = n;
    for (index_t i = 0; i < n; i++)
        if (!is_constrained[size_t(i)])
            map.free_nodes.push_back(i);
    return map;
}

template <typename T>
MatrixX<T> apply_dirichlet(const MatrixX<T>& full, const DirichletMap& map)
{
    MatrixX<T> out(map.n_free(), map.n_free());
    for (index_t i = 0; i < map.n_free(); i++)
        for (index_t j = 0; j < map.n_free(); j++)
            out(i, j) = full(map.free_nodes[size_t(i)], map.free_nodes[size_t(j)]);
    return out;
}

template <typename T>
VectorX<T> apply_dirichlet(const VectorX<T>& full, const DirichletMap& map)
{
    VectorX<T> out(map.n_free());
    for (index_t i = 0; i < map.n_free(); i++)
        out[i] = full[map.free_nodes[size_t(i)]];
    return out;
}

template <typename T>
VectorX<T> expand_dirichlet(const VectorX<T>& reduced, const DirichletMap& map)
{
    VectorX<T> out = VectorX<T>::Zero(map.n_full);
    for (index_t i = 0; i < map.n_free(); i++)
        out[map.free_nodes[size_t(i)]] = reduced[i];
    return out;
}

} // namespace taps
