#pragma once

#include <taps/assembly.hpp>
#include <taps/separable.hpp>
#include <taps/td_field.hpp>

#include <map>
#include <stdexcept>

namespace taps
{

template <typename T>
using TableMap = std::map<std::string, ShapeTable<T>>;

namespace detail
{

template <typename T>
const ShapeTable<T>& table_for(const TableMap<T>& tables, const std::string& dim)
{
    auto it = tables.find(dim);
    if (it == tables.end())
        throw std::invalid_argument("no quadrature table for dimension '" + dim + "'");
    return it->second;
}

// quadrature values of one exact term's factor along a dimension (constant 1
// when the term does not involve it)
template <typename T>
VectorX<T> term_values(const ShapeTable<T>& table, const SeparableTerm<T>& term,
                       const std::string& dim)
{
    const Factor<T>* f = term.factor(dim);
    if (!f)
        return VectorX<T>::Ones(table.n_points());
    VectorX<T> out(table.n_points());
    for (index_t q = 0; q < table.n_points(); q++)
        out[q] = f->value(table.points[q]);
    return out;
}

} // namespace detail

// all L2 pairings reduce to per-dimension contractions of quadrature values;
// the full tensor grid is never formed

template <typename T>
T l2_inner(const TableMap<T>& tables, const TDField<T>& a, const TDField<T>& b)
{
    if (a.dims != b.dims)
        throw std::invalid_argument("l2_inner: fields '" + a.name + "' and '" + b.name +
                                    "' span different dimensions");
    MatrixX<T> hadamard = MatrixX<T>::Ones(a.n_modes(), b.n_modes());
    for (size_t d = 0; d < a.dims.size(); d++)
    {
        const auto& table = detail::table_for(tables, a.dims[d]);
        MatrixX<T> va = table.interpolate_columns(a.factors[d]);
        MatrixX<T> vb = table.interpolate_columns(b.factors[d]);
        hadamard.array() *=
            (va.transpose() * table.weights.asDiagonal() * vb).array();
    }
    return hadamard.sum();
}

template <typename T>
T l2_inner(const TableMap<T>& tables, const TDField<T>& a, const SeparableFunction<T>& e)
{
    T total = T(0);
    for (const auto& term : e.terms)
    {
        VectorX<T> per_mode = VectorX<T>::Ones(a.n_modes());
        for (size_t d = 0; d < a.dims.size(); d++)
        {
            const auto& table = detail::table_for(tables, a.dims[d]);
            VectorX<T> fv = detail::term_values(table, term, a.dims[d]);
            MatrixX<T> va = table.interpolate_columns(a.factors[d]);
            per_mode.array() *=
                (va.transpose() * (table.weights.cwiseProduct(fv))).array();
        }
        total += term.coeff * per_mode.sum();
    }
    return total;
}

template <typename T>
T l2_inner(const TableMap<T>& tables, const SeparableFunction<T>& a,
           const SeparableFunction<T>& b, const std::vector<std::string>& dims)
{
    T total = T(0);
    for (const auto& ta : a.terms)
        for (const auto& tb : b.terms)
        {
            T prod = ta.coeff * tb.coeff;
            for (const auto& dim : dims)
            {
                const auto& table = detail::table_for(tables, dim);
                VectorX<T> va = detail::term_values(table, ta, dim);
                VectorX<T> vb = detail::term_values(table, tb, dim);
                prod *= va.dot(table.weights.cwiseProduct(vb));
            }
            total += prod;
        }
    return total;
}

template <typename T>
T l2_norm(const TableMap<T>& tables, const TDField<T>& a)
{
    return std::sqrt(std::max(T(0), l2_inner(tables, a, a)));
}

template <typename T>
T l2_norm(const TableMap<T>& tables, const SeparableFunction<T>& e,
          const std::vector<std::string>& dims)
{
    return std::sqrt(std::max(T(0), l2_inner(tables, e, e, dims)));
}

namespace detail
{

// squared L2 norm of the CP tensor whose per-dimension sqrt(w)-scaled
// quadrature values are the columns of scaled[d] (all columns summed), plus
// the squared norm of the trailing s - split columns alone. Computed via
// per-dimension thin QR and a small CP core: the squared norm is then a sum
// of squares, so near-cancelling column groups come out at roundoff instead
// of the sqrt(eps) floor the naive Gram expansion hits; falls back to a
// compensated Gram sum when the core would be too large.
template <typename T>
std::pair<T, T> cp_radicand(const std::vector<MatrixX<T>>& scaled, index_t split)
{
    const size_t d_count = scaled.size();
    const index_t s = scaled[0].cols();

    size_t core_size = 1;
    bool use_qr = true;
    std::vector<index_t> k(d_count);
    for (size_t d = 0; d < d_count; d++)
    {
        k[d] = std::min<index_t>(scaled[d].rows(), s);
        core_size *= size_t(k[d]);
        if (core_size > size_t(1) << 22)
        {
            use_qr = false;
            break;
        }
    }

    T radicand, tail_sq;
    if (use_qr)
    {
        std::vector<MatrixX<T>> r_fac(d_count);
        for (size_t d = 0; d < d_count; d++)
        {
            Eigen::HouseholderQR<MatrixX<T>> qr(scaled[d]);
            r_fac[d] = qr.matrixQR()
                           .topRows(k[d])
                           .template triangularView<Eigen::Upper>();
        }
        VectorX<T> core = VectorX<T>::Zero(index_t(core_size));
        VectorX<T> cur, next;
        for (index_t col = 0; col < s; col++)
        {
            cur = r_fac[0].col(col);
            for (size_t d = 1; d < d_count; d++)
            {
                next.resize(cur.size() * k[d]);
                for (index_t i = 0; i < cur.size(); i++)
                    next.segment(i * k[d], k[d]) = cur[i] * r_fac[d].col(col);
                cur.swap(next);
            }
            core += cur;
        }
        radicand = core.squaredNorm();

        long double ee = 0;
        for (index_t r1 = split; r1 < s; r1++)
            for (index_t r2 = split; r2 < s; r2++)
            {
                long double prod = 1;
                for (size_t d = 0; d < d_count; d++)
                    prod *= (long double)(r_fac[d].col(r1).dot(r_fac[d].col(r2)));
                ee += prod;
            }
        tail_sq = T(ee);
    }
    else
    {
        std::vector<MatrixX<T>> gram(d_count);
        for (size_t d = 0; d < d_count; d++)
            gram[d] = scaled[d].transpose() * scaled[d];
        long double sum = 0, comp = 0, ee = 0;
        for (index_t i = 0; i < s; i++)
            for (index_t j = 0; j < s; j++)
            {
                long double prod = 1;
                for (size_t d = 0; d < d_count; d++)
                    prod *= (long double)gram[d](i, j);
                long double y = prod - comp;
                long double t = sum + y;
                comp = (t - sum) - y;
                sum = t;
                if (i >= split && j >= split)
                    ee += prod;
            }
        radicand = T(sum);
        tail_sq = T(ee);
    }

    if (radicand < T(0))
    {
        if (radicand < T(-1e-12))
            throw std::runtime_error("cp_radicand: radicand " +
                                     std::to_string(double(radicand)) + " below -1e-12");
        radicand = T(0);
    }
    return {radicand, tail_sq};
}

// |approx - exact|^2 and |exact|^2 for one field: the exact terms' values
// join the mode values as extra columns, with their coefficients negated and
// folded into the first dimension
template <typename T>
std::pair<T, T> error_radicand(const TableMap<T>& tables, const TDField<T>& approx,
                               const SeparableFunction<T>& exact)
{
    const index_t m_modes = approx.n_modes();
    const index_t n_terms = index_t(exact.terms.size());
    const index_t s = m_modes + n_terms;
    const size_t d_count = approx.dims.size();

    std::vector<MatrixX<T>> scaled(d_count); // sqrt(w) .* [N U, exact values]
    for (size_t d = 0; d < d_count; d++)
    {
        const auto& table = table_for(tables, approx.dims[d]);
        VectorX<T> root_w = table.weights.cwiseSqrt();
        MatrixX<T> a(table.n_points(), s);
        a.leftCols(m_modes) = table.interpolate_columns(approx.factors[d]);
        for (index_t r = 0; r < n_terms; r++)
            a.col(m_modes + r) = term_values(table, exact.terms[size_t(r)], approx.dims[d]);
        a.array().colwise() *= root_w.array();
        scaled[d] = std::move(a);
    }
    for (index_t r = 0; r < n_terms; r++)
        scaled[0].col(m_modes + r) *= -exact.terms[size_t(r)].coeff;

    return cp_radicand(scaled, m_modes);
}

// |a - b|^2 and |b|^2 for two fields on the same dimensions, with b's modes
// entering negated; resolves relative differences far below the sqrt(eps)
// floor of the naive |a|^2 - 2<a,b> + |b|^2 expansion
template <typename T>
std::pair<T, T> difference_radicand(const TableMap<T>& tables, const TDField<T>& a,
                                    const TDField<T>& b)
{
    if (a.dims != b.dims)
        throw std::invalid_argument("difference_radicand: fields '" + a.name + "' and '" +
                                    b.name + "' span different dimensions");
    const index_t ma = a.n_modes();
    const index_t mb = b.n_modes();
    const size_t d_count = a.dims.size();

    std::vector<MatrixX<T>> scaled(d_count);
    for (size_t d = 0; d < d_count; d++)
    {
        const auto& table = table_for(tables, a.dims[d]);
        VectorX<T> root_w = table.weights.cwiseSqrt();
        MatrixX<T> m(table.n_points(), ma + mb);
        m.leftCols(ma) = table.interpolate_columns(a.factors[d]);
        m.rightCols(mb) = table.interpolate_columns(b.factors[d]);
        m.array().colwise() *= root_w.array();
        scaled[d] = std::move(m);
    }
    scaled[0].rightCols(mb) *= T(-1);

    return cp_radicand(scaled, ma);
}

} // namespace detail

template <typename T>
T relative_l2_error(const TableMap<T>& tables, const TDField<T>& approx,
                    const SeparableFunction<T>& exact)
{
    auto [radicand, exact_sq] = detail::error_radicand(tables, approx, exact);
    if (!(exact_sq > T(0)))
        throw std::invalid_argument("relative_l2_error: exact solution has zero L2 norm");
    return std::sqrt(radicand / exact_sq);
}

// multi-field variant: vector L2 norm over all fields
template <typename T>
T relative_l2_error(const TableMap<T>& tables, const std::vector<TDField<T>>& approx,
                    const std::vector<SeparableFunction<T>>& exact)
{
    if (approx.size() != exact.size())
        throw std::invalid_argument("relative_l2_error: " + std::to_string(approx.size()) +
                                    " fields vs " + std::to_string(exact.size()) + " exacts");
    T radicand = T(0), exact_sq = T(0);
    for (size_t f = 0; f < approx.size(); f++)
    {
        auto [r, e] = detail::error_radicand(tables, approx[f], exact[f]);
        radicand += r;
        exact_sq += e;
    }
    if (!(exact_sq > T(0)))
        throw std::invalid_argument("relative_l2_error: exact solution has zero L2 norm");
    return std::sqrt(radicand / exact_sq);
}

} // namespace taps
