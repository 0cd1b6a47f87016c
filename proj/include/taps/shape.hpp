#pragma once

#include <taps/mesh.hpp>
#include <taps/quadrature.hpp>

#include <stdexcept>

namespace taps
{

// one evaluation point of the basis: values and derivatives of the (at most
// p+2) shape functions supported there, starting at node index `first`
template <typename T>
struct ShapeRow
{
    index_t first = 0;
    VectorX<T> n;
    VectorX<T> b;
};

namespace detail
{

// contiguous window of p+1 nodes used as the interpolation patch of node i
// when evaluating inside element e: centered on i, shifted to contain both
// element end nodes, clamped to the mesh
inline Eigen::Index patch_start(Eigen::Index i, Eigen::Index e, int p, Eigen::Index n_nodes)
{
    Eigen::Index lo = i - p / 2;
    lo = std::min(lo, e);
    lo = std::max(lo, e + 1 - p);
    lo = std::max<Eigen::Index>(0, std::min(lo, n_nodes - 1 - p));
    return lo;
}

// Lagrange cardinal values and derivatives over the patch nodes, computed in
// dilated local coordinates xi = (x - x_center) / a for conditioning
template <typename T>
void lagrange_cardinals(const VectorX<T>& xi, T xiq, VectorX<T>& w, VectorX<T>& dw,
                        index_t node_offset)
{
    const index_t m = xi.size();
    w.resize(m);
    dw.resize(m);
    for (index_t k = 0; k < m; k++)
    {
        T val = T(1);
        for (index_t j = 0; j < m; j++)
        {
            if (j == k)
                continue;
            T den = xi[k] - xi[j];
            if (den == T(0))
                throw std::runtime_error(
                    "patch construction failed: coincident nodes " +
                    std::to_string(node_offset + k) + " and " + std::to_string(node_offset + j));
            val *= (xiq - xi[j]) / den;
        }
        w[k] = val;

        T der = T(0);
        for (index_t j = 0; j < m; j++)
        {
            if (j == k)
                continue;
            T term = T(1) / (xi[k] - xi[j]);
            for (index_t l = 0; l < m; l++)
            {
                if (l == k || l == j)
                    continue;
                term *= (xiq - xi[l]) / (xi[k] - xi[l]);
            }
            der += term;
        }
        dw[k] = der;
    }
}

} // namespace detail

// basis evaluation at one coordinate: each shape function is the linear hat
// combination of the patch interpolants of the two element end nodes, which
// gives Kronecker delta at nodes, partition of unity, and reproduction of
// polynomials up to degree p
template <typename T>
ShapeRow<T> shape_row(const Mesh1D<T>& mesh, const BasisConfig<T>& basis, T x)
{
    const int p = basis.p;
    if (p < 1)
        throw std::invalid_argument("shape_row: order p must be >= 1, got " + std::to_string(p));
    if (basis.s < p)
        throw std::invalid_argument("shape_row: patch size s = " + std::to_string(basis.s) +
                                    " smaller than p = " + std::to_string(p));
    if (mesh.n_elements() < p)
        throw std::invalid_argument("shape_row: mesh with " +
                                    std::to_string(mesh.n_elements()) +
                                    " elements cannot support order " + std::to_string(p));

    const index_t e = mesh.element_of(x);
    const T xl = mesh.nodes[e], xr = mesh.nodes[e + 1];
    const T h = xr - xl;
    const T a = basis.a > T(0) ? basis.a : h;

    // linear hats of the carrier element
    const T t = (x - xl) / h;
    const T hat[2] = {T(1) - t, t};
    const T dhat[2] = {T(-1) / h, T(1) / h};

    const index_t lo0 = detail::patch_start(e, e, p, mesh.n_nodes());
    const index_t lo1 = detail::patch_start(e + 1, e, p, mesh.n_nodes());

    ShapeRow<T> row;
    row.first = std::min(lo0, lo1);
    const index_t last = std::max(lo0, lo1) + p;
    row.n = VectorX<T>::Zero(last - row.first + 1);
    row.b = VectorX<T>::Zero(last - row.first + 1);

    VectorX<T> xi(p + 1), w, dw;
    for (int side = 0; side < 2; side++)
    {
        const index_t lo = side == 0 ? lo0 : lo1;
        const T center = mesh.nodes[e + side];
        for (int k = 0; k <= p; k++)
            xi[k] = (mesh.nodes[lo + k] - center) / a;
        detail::lagrange_cardinals(xi, (x - center) / a, w, dw, lo);
        for (int k = 0; k <= p; k++)
        {
            row.n[lo + k - row.first] += hat[side] * w[k];
            row.b[lo + k - row.first] += dhat[side] * w[k] + hat[side] * dw[k] / a;
        }
    }
    return row;
}

// basis tabulated at the Gauss points of every element; N and B are stored
// compactly, row q holding the `band` values starting at column first[q],
// weights carry the element jacobian
template <typename T>
struct ShapeTable
{
    Mesh1D<T> mesh;
    BasisConfig<T> basis;
    int points_per_element = 0;
    VectorX<T> points;
    VectorX<T> weights;
    MatrixX<T> N;
    MatrixX<T> B;
    std::vector<index_t> first;
    index_t band = 0;

    index_t n_nodes() const { return mesh.n_nodes(); }
    index_t n_points() const { return points.size(); }

    // value of sum_k N_k(x_q) coeffs[k] for every tabulated point
    VectorX<T> interpolate(const VectorX<T>& coeffs) const
    {
        VectorX<T> out(n_points());
        for (index_t q = 0; q < n_points(); q++)
            out[q] = N.row(q).dot(coeffs.segment(first[q], band));
        return out;
    }

    // quadrature-point values of every column of a factor matrix
    MatrixX<T> interpolate_columns(const MatrixX<T>& coeffs) const
    {
        MatrixX<T> out(n_points(), coeffs.cols());
        for (index_t q = 0; q < n_points(); q++)
            out.row(q) = N.row(q) * coeffs.middleRows(first[q], band);
        return out;
    }
};

template <typename T>
ShapeTable<T> eval_basis(const Mesh1D<T>& mesh, const BasisConfig<T>& basis,
                         int points_per_element)
{
    if (points_per_element < 1)
        throw std::invalid_argument("eval_basis: points_per_element must be >= 1");

    ShapeTable<T> table;
    table.mesh = mesh;
    table.basis = basis;
    table.points_per_element = points_per_element;

    const auto rule = gauss_rule<T>(points_per_element);
    const index_t ne = mesh.n_elements();
    const index_t nq = ne * points_per_element;
    const index_t n = mesh.n_nodes();

    table.band = std::min<index_t>(basis.p + 2, n);
    table.points.resize(nq);
    table.weights.resize(nq);
    table.N = MatrixX<T>::Zero(nq, table.band);
    table.B = MatrixX<T>::Zero(nq, table.band);
    table.first.resize(nq);

    for (index_t e = 0; e < ne; e++)
    {
        const T xl = mesh.nodes[e], xr = mesh.nodes[e + 1];
        const T h = xr - xl;
        for (int q = 0; q < points_per_element; q++)
        {
            const index_t row_idx = e * points_per_element + q;
            const T x = (xl + xr) / T(2) + h / T(2) * rule.points[q];
            table.points[row_idx] = x;
            table.weights[row_idx] = h / T(2) * rule.weights[q];

            ShapeRow<T> row = shape_row(mesh, basis, x);
            index_t start = std::min(row.first, n - table.band);
            table.first[row_idx] = start;
            for (index_t k = 0; k < row.n.size(); k++)
            {
                table.N(row_idx, row.first + k - start) = row.n[k];
                table.B(row_idx, row.first + k - start) = row.b[k];
            }
        }
    }
    return table;
}

template <typename T>
ShapeTable<T> eval_basis(const DimensionSpec<T>& dim, int points_per_element)
{
    return eval_basis(build_mesh(dim), dim.basis, points_per_element);
}

} // namespace taps
