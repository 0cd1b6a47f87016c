#pragma once

#include <taps/types.hpp>

#include <algorithm>
#include <stdexcept>
#include <string>

namespace taps
{

// basis hyperparameters for one dimension: polynomial order p, patch size s,
// dilation a; s >= p is accepted, the engine uses the p+1 nearest patch
// nodes; a <= 0 means "element size" and only affects local conditioning
template <typename T>
struct BasisConfig
{
    int p = 1;
    int s = 1;
    T a = T(0);
};

template <typename T>
struct DimensionSpec
{
    std::string name;
    dim_role role = dim_role::spatial;
    T lo = T(0);
    T hi = T(1);
    int n_elements = 1;
    BasisConfig<T> basis;
    std::vector<index_t> dirichlet_nodes; // homogeneous constraints
};

template <typename T>
struct Mesh1D
{
    VectorX<T> nodes; // ascending, n_elements + 1 entries

    index_t n_nodes() const { return nodes.size(); }
    index_t n_elements() const { return nodes.size() - 1; }

    // element containing x; nodes map to the element on their right except
    // the last node
    index_t element_of(T x) const
    {
        if (x < nodes[0] || x > nodes[nodes.size() - 1])
            throw std::invalid_argument("element_of: coordinate " + std::to_string(double(x)) +
                                        " outside [" + std::to_string(double(nodes[0])) + ", " +
                                        std::to_string(double(nodes[nodes.size() - 1])) + "]");
        auto it = std::upper_bound(nodes.data(), nodes.data() + nodes.size(), x);
        index_t e = index_t(it - nodes.data()) - 1;
        return std::min(e, n_elements() - 1);
    }
};

template <typename T>
Mesh1D<T> build_mesh(T lo, T hi, int n_elements)
{
    if (!(hi > lo))
        throw std::invalid_argument("build_mesh: empty interval [" + std::to_string(double(lo)) +
                                    ", " + std::to_string(double(hi)) + "]");
    if (n_elements < 1)
        throw std::invalid_argument("build_mesh: n_elements " + std::to_string(n_elements) +
                                    " < 1");
    Mesh1D<T> mesh;
    mesh.nodes.resize(n_elements + 1);
    for (int i = 0; i <= n_elements; i++)
        mesh.nodes[i] = lo + (hi - lo) * T(i) / T(n_elements);
    mesh.nodes[n_elements] = hi;
    return mesh;
}

template <typename T>
Mesh1D<T> build_mesh(const DimensionSpec<T>& dim)
{
    return build_mesh(dim.lo, dim.hi, dim.n_elements);
}

} // namespace taps
