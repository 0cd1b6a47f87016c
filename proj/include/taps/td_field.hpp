#pragma once

#include <taps/shape.hpp>

#include <cmath>
#include <map>
#include <stdexcept>

namespace taps
{

// separated representation of one field: u(x_1..x_D) = sum_m prod_d
// N(x_d) . factors[d].col(m)
template <typename T>
struct TDField
{
    std::string name;
    std::vector<std::string> dims;
    std::vector<MatrixX<T>> factors; // n_d x M each

    index_t n_modes() const { return factors.empty() ? 0 : factors.front().cols(); }
    index_t n_dims() const { return index_t(dims.size()); }

    index_t dim_index(const std::string& dim) const
    {
        for (size_t d = 0; d < dims.size(); d++)
            if (dims[d] == dim)
                return index_t(d);
        throw std::invalid_argument("field '" + name + "' has no dimension '" + dim + "'");
    }
};

// column-major stacking, node index fastest: vec(U)[m*n + i] = U(i, m)
template <typename T>
VectorX<T> vec(const MatrixX<T>& u)
{
    return Eigen::Map<const VectorX<T>>(u.data(), u.size());
}

template <typename T>
MatrixX<T> unvec(const VectorX<T>& v, index_t rows, index_t cols)
{
    if (v.size() != rows * cols)
        throw std::invalid_argument("unvec: size " + std::to_string(v.size()) +
                                    " != " + std::to_string(rows) + " x " + std::to_string(cols));
    return Eigen::Map<const MatrixX<T>>(v.data(), rows, cols);
}

// point evaluation through the basis; meshes/bases supplied per dimension
template <typename T>
T evaluate(const TDField<T>& field, const std::vector<Mesh1D<T>>& meshes,
           const std::vector<BasisConfig<T>>& bases, const std::map<std::string, T>& point)
{
    const index_t m = field.n_modes();
    VectorX<T> prod = VectorX<T>::Ones(m);
    for (size_t d = 0; d < field.dims.size(); d++)
    {
        auto it = point.find(field.dims[d]);
        if (it == point.end())
            throw std::invalid_argument("evaluate: missing coordinate for dimension '" +
                                        field.dims[d] + "'");
        ShapeRow<T> row = shape_row(meshes[d], bases[d], it->second);
        prod.array() *=
            (row.n.transpose() * field.factors[d].middleRows(row.first, row.n.size()))
                .transpose()
                .array();
    }
    return prod.sum();
}

// rebalance each mode so all factor columns share the same Euclidean norm;
// the product of scalings is 1 so the represented field is unchanged; sign
// is carried by the first dimension
template <typename T>
void normalize_modes(TDField<T>& field)
{
    const index_t n_d = field.n_dims();
    if (n_d < 2)
        return;
    for (index_t m = 0; m < field.n_modes(); m++)
    {
        T log_sum = T(0);
        bool dead = false;
        for (index_t d = 0; d < n_d; d++)
        {
            T norm = field.factors[d].col(m).norm();
            if (norm == T(0))
            {
                dead = true;
                break;
            }
            log_sum += std::log(norm);
        }
        if (dead)
            continue; // zero modes stay as they are
        const T target = std::exp(log_sum / T(n_d));
        for (index_t d = 0; d < n_d; d++)
        {
            T norm = field.factors[d].col(m).norm();
            field.factors[d].col(m) *= target / norm;
        }
        for (index_t d = 1; d < n_d; d++)
        {
            // canonical sign on later dimensions, compensated in the first
            index_t lead;
            field.factors[d].col(m).cwiseAbs().maxCoeff(&lead);
            if (field.factors[d](lead, m) < T(0))
            {
                field.factors[d].col(m) = -field.factors[d].col(m);
                field.factors[0].col(m) = -field.factors[0].col(m);
            }
        }
    }
}

} // namespace taps
