#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <string>
#include <vector>

namespace taps
{

template <typename T>
using MatrixX = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

template <typename T>
using VectorX = Eigen::Matrix<T, Eigen::Dynamic, 1>;

template <typename T>
using SparseMatrix = Eigen::SparseMatrix<T>;

using index_t = Eigen::Index;

// roles a 1d dimension can play in a problem
enum class dim_role
{
    spatial,
    parametric,
    temporal
};

inline std::string to_string(dim_role r)
{
    switch (r)
    {
        case dim_role::spatial: return "spatial";
        case dim_role::parametric: return "parametric";
        case dim_role::temporal: return "temporal";
    }
    return "?";
}

} // namespace taps
