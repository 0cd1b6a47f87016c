#include <taps/inner_products.hpp>
#include <taps/td_field.hpp>

#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

using taps::BasisConfig;
using taps::build_mesh;
using taps::eval_basis;
using taps::evaluate;
using taps::Mesh1D;
using taps::SeparableFunction;
using taps::TableMap;
using taps::TDField;
namespace factors = taps::factors;

namespace {

struct Grid2D
{
    std::vector<Mesh1D<double>> meshes;
    std::vector<BasisConfig<double>> bases;
    TableMap<double> tables;
};

Grid2D make_grid(int nx, int nt, int p = 1)
{
    Grid2D g;
    g.meshes = {build_mesh(0.0, 1.0, nx), build_mesh(0.0, 1.0, nt)};
    g.bases = {BasisConfig<double>{p, p, 0.0}, BasisConfig<double>{p, p, 0.0}};
    g.tables.emplace("x", eval_basis(g.meshes[0], g.bases[0], p + 2));
    g.tables.emplace("t", eval_basis(g.meshes[1], g.bases[1], p + 2));
    return g;
}

TDField<double> make_field(const Grid2D& g, int modes)
{
    TDField<double> f;
    f.name = "u";
    f.dims = {"x", "t"};
    f.factors = {Eigen::MatrixXd::Zero(g.meshes[0].n_nodes(), modes),
                 Eigen::MatrixXd::Zero(g.meshes[1].n_nodes(), modes)};
    return f;
}

Eigen::VectorXd nodal_values(const Mesh1D<double>& mesh, double (*fn)(double))
{
    Eigen::VectorXd v(mesh.n_nodes());
    for (Eigen::Index i = 0; i < v.size(); i++)
        v[i] = fn(mesh.nodes[i]);
    return v;
}

} // namespace

TEST_CASE("column-major flattening and its inverse")
{
    Eigen::MatrixXd u(2, 2);
    u << 1, 2, 3, 4;
    Eigen::VectorXd v = taps::vec(u);
    REQUIRE(v.size() == 4);
    CHECK(v[0] == 1);
    CHECK(v[1] == 3);
    CHECK(v[2] == 2);
    CHECK(v[3] == 4);

    Eigen::MatrixXd back = taps::unvec(v, 2, 2);
    CHECK((back - u).norm() == 0.0);

    CHECK_THROWS_AS((void)taps::unvec(v, 3, 2), std::invalid_argument);
}

TEST_CASE("matricized Kronecker product action")
{
    std::mt19937_64 rng(5);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int rep = 0; rep < 25; rep++)
    {
        const int n = 2 + int(rng() % 5);
        const int m = 1 + int(rng() % 4);
        Eigen::MatrixXd k(n, n), c(m, m), u(n, m);
        for (int i = 0; i < n; i++)
            for (int j = 0; j < n; j++)
                k(i, j) = gauss(rng);
        for (int i = 0; i < m; i++)
            for (int j = 0; j < m; j++)
                c(i, j) = gauss(rng);
        for (int i = 0; i < n; i++)
            for (int j = 0; j < m; j++)
                u(i, j) = gauss(rng);

        // dense C (x) K with the node index fastest
        Eigen::MatrixXd big = Eigen::MatrixXd::Zero(n * m, n * m);
        for (int a = 0; a < m; a++)
            for (int b = 0; b < m; b++)
                big.block(a * n, b * n, n, n) = c(a, b) * k;

        Eigen::VectorXd lhs = big * taps::vec(u);
        Eigen::VectorXd rhs = taps::vec(Eigen::MatrixXd(k * u * c.transpose()));
        CHECK((lhs - rhs).norm() < 1e-13 * std::max(1.0, rhs.norm()));
    }
}

TEST_CASE("all-ones factors evaluate to one everywhere")
{
    auto g = make_grid(4, 3);
    auto f = make_field(g, 1);
    f.factors[0].setOnes();
    f.factors[1].setOnes();
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int k = 0; k < 20; k++)
    {
        std::map<std::string, double> point{{"x", unit(rng)}, {"t", unit(rng)}};
        CHECK(std::abs(evaluate(f, g.meshes, g.bases, point) - 1.0) < 1e-13);
    }
}

TEST_CASE("opposite modes cancel")
{
    auto g = make_grid(4, 3);
    auto f = make_field(g, 2);
    std::mt19937_64 rng(4);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (auto& fac : f.factors)
        for (Eigen::Index i = 0; i < fac.rows(); i++)
            fac(i, 0) = gauss(rng);
    f.factors[0].col(1) = -f.factors[0].col(0);
    f.factors[1].col(1) = f.factors[1].col(0);
    std::map<std::string, double> point{{"x", 0.37}, {"t", 0.61}};
    CHECK(std::abs(evaluate(f, g.meshes, g.bases, point)) < 1e-13);
}

TEST_CASE("nodal interpolation is exact at grid points")
{
    auto g = make_grid(8, 8);
    auto f = make_field(g, 1);
    f.factors[0].col(0) = nodal_values(g.meshes[0], +[](double x) { return std::sin(M_PI * x); });
    f.factors[1].col(0) = nodal_values(g.meshes[1], +[](double t) { return std::exp(-t); });
    std::map<std::string, double> point{{"x", 0.5}, {"t", 0.0}};
    CHECK(std::abs(evaluate(f, g.meshes, g.bases, point) - 1.0) < 1e-12);
}

TEST_CASE("inner products on the unit square")
{
    auto g = make_grid(6, 5);
    auto ones = make_field(g, 1);
    ones.factors[0].setOnes();
    ones.factors[1].setOnes();
    CHECK(std::abs(taps::l2_inner(g.tables, ones, ones) - 1.0) < 1e-12);

    // symmetry on random fields
    std::mt19937_64 rng(8);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto a = make_field(g, 2);
    auto b = make_field(g, 3);
    for (auto* f : {&a, &b})
        for (auto& fac : f->factors)
            for (Eigen::Index i = 0; i < fac.rows(); i++)
                for (Eigen::Index j = 0; j < fac.cols(); j++)
                    fac(i, j) = gauss(rng);
    const double ab = taps::l2_inner(g.tables, a, b);
    const double ba = taps::l2_inner(g.tables, b, a);
    CHECK(std::abs(ab - ba) < 1e-12 * std::max(1.0, std::abs(ab)));
    CHECK(taps::l2_inner(g.tables, a, a) >= 0.0);
}

TEST_CASE("norm of a separable sine")
{
    auto g = make_grid(32, 4, 2);
    SeparableFunction<double> e;
    e.add(1.0, {{"x", factors::sine(M_PI)}});
    const double norm = taps::l2_norm(g.tables, e, {"x", "t"});
    CHECK(std::abs(norm - std::sqrt(0.5)) < 1e-8);
}

TEST_CASE("interpolation error decays at the expected rate")
{
    SeparableFunction<double> e;
    e.add(1.0, {{"x", factors::sine(M_PI)}, {"t", factors::exponential(-1.0)}});

    auto err_at = [&](int n) {
        auto g = make_grid(n, n);
        auto f = make_field(g, 1);
        f.factors[0].col(0) =
            nodal_values(g.meshes[0], +[](double x) { return std::sin(M_PI * x); });
        f.factors[1].col(0) =
            nodal_values(g.meshes[1], +[](double t) { return std::exp(-t); });
        return taps::relative_l2_error(g.tables, f, e);
    };

    const double e8 = err_at(8);
    const double e16 = err_at(16);
    CHECK(e8 / e16 > 3.0);
    CHECK(e8 / e16 < 5.0);
}

TEST_CASE("representable nodal fields reach roundoff error")
{
    // exact solution x * t is reproduced by linear elements
    auto g = make_grid(5, 7);
    auto f = make_field(g, 1);
    f.factors[0].col(0) = nodal_values(g.meshes[0], +[](double x) { return x; });
    f.factors[1].col(0) = nodal_values(g.meshes[1], +[](double t) { return t; });
    SeparableFunction<double> e;
    e.add(1.0, {{"x", factors::monomial<double>(1)}, {"t", factors::monomial<double>(1)}});
    CHECK(taps::relative_l2_error(g.tables, f, e) < 1e-10);
}

TEST_CASE("zero approximation has unit relative error")
{
    auto g = make_grid(4, 4);
    auto f = make_field(g, 1);
    SeparableFunction<double> e;
    e.add(1.0, {{"x", factors::sine(M_PI)}});
    CHECK(std::abs(taps::relative_l2_error(g.tables, f, e) - 1.0) < 1e-12);
}

TEST_CASE("zero exact solution is rejected")
{
    auto g = make_grid(4, 4);
    auto f = make_field(g, 1);
    SeparableFunction<double> zero;
    CHECK_THROWS_AS((void)taps::relative_l2_error(g.tables, f, zero), std::invalid_argument);
}

TEST_CASE("mode rebalancing preserves the represented field")
{
    auto g = make_grid(5, 6);
    auto f = make_field(g, 2);
    std::mt19937_64 rng(21);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (auto& fac : f.factors)
        for (Eigen::Index i = 0; i < fac.rows(); i++)
            for (Eigen::Index j = 0; j < fac.cols(); j++)
                fac(i, j) = gauss(rng);

    // unbalance mode 0: norms (4c, c) become equal after rebalancing
    f.factors[0].col(0) *= 16.0;
    const double product_before =
        f.factors[0].col(0).norm() * f.factors[1].col(0).norm();

    auto before = f;
    taps::normalize_modes(f);

    CHECK(std::abs(f.factors[0].col(0).norm() - f.factors[1].col(0).norm()) <
          1e-10 * f.factors[0].col(0).norm());
    CHECK(std::abs(f.factors[0].col(0).norm() * f.factors[1].col(0).norm() -
                   product_before) < 1e-9 * product_before);

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int k = 0; k < 100; k++)
    {
        std::map<std::string, double> point{{"x", unit(rng)}, {"t", unit(rng)}};
        const double va = evaluate(before, g.meshes, g.bases, point);
        const double vb = evaluate(f, g.meshes, g.bases, point);
        CHECK(std::abs(va - vb) < 1e-12 * std::max(1.0, std::abs(va)));
    }
}

TEST_CASE("zero modes survive rebalancing unchanged")
{
    auto g = make_grid(4, 4);
    auto f = make_field(g, 2);
    f.factors[0].col(0).setOnes();
    f.factors[1].col(0).setOnes();
    taps::normalize_modes(f);
    CHECK(f.factors[0].col(1).norm() == 0.0);
    CHECK(f.factors[1].col(1).norm() == 0.0);
}

TEST_CASE("concrete rebalancing example")
{
    // single mode with norms (4, 1) rebalances to (2, 2)
    auto g = make_grid(3, 3);
    auto f = make_field(g, 1);
    f.factors[0].col(0).setZero();
    f.factors[1].col(0).setZero();
    f.factors[0](0, 0) = 4.0;
    f.factors[1](0, 0) = 1.0;
    taps::normalize_modes(f);
    CHECK(std::abs(f.factors[0].col(0).norm() - 2.0) < 1e-13);
    CHECK(std::abs(f.factors[1].col(0).norm() - 2.0) < 1e-13);
}
