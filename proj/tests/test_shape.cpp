#include <taps/mesh.hpp>
#include <taps/shape.hpp>

#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

using taps::BasisConfig;
using taps::build_mesh;
using taps::eval_basis;
using taps::Mesh1D;
using taps::shape_row;

namespace {

Eigen::VectorXd expand_row(const taps::ShapeRow<double>& row, Eigen::Index n_nodes)
{
    Eigen::VectorXd full = Eigen::VectorXd::Zero(n_nodes);
    full.segment(row.first, row.n.size()) = row.n;
    return full;
}

Eigen::VectorXd expand_derivative(const taps::ShapeRow<double>& row, Eigen::Index n_nodes)
{
    Eigen::VectorXd full = Eigen::VectorXd::Zero(n_nodes);
    full.segment(row.first, row.b.size()) = row.b;
    return full;
}

} // namespace

TEST_CASE("uniform mesh nodes")
{
    auto m1 = build_mesh(0.0, 1.0, 2);
    REQUIRE(m1.n_nodes() == 3);
    CHECK(m1.nodes[0] == 0.0);
    CHECK(m1.nodes[1] == 0.5);
    CHECK(m1.nodes[2] == 1.0);

    auto m2 = build_mesh(0.0, 1.0, 1);
    REQUIRE(m2.n_nodes() == 2);
    CHECK(m2.nodes[0] == 0.0);
    CHECK(m2.nodes[1] == 1.0);

    auto m3 = build_mesh(-1.0, 1.0, 4);
    REQUIRE(m3.n_nodes() == 5);
    for (int i = 0; i < 5; i++)
        CHECK(m3.nodes[i] == doctest::Approx(-1.0 + 0.5 * i).epsilon(1e-15));
}

TEST_CASE("degenerate meshes are rejected")
{
    CHECK_THROWS_AS((void)build_mesh(0.0, 1.0, 0), std::invalid_argument);
    CHECK_THROWS_AS((void)build_mesh(1.0, 1.0, 4), std::invalid_argument);
    CHECK_THROWS_AS((void)build_mesh(2.0, 1.0, 4), std::invalid_argument);
}

TEST_CASE("element lookup covers the domain and rejects outside points")
{
    auto mesh = build_mesh(0.0, 1.0, 4);
    CHECK(mesh.element_of(0.0) == 0);
    CHECK(mesh.element_of(0.1) == 0);
    CHECK(mesh.element_of(0.5) == 2);
    CHECK(mesh.element_of(1.0) == 3);
    CHECK_THROWS_AS((void)mesh.element_of(-0.01), std::invalid_argument);
    CHECK_THROWS_AS((void)mesh.element_of(1.01), std::invalid_argument);
}

TEST_CASE("linear basis reduces to hat functions")
{
    auto mesh = build_mesh(0.0, 1.0, 2);
    BasisConfig<double> basis{1, 1, 0.0};
    auto row = shape_row(mesh, basis, 0.25);
    auto full = expand_row(row, mesh.n_nodes());
    CHECK(std::abs(full[0] - 0.5) < 1e-14);
    CHECK(std::abs(full[1] - 0.5) < 1e-14);
    CHECK(std::abs(full[2]) < 1e-14);

    // hat slope is +-1/h on [0, 0.5]
    auto dfull = expand_derivative(row, mesh.n_nodes());
    CHECK(std::abs(dfull[0] + 2.0) < 1e-13);
    CHECK(std::abs(dfull[1] - 2.0) < 1e-13);
}

TEST_CASE("basis invariants hold for random meshes and orders")
{
    std::mt19937_64 rng(314159);
    std::uniform_int_distribution<int> pick_n(4, 40);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    for (int p = 1; p <= 3; p++)
        for (int s : {p, p + 1})
            for (int rep = 0; rep < 4; rep++)
            {
                const int n = std::max(pick_n(rng), p);
                const double lo = -1.0 + 2.0 * unit(rng);
                const double hi = lo + 0.5 + 2.0 * unit(rng);
                auto mesh = build_mesh(lo, hi, n);
                BasisConfig<double> basis{p, s, 0.0};

                // partition of unity and vanishing derivative sum at random points
                for (int k = 0; k < 25; k++)
                {
                    const double x = lo + (hi - lo) * unit(rng);
                    auto row = shape_row(mesh, basis, x);
                    CHECK(std::abs(row.n.sum() - 1.0) < 1e-12);
                    CHECK(std::abs(row.b.sum()) < 1e-10 / (hi - lo));
                }

                // interpolation property at the nodes
                for (Eigen::Index i = 0; i < mesh.n_nodes(); i++)
                {
                    auto full = expand_row(shape_row(mesh, basis, mesh.nodes[i]),
                                           mesh.n_nodes());
                    for (Eigen::Index j = 0; j < mesh.n_nodes(); j++)
                        CHECK(std::abs(full[j] - (i == j ? 1.0 : 0.0)) < 1e-12);
                }

                // reproduction of monomials up to degree p
                for (int k = 0; k < 10; k++)
                {
                    const double x = lo + (hi - lo) * unit(rng);
                    auto row = shape_row(mesh, basis, x);
                    for (int r = 0; r <= p; r++)
                    {
                        double acc = 0, dacc = 0;
                        for (Eigen::Index j = 0; j < row.n.size(); j++)
                        {
                            const double node = mesh.nodes[row.first + j];
                            acc += row.n[j] * std::pow(node, r);
                            dacc += row.b[j] * std::pow(node, r);
                        }
                        const double scale = std::max(1.0, std::pow(std::abs(x), r));
                        CHECK(std::abs(acc - std::pow(x, r)) < 1e-10 * scale);
                        const double dexact = r == 0 ? 0.0 : r * std::pow(x, r - 1);
                        CHECK(std::abs(dacc - dexact) < 1e-8 * std::max(1.0, std::abs(dexact)));
                    }
                }
            }
}

TEST_CASE("dilation parameter does not change the spanned values")
{
    auto mesh = build_mesh(0.0, 1.0, 6);
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int p : {2, 3})
    {
        BasisConfig<double> a_default{p, p, 0.0};
        BasisConfig<double> a_wide{p, p, 0.37};
        for (int k = 0; k < 30; k++)
        {
            const double x = unit(rng);
            auto r0 = shape_row(mesh, a_default, x);
            auto r1 = shape_row(mesh, a_wide, x);
            auto f0 = expand_row(r0, mesh.n_nodes());
            auto f1 = expand_row(r1, mesh.n_nodes());
            for (Eigen::Index j = 0; j < mesh.n_nodes(); j++)
                CHECK(std::abs(f0[j] - f1[j]) < 1e-9);
        }
    }
}

TEST_CASE("tabulated basis matches pointwise evaluation")
{
    auto mesh = build_mesh(0.0, 2.0, 5);
    BasisConfig<double> basis{2, 2, 0.0};
    auto table = eval_basis(mesh, basis, 4);
    REQUIRE(table.n_points() == 20);
    CHECK(table.band == std::min<Eigen::Index>(basis.p + 2, mesh.n_nodes()));

    for (Eigen::Index q = 0; q < table.n_points(); q++)
    {
        auto row = shape_row(mesh, basis, table.points[q]);
        auto full_row = expand_row(row, mesh.n_nodes());
        Eigen::VectorXd full_tab = Eigen::VectorXd::Zero(mesh.n_nodes());
        full_tab.segment(table.first[size_t(q)], table.band) = table.N.row(q);
        for (Eigen::Index j = 0; j < mesh.n_nodes(); j++)
            CHECK(std::abs(full_row[j] - full_tab[j]) < 1e-13);
    }

    // quadrature weights integrate constants over the domain
    CHECK(std::abs(table.weights.sum() - 2.0) < 1e-13);
}

TEST_CASE("linear basis tables have two active nodes per point")
{
    auto mesh = build_mesh(0.0, 1.0, 4);
    auto table = eval_basis(mesh, BasisConfig<double>{1, 1, 0.0}, 3);
    for (Eigen::Index q = 0; q < table.n_points(); q++)
    {
        int nonzero = 0;
        for (Eigen::Index j = 0; j < table.band; j++)
            if (std::abs(table.N(q, j)) > 1e-14)
                nonzero++;
        CHECK(nonzero <= 2);
        CHECK(nonzero >= 1);
    }
}

TEST_CASE("interpolation reproduces degree-p polynomials at quadrature points")
{
    for (int p : {1, 2, 3})
    {
        auto mesh = build_mesh(-1.0, 2.0, 6);
        auto table = eval_basis(mesh, BasisConfig<double>{p, p, 0.0}, p + 2);
        Eigen::VectorXd nodal(mesh.n_nodes());
        for (Eigen::Index i = 0; i < mesh.n_nodes(); i++)
            nodal[i] = std::pow(mesh.nodes[i], p);
        Eigen::VectorXd at_points = table.interpolate(nodal);
        for (Eigen::Index q = 0; q < table.n_points(); q++)
            CHECK(std::abs(at_points[q] - std::pow(table.points[q], p)) < 1e-10);
    }
}

TEST_CASE("invalid basis configurations are rejected")
{
    auto mesh = build_mesh(0.0, 1.0, 4);
    CHECK_THROWS_AS((void)shape_row(mesh, BasisConfig<double>{0, 1, 0.0}, 0.5),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)shape_row(mesh, BasisConfig<double>{2, 1, 0.0}, 0.5),
                    std::invalid_argument);
    auto coarse = build_mesh(0.0, 1.0, 2);
    CHECK_THROWS_AS((void)shape_row(coarse, BasisConfig<double>{3, 3, 0.0}, 0.5),
                    std::invalid_argument);
}
