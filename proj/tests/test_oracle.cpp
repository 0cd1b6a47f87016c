#include <taps/gallery.hpp>
#include <taps/manufacture.hpp>
#include <taps/oracle.hpp>
#include <taps/presets.hpp>
#include <taps/solver.hpp>

#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

using taps::manufacture;
using taps::oracle_full_solve;
using taps::ProblemSpec;
using taps::SeparableFunction;
using taps::Solver;
namespace factors = taps::factors;

namespace {

ProblemSpec<double> poisson_1d(int n, int p = 1)
{
    ProblemSpec<double> spec;
    spec.name = "poisson_1d";
    taps::DimensionSpec<double> x;
    x.name = "x";
    x.role = taps::dim_role::spatial;
    x.n_elements = n;
    x.basis = {p, p, 0.0};
    x.dirichlet_nodes = {0, n};
    spec.dims = {x};
    spec.fields = {{"u", {"x"}}};
    taps::WeakFormTerm<double> diff;
    diff.test_field = diff.trial_field = "u";
    diff.ops.emplace("x", taps::OperatorSpec<double>::stiffness());
    spec.terms = {diff};
    spec.solver.modes = 1;
    return spec;
}

SeparableFunction<double> heat_exact()
{
    SeparableFunction<double> g;
    g.add(1.0, {{"x", factors::sine(M_PI)},
                {"t", factors::monomial<double>(1) * factors::exponential(-1.0)}});
    return g;
}

Eigen::MatrixXd dense_kron(const std::vector<Eigen::MatrixXd>& mats)
{
    Eigen::MatrixXd acc = Eigen::MatrixXd::Ones(1, 1);
    // later matrices vary slowest, matching the flattening convention
    for (const auto& m : mats)
    {
        Eigen::MatrixXd next(m.rows() * acc.rows(), m.cols() * acc.cols());
        for (Eigen::Index i = 0; i < m.rows(); i++)
            for (Eigen::Index j = 0; j < m.cols(); j++)
                next.block(i * acc.rows(), j * acc.cols(), acc.rows(), acc.cols()) =
                    m(i, j) * acc;
        acc = next;
    }
    return acc;
}

} // namespace

TEST_CASE("triplet expansion matches the dense Kronecker product")
{
    std::mt19937_64 rng(61);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int rep = 0; rep < 10; rep++)
    {
        std::vector<Eigen::MatrixXd> mats;
        int size = 1;
        const int depth = 2 + int(rng() % 2);
        for (int d = 0; d < depth; d++)
        {
            const int n = 2 + int(rng() % 3);
            Eigen::MatrixXd m(n, n);
            for (Eigen::Index i = 0; i < n; i++)
                for (Eigen::Index j = 0; j < n; j++)
                    m(i, j) = gauss(rng);
            mats.push_back(m);
            size *= n;
        }

        Eigen::MatrixXd expected = 2.5 * dense_kron(mats);
        Eigen::SparseMatrix<double> sparse(size, size);
        auto trips = taps::detail::kron_triplets(mats, 2.5);
        sparse.setFromTriplets(trips.begin(), trips.end());
        CHECK((Eigen::MatrixXd(sparse) - expected).cwiseAbs().maxCoeff() <
              1e-13 * expected.cwiseAbs().maxCoeff());

        // matrix-free application agrees as well
        Eigen::VectorXd x(size);
        for (Eigen::Index i = 0; i < size; i++)
            x[i] = gauss(rng);
        Eigen::VectorXd direct = expected / 2.5 * x;
        Eigen::VectorXd lazy = taps::detail::apply_kron(mats, x);
        CHECK((direct - lazy).norm() < 1e-12 * std::max(1.0, direct.norm()));
    }
}

TEST_CASE("full expansion of a separated field follows the flattening order")
{
    taps::TDField<double> f;
    f.name = "u";
    f.dims = {"x", "y"};
    Eigen::MatrixXd ux(2, 1), uy(2, 1);
    ux << 1, 2;
    uy << 3, 5;
    f.factors = {ux, uy};
    Eigen::VectorXd full = taps::expand_full(f);
    REQUIRE(full.size() == 4);
    // x index varies fastest
    CHECK(full[0] == doctest::Approx(3.0));
    CHECK(full[1] == doctest::Approx(6.0));
    CHECK(full[2] == doctest::Approx(5.0));
    CHECK(full[3] == doctest::Approx(10.0));
}

TEST_CASE("one-dimensional oracle equals the direct banded solve")
{
    for (int p : {1, 2})
    {
        auto spec = poisson_1d(12, p);
        SeparableFunction<double> f;
        f.add(1.0, {{"x", factors::sine(M_PI)}});
        spec.forcing.emplace("u", f);
        spec.solver.tol_subspace = 1e-12;

        auto full = oracle_full_solve(spec);
        REQUIRE(full.count("u") == 1);

        Solver<double> solver(spec);
        auto [state, report] = solver.solve();
        REQUIRE(report.converged);
        CHECK((full.at("u") - state.fields[0].factors[0].col(0)).norm() <
              1e-11 * std::max(1.0, full.at("u").norm()));
    }
}

TEST_CASE("oracle discretization error decays at the expected rate")
{
    auto exact = heat_exact();
    auto error_at = [&](int n) {
        auto spec = taps::heat_1d_spt<double>(n);
        spec.forcing = manufacture(spec, {{"u", exact}});
        auto full = oracle_full_solve(spec);
        return taps::full_grid_relative_l2_error(spec, full, {{"u", exact}});
    };
    const double e4 = error_at(4);
    const double e8 = error_at(8);
    // linear elements halve the mesh size: error ratio close to 2^2
    CHECK(e4 / e8 > 2.0);
    CHECK(e4 / e8 < 8.0);
}

TEST_CASE("mass-norm difference vanishes for the field's own expansion")
{
    auto spec = taps::heat_1d_spt<double>(3);
    spec.solver.modes = 2;
    Solver<double> solver(spec);
    auto state = solver.init_factors(19);
    std::map<std::string, Eigen::VectorXd> ref;
    ref.emplace("u", taps::expand_full(state.fields[0]));
    CHECK(taps::mass_norm_relative_difference(spec, state, ref) < 1e-13);
}

TEST_CASE("oracle rejects nonlinear and oversized problems")
{
    auto nl = taps::nonlinear_reaction_spt<double>(4);
    nl.forcing = manufacture(nl, {{"u", heat_exact()}});
    CHECK_THROWS_AS((void)oracle_full_solve(nl), std::invalid_argument);

    auto big = taps::heat_1d_spt<double>(40);
    CHECK_THROWS_AS((void)oracle_full_solve(big, 1000), std::invalid_argument);
}

TEST_CASE("fixing a parametric value folds the weight into the coefficient")
{
    auto spec = taps::heat_1d_spt<double>(8);
    auto restricted = taps::restrict_problem(spec, {{"alpha", 1.5}});
    CHECK(restricted.dims.size() == 2);
    CHECK(restricted.fields[0].dims == std::vector<std::string>{"x", "t"});

    bool found = false;
    for (const auto& term : restricted.terms)
        if (term.ops.count("x") &&
            term.ops.at("x").kind == taps::OperatorKind::stiffness)
        {
            found = true;
            CHECK(term.coeff == doctest::Approx(1.5).epsilon(1e-14));
        }
    CHECK(found);

    CHECK_THROWS_AS((void)taps::restrict_problem(spec, {{"bogus", 1.0}}),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)taps::restrict_problem(spec, {{"alpha", 9.0}}),
                    std::invalid_argument);
    // stiffness along a fixed dimension has no pointwise meaning
    CHECK_THROWS_AS((void)taps::restrict_problem(spec, {{"x", 0.5}}),
                    std::invalid_argument);
}

TEST_CASE("restricting a separable function fixes coordinates")
{
    SeparableFunction<double> f;
    f.add(2.0, {{"x", factors::sine(M_PI)}, {"alpha", factors::affine(1.0, 0.0)}});
    f.add(1.0, {{"t", factors::exponential(-1.0)}});

    auto restricted = taps::restrict_separable(f, {{"alpha", 1.7}});
    std::mt19937_64 rng(71);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int k = 0; k < 20; k++)
    {
        const double x = unit(rng), t = unit(rng);
        std::map<std::string, double> with{{"x", x}, {"alpha", 1.7}, {"t", t}};
        std::map<std::string, double> without{{"x", x}, {"t", t}};
        CHECK(std::abs(restricted.value(without) - f.value(with)) < 1e-14);
    }
}

TEST_CASE("restricting a separated field preserves pointwise values")
{
    auto spec = taps::heat_1d_spt<double>(6);
    spec.solver.modes = 3;
    Solver<double> solver(spec);
    auto state = solver.init_factors(23);
    std::mt19937_64 rng(24);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (auto& fac : state.fields[0].factors)
        for (Eigen::Index i = 0; i < fac.rows(); i++)
            for (Eigen::Index j = 0; j < fac.cols(); j++)
                fac(i, j) = gauss(rng);

    const double alpha_star = 1.31;
    auto restricted_spec = taps::restrict_problem(spec, {{"alpha", alpha_star}});
    auto restricted = taps::restrict_field(spec, state.fields[0], {{"alpha", alpha_star}});

    Solver<double> rsolver(restricted_spec);
    std::vector<taps::Mesh1D<double>> rmeshes = rsolver.meshes();
    auto rbases = rsolver.bases();
    std::vector<taps::Mesh1D<double>> fmeshes = solver.meshes();
    auto fbases = solver.bases();

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int k = 0; k < 25; k++)
    {
        const double x = unit(rng), t = unit(rng);
        std::map<std::string, double> with{{"x", x}, {"alpha", alpha_star}, {"t", t}};
        std::map<std::string, double> without{{"x", x}, {"t", t}};
        const double v_full = taps::evaluate(state.fields[0], fmeshes, fbases, with);
        const double v_restr = taps::evaluate(restricted, rmeshes, rbases, without);
        CHECK(std::abs(v_full - v_restr) < 1e-12 * std::max(1.0, std::abs(v_full)));
    }
}

TEST_CASE("heterogeneous restriction solves a pure space-time problem")
{
    auto spec = taps::heterogeneous_diffusivity<double>(1, 1, 1, 2);
    std::map<std::string, double> fixed{{"alpha_1", 1.4}};
    auto restricted = taps::restrict_problem(spec, fixed);
    CHECK(restricted.dims.size() == 4); // x, y, z, t
    CHECK(taps::validate(restricted).empty());
    // diffusion terms carry the fixed diffusivity as their coefficient
    for (const auto& term : restricted.terms)
        for (const auto& [dname, op] : term.ops)
            if (op.kind == taps::OperatorKind::stiffness)
                CHECK(term.coeff == doctest::Approx(1.4).epsilon(1e-14));
}
