#include <taps/manufacture.hpp>
#include <taps/presets.hpp>

#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

using taps::manufacture;
using taps::ProblemSpec;
using taps::SeparableFunction;
using taps::validate;
namespace factors = taps::factors;

namespace {

// 1D Poisson with homogeneous ends, used by several cases
ProblemSpec<double> poisson_1d(int n)
{
    ProblemSpec<double> spec;
    spec.name = "poisson_1d";
    taps::DimensionSpec<double> x;
    x.name = "x";
    x.role = taps::dim_role::spatial;
    x.lo = 0.0;
    x.hi = 1.0;
    x.n_elements = n;
    x.dirichlet_nodes = {0, n};
    spec.dims = {x};
    spec.fields = {{"u", {"x"}}};
    taps::WeakFormTerm<double> diff;
    diff.test_field = diff.trial_field = "u";
    diff.ops.emplace("x", taps::OperatorSpec<double>::stiffness());
    diff.label = "diffusion";
    spec.terms = {diff};
    return spec;
}

ProblemSpec<double> heat_without_initial_condition(int n)
{
    auto spec = taps::heat_1d_spt<double>(n);
    spec.dims[2].dirichlet_nodes.clear();
    return spec;
}

} // namespace

TEST_CASE("heat preset has the expected shape and validates cleanly")
{
    auto spec = taps::heat_1d_spt<double>(8);
    CHECK(spec.dims.size() == 3);
    CHECK(spec.fields.size() == 1);
    CHECK(spec.terms.size() == 2);
    CHECK(spec.dims[0].role == taps::dim_role::spatial);
    CHECK(spec.dims[1].role == taps::dim_role::parametric);
    CHECK(spec.dims[2].role == taps::dim_role::temporal);
    CHECK(spec.dims[1].lo == 1.0);
    CHECK(spec.dims[1].hi == 2.0);
    CHECK(validate(spec).empty());
}

TEST_CASE("heterogeneous preset grows one parametric dimension per subdomain")
{
    auto spec = taps::heterogeneous_diffusivity<double>(2, 2, 2);
    CHECK(spec.dims.size() == 12); // x, y, z, 8 diffusivities, t
    CHECK(spec.fields.size() == 1);
    CHECK(spec.terms.size() == 25); // time derivative + 8 subdomains x 3 axes
    CHECK(validate(spec).empty());

    int indicator_weighted = 0;
    for (const auto& term : spec.terms)
        for (const auto& [dim, op] : term.ops)
            if (op.weight.kind == taps::weight_kind::indicator)
                indicator_weighted++;
    CHECK(indicator_weighted > 0);
}

TEST_CASE("elasticity preset couples three fields")
{
    auto spec = taps::elasticity_3d<double>(8);
    CHECK(spec.fields.size() == 3);
    int cross = 0;
    for (const auto& term : spec.terms)
        if (term.test_field != term.trial_field)
            cross++;
    CHECK(cross == 6);
    CHECK(validate(spec).empty());
}

TEST_CASE("magnetostatics preset keeps the three components decoupled")
{
    auto spec = taps::magnetostatics_3d<double>(8);
    CHECK(spec.fields.size() == 3);
    for (const auto& term : spec.terms)
        CHECK(term.test_field == term.trial_field);
    for (const auto& field : spec.fields)
        CHECK(spec.forcing.count(field.name) == 1);
    CHECK(validate(spec).empty());
}

TEST_CASE("nonlinear preset adds a quadratic reaction")
{
    auto spec = taps::nonlinear_reaction_spt<double>(8);
    REQUIRE(spec.nonlinear.size() == 1);
    CHECK(spec.nonlinear[0].kind == taps::nonlinear_kind::quadratic_reaction);
    CHECK(spec.nonlinear[0].field == "u");
    CHECK(validate(spec).empty());
}

TEST_CASE("preset lookup parses subdomain counts")
{
    auto spec = taps::preset<double>("heterogeneous_diffusivity(1,2,2)");
    CHECK(spec.dims.size() == 8); // x, y, z, 4 diffusivities, t
    CHECK_THROWS_AS((void)taps::preset<double>("no_such_preset"), std::invalid_argument);
}

TEST_CASE("resolution changes remap boundary constraints")
{
    auto spec = taps::heat_1d_spt<double>(8);
    taps::set_resolution(spec, 16);
    CHECK(spec.dims[0].n_elements == 16);
    REQUIRE(spec.dims[0].dirichlet_nodes.size() == 2);
    CHECK(spec.dims[0].dirichlet_nodes[0] == 0);
    CHECK(spec.dims[0].dirichlet_nodes[1] == 16);
    CHECK(spec.dims[2].dirichlet_nodes == std::vector<taps::index_t>{0});

    // interior constraints cannot be carried across resolutions
    auto bad = taps::heat_1d_spt<double>(8);
    bad.dims[0].dirichlet_nodes = {3};
    CHECK_THROWS_AS(taps::set_resolution(bad, 16), std::invalid_argument);
}

TEST_CASE("validation pinpoints unknown dimensions")
{
    auto spec = poisson_1d(8);
    taps::WeakFormTerm<double> bad;
    bad.test_field = bad.trial_field = "u";
    bad.ops.emplace("y", taps::OperatorSpec<double>::mass());
    spec.terms.push_back(bad);
    auto issues = validate(spec);
    REQUIRE(!issues.empty());
    bool named = false;
    for (const auto& msg : issues)
        if (msg.find("'y'") != std::string::npos)
            named = true;
    CHECK(named);
}

TEST_CASE("validation flags fields without a coercive diagonal")
{
    auto spec = poisson_1d(8);
    spec.terms.clear(); // no term left that couples u with itself
    auto issues = validate(spec);
    REQUIRE(!issues.empty());
    bool found = false;
    for (const auto& msg : issues)
        if (msg.find("coercive") != std::string::npos && msg.find("'u'") != std::string::npos)
            found = true;
    CHECK(found);
}

TEST_CASE("validation checks basis and mesh parameters")
{
    auto spec = poisson_1d(8);
    spec.dims[0].basis.p = 2;
    spec.dims[0].basis.s = 1; // patch smaller than the order
    CHECK(!validate(spec).empty());

    auto spec2 = poisson_1d(8);
    spec2.dims[0].hi = spec2.dims[0].lo; // empty interval
    CHECK(!validate(spec2).empty());

    auto spec3 = poisson_1d(8);
    spec3.dims[0].dirichlet_nodes = {99};
    CHECK(!validate(spec3).empty());
}

TEST_CASE("validation requires time marching to start from a constrained node")
{
    auto spec = taps::heat_1d_spt<double>(8);
    spec.dims[2].dirichlet_nodes.clear();
    auto issues = validate(spec);
    REQUIRE(!issues.empty());
    bool mentions_t = false;
    for (const auto& msg : issues)
        if (msg.find("'t'") != std::string::npos)
            mentions_t = true;
    CHECK(mentions_t);
}

TEST_CASE("manufactured forcing for the heat problem matches the strong form")
{
    // exact solution sin(pi x) * e^{-t} with the time axis unconstrained so the
    // non-vanishing initial value is allowed
    auto spec = heat_without_initial_condition(8);
    std::map<std::string, SeparableFunction<double>> exact;
    SeparableFunction<double> g;
    g.add(1.0, {{"x", factors::sine(M_PI)}, {"t", factors::exponential(-1.0)}});
    exact.emplace("u", g);

    auto rhs = manufacture(spec, exact);
    REQUIRE(rhs.count("u") == 1);
    CHECK(rhs.at("u").terms.size() == 2);

    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int k = 0; k < 30; k++)
    {
        const double x = unit(rng);
        const double alpha = 1.0 + unit(rng);
        const double t = unit(rng);
        std::map<std::string, double> point{{"x", x}, {"alpha", alpha}, {"t", t}};
        const double expected = -std::sin(M_PI * x) * std::exp(-t) +
                                M_PI * M_PI * std::sin(M_PI * x) * alpha * std::exp(-t);
        CHECK(std::abs(rhs.at("u").value(point) - expected) <
              1e-12 * std::max(1.0, std::abs(expected)));
    }
}

TEST_CASE("manufactured forcing for 1D Poisson with a parabola is constant")
{
    auto spec = poisson_1d(8);
    std::map<std::string, SeparableFunction<double>> exact;
    SeparableFunction<double> g;
    g.add(1.0, {{"x", factors::monomial<double>(1) * factors::affine(-1.0, 1.0)}});
    exact.emplace("u", g);

    auto rhs = manufacture(spec, exact);
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int k = 0; k < 10; k++)
    {
        std::map<std::string, double> point{{"x", unit(rng)}};
        CHECK(std::abs(rhs.at("u").value(point) - 2.0) < 1e-12);
    }
}

TEST_CASE("zero exact solution manufactures zero forcing")
{
    auto spec = poisson_1d(8);
    std::map<std::string, SeparableFunction<double>> exact;
    SeparableFunction<double> g;
    g.add(0.0, {{"x", factors::sine(M_PI)}});
    exact.emplace("u", g);
    auto rhs = manufacture(spec, exact);
    std::map<std::string, double> point{{"x", 0.4}};
    CHECK(rhs.at("u").value(point) == 0.0);
}

TEST_CASE("manufacture is linear in the exact solution")
{
    auto spec = heat_without_initial_condition(8);
    SeparableFunction<double> g;
    g.add(1.0, {{"x", factors::sine(M_PI)}, {"t", factors::exponential(-1.0)}});
    SeparableFunction<double> g2;
    g2.add(2.0, {{"x", factors::sine(M_PI)}, {"t", factors::exponential(-1.0)}});

    auto rhs1 = manufacture(spec, {{"u", g}});
    auto rhs2 = manufacture(spec, {{"u", g2}});
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int k = 0; k < 20; k++)
    {
        std::map<std::string, double> point{
            {"x", unit(rng)}, {"alpha", 1.0 + unit(rng)}, {"t", unit(rng)}};
        const double v1 = rhs1.at("u").value(point);
        const double v2 = rhs2.at("u").value(point);
        CHECK(std::abs(v2 - 2.0 * v1) < 1e-12 * std::max(1.0, std::abs(v1)));
    }
}

TEST_CASE("quadratic reaction contributes the square of the exact solution")
{
    auto linear_spec = heat_without_initial_condition(8);
    auto nonlinear_spec = linear_spec;
    nonlinear_spec.nonlinear.push_back({taps::nonlinear_kind::quadratic_reaction, 1.0, "u"});

    SeparableFunction<double> g;
    g.add(1.0, {{"x", factors::sine(M_PI)}, {"t", factors::exponential(-1.0)}});
    auto rhs_lin = manufacture(linear_spec, {{"u", g}});
    auto rhs_nl = manufacture(nonlinear_spec, {{"u", g}});

    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int k = 0; k < 20; k++)
    {
        std::map<std::string, double> point{
            {"x", unit(rng)}, {"alpha", 1.0 + unit(rng)}, {"t", unit(rng)}};
        const double gv = g.value(point);
        const double diff = rhs_nl.at("u").value(point) - rhs_lin.at("u").value(point);
        CHECK(std::abs(diff - gv * gv) < 1e-12 * std::max(1.0, gv * gv));
    }
}

TEST_CASE("manufacture rejects exact solutions that violate constraints")
{
    // sin(pi x) e^{-t} does not vanish at the constrained node t = 0
    auto spec = taps::heat_1d_spt<double>(8);
    SeparableFunction<double> g;
    g.add(1.0, {{"x", factors::sine(M_PI)}, {"t", factors::exponential(-1.0)}});
    CHECK_THROWS_WITH_AS((void)manufacture(spec, {{"u", g}}),
                         doctest::Contains("dimension 't'"), std::invalid_argument);

    // the compliant variant passes: sin(pi x) * t e^{-t}
    SeparableFunction<double> ok;
    ok.add(1.0, {{"x", factors::sine(M_PI)},
                 {"t", factors::monomial<double>(1) * factors::exponential(-1.0)}});
    CHECK_NOTHROW((void)manufacture(spec, {{"u", ok}}));
}

TEST_CASE("manufacture rejects exact solutions using dimensions outside the field")
{
    auto spec = poisson_1d(8);
    SeparableFunction<double> g;
    g.add(1.0, {{"x", factors::sine(M_PI)}, {"t", factors::exponential(-1.0)}});
    CHECK_THROWS_AS((void)manufacture(spec, {{"u", g}}), std::invalid_argument);
}

TEST_CASE("manufacture requires an exact solution per field")
{
    auto spec = taps::elasticity_3d<double>(4);
    SeparableFunction<double> g;
    g.add(1.0, {{"x", factors::sine(M_PI)},
                {"y", factors::sine(M_PI)},
                {"z", factors::sine(M_PI)}});
    CHECK_THROWS_AS((void)manufacture(spec, {{"u", g}}), std::invalid_argument);
}
