#pragma once

#include <taps/problem.hpp>

#include <cmath>
#include <cstdio>

namespace taps
{

namespace detail
{

template <typename T>
DimensionSpec<T> make_dim(std::string name, dim_role role, T lo, T hi, int n_elements,
                          std::vector<index_t> constrained = {})
{
    DimensionSpec<T> dim;
    dim.name = std::move(name);
    dim.role = role;
    dim.lo = lo;
    dim.hi = hi;
    dim.n_elements = n_elements;
    dim.dirichlet_nodes = std::move(constrained);
    return dim;
}

} // namespace detail

// heat equation u_t - d/dx(alpha du/dx) = f over space x parameter x time,
// diffusivity alpha treated as a coordinate
template <typename T>
ProblemSpec<T> heat_1d_spt(int n_elements = 8)
{
    ProblemSpec<T> spec;
    spec.name = "heat_1d_spt";
    const int n = n_elements;
    spec.dims.push_back(detail::make_dim<T>("x", dim_role::spatial, T(0), T(1), n, {0, n}));
    spec.dims.push_back(detail::make_dim<T>("alpha", dim_role::parametric, T(1), T(2), n));
    spec.dims.push_back(detail::make_dim<T>("t", dim_role::temporal, T(0), T(1), n, {0}));
    spec.fields.push_back({"u", {"x", "alpha", "t"}});

    WeakFormTerm<T> time;
    time.test_field = time.trial_field = "u";
    time.ops["t"] = OperatorSpec<T>::mixed_nb();
    time.label = "time";
    spec.terms.push_back(time);

    WeakFormTerm<T> diffusion;
    diffusion.test_field = diffusion.trial_field = "u";
    diffusion.ops["x"] = OperatorSpec<T>::stiffness();
    diffusion.ops["alpha"] =
        OperatorSpec<T>::weighted_mass(UnivariateWeight<T>::coordinate());
    diffusion.label = "diffusion";
    spec.terms.push_back(diffusion);

    SeparableFunction<T> f;
    f.add(T(1), {{"x", factors::sine(T(M_PI))}});
    spec.forcing["u"] = f;
    return spec;
}

// three decoupled Poisson problems -lap(A_c) = mu0 J_c on the unit cube
template <typename T>
ProblemSpec<T> magnetostatics_3d(int n_elements = 8, T mu0 = T(1))
{
    ProblemSpec<T> spec;
    spec.name = "magnetostatics_3d";
    const int n = n_elements;
    const char* axes[3] = {"x", "y", "z"};
    for (const char* a : axes)
        spec.dims.push_back(detail::make_dim<T>(a, dim_role::spatial, T(0), T(1), n, {0, n}));

    const char* comps[3] = {"A_x", "A_y", "A_z"};
    for (int c = 0; c < 3; c++)
    {
        spec.fields.push_back({comps[c], {"x", "y", "z"}});
        for (int d = 0; d < 3; d++)
        {
            WeakFormTerm<T> lap;
            lap.test_field = lap.trial_field = comps[c];
            lap.ops[axes[d]] = OperatorSpec<T>::stiffness();
            lap.label = std::string("laplace[") + comps[c] + "," + axes[d] + "]";
            spec.terms.push_back(lap);
        }
        SeparableFunction<T> f;
        f.add(mu0, {{"x", factors::sine(T(M_PI))},
                    {"y", factors::sine(T(M_PI))},
                    {"z", factors::sine(T(M_PI))}});
        spec.forcing[comps[c]] = f;
    }
    return spec;
}

// linear elasticity, displacement form: mu lap(u_i) + (lambda + mu)
// d(div u)/dx_i + f_i = 0; the dilatational couplings are lagged
template <typename T>
ProblemSpec<T> elasticity_3d(int n_elements = 8, T mu = T(1), T lambda = T(1))
{
    ProblemSpec<T> spec;
    spec.name = "elasticity_3d";
    const int n = n_elements;
    const char* axes[3] = {"x", "y", "z"};
    for (const char* a : axes)
        spec.dims.push_back(detail::make_dim<T>(a, dim_role::spatial, T(0), T(1), n, {0, n}));

    const char* comps[3] = {"u", "v", "w"};
    for (int c = 0; c < 3; c++)
        spec.fields.push_back({comps[c], {"x", "y", "z"}});

    for (int c = 0; c < 3; c++)
    {
        for (int d = 0; d < 3; d++)
        {
            WeakFormTerm<T> lap;
            lap.coeff = mu;
            lap.test_field = lap.trial_field = comps[c];
            lap.ops[axes[d]] = OperatorSpec<T>::stiffness();
            lap.label = std::string("laplace[") + comps[c] + "," + axes[d] + "]";
            spec.terms.push_back(lap);
        }
        WeakFormTerm<T> dil;
        dil.coeff = lambda + mu;
        dil.test_field = dil.trial_field = comps[c];
        dil.ops[axes[c]] = OperatorSpec<T>::stiffness();
        dil.label = std::string("dilatation[") + comps[c] + "]";
        spec.terms.push_back(dil);

        for (int g = 0; g < 3; g++)
        {
            if (g == c)
                continue;
            WeakFormTerm<T> cross;
            cross.coeff = lambda + mu;
            cross.test_field = comps[c];
            cross.trial_field = comps[g];
            cross.ops[axes[c]] = OperatorSpec<T>::mixed_bn();
            cross.ops[axes[g]] = OperatorSpec<T>::mixed_nb();
            cross.label = std::string("dilatation[") + comps[c] + "," + comps[g] + "]";
            spec.terms.push_back(cross);
        }
    }
    return spec;
}

// heat problem with a quadratic reaction u^2
template <typename T>
ProblemSpec<T> nonlinear_reaction_spt(int n_elements = 8, T reaction = T(1))
{
    ProblemSpec<T> spec = heat_1d_spt<T>(n_elements);
    spec.name = "nonlinear_reaction_spt";
    NonlinearTerm<T> nl;
    nl.kind = nonlinear_kind::quadratic_reaction;
    nl.coeff = reaction;
    nl.field = "u";
    spec.nonlinear.push_back(nl);
    return spec;
}

// transient diffusion on the unit cube with piecewise-constant diffusivity:
// dx*dy*dz axis-aligned subdomains, the diffusivity of subdomain r being its
// own parametric coordinate alpha_r
template <typename T>
ProblemSpec<T> heterogeneous_diffusivity(int dx, int dy, int dz, int n_elements = 8,
                                         T alpha_lo = T(1), T alpha_hi = T(2))
{
    if (dx < 1 || dy < 1 || dz < 1)
        throw std::invalid_argument("heterogeneous_diffusivity: subdomain counts must be >= 1");
    ProblemSpec<T> spec;
    spec.name = "heterogeneous_diffusivity(" + std::to_string(dx) + "," + std::to_string(dy) +
                "," + std::to_string(dz) + ")";
    const int n = n_elements;
    const char* axes[3] = {"x", "y", "z"};
    const int counts[3] = {dx, dy, dz};
    for (const char* a : axes)
        spec.dims.push_back(detail::make_dim<T>(a, dim_role::spatial, T(0), T(1), n, {0, n}));
    const int r_total = dx * dy * dz;
    std::vector<std::string> alpha_names;
    for (int r = 0; r < r_total; r++)
    {
        alpha_names.push_back("alpha_" + std::to_string(r + 1));
        spec.dims.push_back(
            detail::make_dim<T>(alpha_names.back(), dim_role::parametric, alpha_lo, alpha_hi, n));
    }
    spec.dims.push_back(detail::make_dim<T>("t", dim_role::temporal, T(0), T(1), n, {0}));

    std::vector<std::string> all_dims = {"x", "y", "z"};
    all_dims.insert(all_dims.end(), alpha_names.begin(), alpha_names.end());
    all_dims.push_back("t");
    spec.fields.push_back({"u", all_dims});

    WeakFormTerm<T> time;
    time.test_field = time.trial_field = "u";
    time.ops["t"] = OperatorSpec<T>::mixed_nb();
    time.label = "time";
    spec.terms.push_back(time);

    for (int i = 0; i < dx; i++)
        for (int j = 0; j < dy; j++)
            for (int k = 0; k < dz; k++)
            {
                const int r = (i * dy + j) * dz + k;
                const int cell[3] = {i, j, k};
                for (int axis = 0; axis < 3; axis++)
                {
                    WeakFormTerm<T> term;
                    term.test_field = term.trial_field = "u";
                    for (int a2 = 0; a2 < 3; a2++)
                    {
                        T lo = T(cell[a2]) / T(counts[a2]);
                        T hi = T(cell[a2] + 1) / T(counts[a2]);
                        auto w = UnivariateWeight<T>::indicator(lo, hi);
                        term.ops[axes[a2]] = a2 == axis
                                                 ? OperatorSpec<T>::weighted_stiffness(w)
                                                 : OperatorSpec<T>::weighted_mass(w);
                    }
                    term.ops[alpha_names[size_t(r)]] =
                        OperatorSpec<T>::weighted_mass(UnivariateWeight<T>::coordinate());
                    term.label = "diffusion[r=" + std::to_string(r + 1) + "," + axes[axis] + "]";
                    spec.terms.push_back(term);
                }
            }
    return spec;
}

// name-based lookup; heterogeneous accepts "heterogeneous_diffusivity(2,2,2)"
template <typename T>
ProblemSpec<T> preset(const std::string& name)
{
    if (name == "heat_1d_spt")
        return heat_1d_spt<T>();
    if (name == "magnetostatics_3d")
        return magnetostatics_3d<T>();
    if (name == "elasticity_3d")
        return elasticity_3d<T>();
    if (name == "nonlinear_reaction_spt")
        return nonlinear_reaction_spt<T>();
    if (name.rfind("heterogeneous_diffusivity", 0) == 0)
    {
        int dx = 2, dy = 2, dz = 2;
        auto open = name.find('(');
        if (open != std::string::npos)
        {
            if (std::sscanf(name.c_str() + open, "(%d,%d,%d)", &dx, &dy, &dz) != 3)
                throw std::invalid_argument("preset: cannot parse subdomain counts in '" + name +
                                            "'");
        }
        else if (name != "heterogeneous_diffusivity")
            throw std::invalid_argument("unknown preset '" + name + "'");
        return heterogeneous_diffusivity<T>(dx, dy, dz);
    }
    throw std::invalid_argument("unknown preset '" + name + "'");
}

} // namespace taps
