#pragma once

#include <taps/presets.hpp>
#include <taps/study.hpp>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <set>

namespace taps
{

enum class RunMode
{
    solve,
    study,
    oracle_compare,
    validate
};

inline std::string to_string(RunMode mode)
{
    switch (mode)
    {
    case RunMode::solve:
        return "solve";
    case RunMode::study:
        return "study";
    case RunMode::oracle_compare:
        return "oracle-compare";
    case RunMode::validate:
        return "validate";
    }
    return "?";
}

template <typename T>
struct RunConfig
{
    RunMode mode = RunMode::solve;
    ProblemSpec<T> problem;
    std::map<std::string, SeparableFunction<T>> exact; // empty unless given
    StudyPlan<T> study;                                // populated for mode=study
    std::string output_dir = ".";
    int threads = 1;
    bool threads_given = false;
    bool seed_given = false;
    bool study_seeds_given = false;
};

namespace detail
{

// object wrapper that remembers which keys were read and rejects the rest
class StrictObject
{
  public:
    StrictObject(const nlohmann::json& j, std::string path)
        : j_(j), path_(std::move(path))
    {
        if (!j_.is_object())
            throw std::invalid_argument(where() + ": expected an object");
    }

    ~StrictObject() noexcept(false)
    {
        if (!std::uncaught_exceptions())
            finish();
    }

    bool has(const std::string& key)
    {
        seen_.insert(key);
        return j_.contains(key);
    }

    const nlohmann::json& at(const std::string& key)
    {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end())
            throw std::invalid_argument(member(key) + ": required key missing");
        return *it;
    }

    const nlohmann::json* find(const std::string& key)
    {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    void finish() const
    {
        for (const auto& item : j_.items())
            if (!seen_.count(item.key()))
                throw std::invalid_argument("unknown key '" + member(item.key()) + "'");
    }

    std::string where() const { return path_.empty() ? "<root>" : path_; }
    std::string member(const std::string& key) const
    {
        return path_.empty() ? key : path_ + "." + key;
    }

  private:
    const nlohmann::json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

inline double json_number(const nlohmann::json& j, const std::string& path)
{
    if (!j.is_number())
        throw std::invalid_argument(path + ": expected a number");
    return j.get<double>();
}

inline int json_int(const nlohmann::json& j, const std::string& path)
{
    if (!j.is_number_integer() && !j.is_number_unsigned())
        throw std::invalid_argument(path + ": expected an integer");
    return j.get<int>();
}

inline std::uint64_t json_u64(const nlohmann::json& j, const std::string& path)
{
    if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0))
        throw std::invalid_argument(path + ": expected a non-negative integer");
    return j.get<std::uint64_t>();
}

inline std::string json_string(const nlohmann::json& j, const std::string& path)
{
    if (!j.is_string())
        throw std::invalid_argument(path + ": expected a string");
    return j.get<std::string>();
}

template <typename T>
Primitive<T> parse_primitive(const nlohmann::json& j, const std::string& path)
{
    StrictObject obj(j, path);
    const std::string kind = json_string(obj.at("kind"), obj.member("kind"));
    Primitive<T> p;
    if (kind == "monomial")
    {
        p.kind = Primitive<T>::kind_t::monomial;
        p.power = json_int(obj.at("power"), obj.member("power"));
        if (p.power < 0)
            throw std::invalid_argument(obj.member("power") + ": must be >= 0");
    }
    else if (kind == "affine")
    {
        p.kind = Primitive<T>::kind_t::affine;
        p.c0 = T(json_number(obj.at("a"), obj.member("a")));
        p.c1 = T(json_number(obj.at("b"), obj.member("b")));
    }
    else if (kind == "sine" || kind == "cosine")
    {
        p.kind = kind == "sine" ? Primitive<T>::kind_t::sine : Primitive<T>::kind_t::cosine;
        p.c0 = T(json_number(obj.at("omega"), obj.member("omega")));
        if (auto* phase = obj.find("phase"))
            p.c1 = T(json_number(*phase, obj.member("phase")));
    }
    else if (kind == "exponential")
    {
        p.kind = Primitive<T>::kind_t::exponential;
        p.c0 = T(json_number(obj.at("rate"), obj.member("rate")));
    }
    else if (kind == "gaussian")
    {
        p.kind = Primitive<T>::kind_t::gaussian;
        p.c0 = T(json_number(obj.at("center"), obj.member("center")));
        p.c1 = T(json_number(obj.at("radius"), obj.member("radius")));
        if (!(p.c1 > T(0)))
            throw std::invalid_argument(obj.member("radius") + ": must be > 0");
    }
    else if (kind == "indicator")
    {
        p.kind = Primitive<T>::kind_t::indicator;
        p.c0 = T(json_number(obj.at("lo"), obj.member("lo")));
        p.c1 = T(json_number(obj.at("hi"), obj.member("hi")));
        if (!(p.c1 > p.c0))
            throw std::invalid_argument(path + ": indicator needs lo < hi");
    }
    else
    {
        throw std::invalid_argument(obj.member("kind") + ": unknown primitive '" + kind +
                                    "'");
    }
    return p;
}

// a factor is {"scale": s, "parts": [primitive...]} or the bare parts array
template <typename T>
Factor<T> parse_factor(const nlohmann::json& j, const std::string& path)
{
    Factor<T> f;
    const nlohmann::json* parts = nullptr;
    if (j.is_array())
    {
        parts = &j;
    }
    else
    {
        StrictObject obj(j, path);
        if (auto* scale = obj.find("scale"))
            f.coeff = T(json_number(*scale, obj.member("scale")));
        parts = &obj.at("parts");
        if (!parts->is_array())
            throw std::invalid_argument(obj.member("parts") + ": expected an array");
        obj.finish();
    }
    for (size_t i = 0; i < parts->size(); i++)
        f.parts.push_back(
            parse_primitive<T>((*parts)[i], path + ".parts[" + std::to_string(i) + "]"));
    return f;
}

// [{"coeff": c, "factors": {"x": factor, ...}}, ...]
template <typename T>
SeparableFunction<T> parse_separable(const nlohmann::json& j, const std::string& path)
{
    if (!j.is_array())
        throw std::invalid_argument(path + ": expected an array of terms");
    SeparableFunction<T> fn;
    for (size_t i = 0; i < j.size(); i++)
    {
        const std::string tpath = path + "[" + std::to_string(i) + "]";
        StrictObject obj(j[i], tpath);
        SeparableTerm<T> term;
        if (auto* coeff = obj.find("coeff"))
            term.coeff = T(json_number(*coeff, obj.member("coeff")));
        const nlohmann::json& factors = obj.at("factors");
        if (!factors.is_object())
            throw std::invalid_argument(obj.member("factors") + ": expected an object");
        for (const auto& item : factors.items())
            term.factor_by_dim.emplace(
                item.key(),
                parse_factor<T>(item.value(), obj.member("factors") + "." + item.key()));
        fn.terms.push_back(std::move(term));
    }
    return fn;
}

template <typename T>
UnivariateWeight<T> parse_weight(const nlohmann::json& j, const std::string& path)
{
    StrictObject obj(j, path);
    const std::string kind = json_string(obj.at("kind"), obj.member("kind"));
    if (kind == "none")
        return UnivariateWeight<T>::none_weight();
    if (kind == "coordinate")
        return UnivariateWeight<T>::coordinate();
    if (kind == "indicator")
        return UnivariateWeight<T>::indicator(
            T(json_number(obj.at("lo"), obj.member("lo"))),
            T(json_number(obj.at("hi"), obj.member("hi"))));
    if (kind == "function")
        return UnivariateWeight<T>::function(
            parse_factor<T>(obj.at("factor"), obj.member("factor")));
    throw std::invalid_argument(obj.member("kind") + ": unknown weight '" + kind + "'");
}

template <typename T>
OperatorSpec<T> parse_operator(const nlohmann::json& j, const std::string& path)
{
    StrictObject obj(j, path);
    const std::string kind = json_string(obj.at("kind"), obj.member("kind"));
    OperatorSpec<T> op;
    if (kind == "mass")
        op.kind = OperatorKind::mass;
    else if (kind == "stiffness")
        op.kind = OperatorKind::stiffness;
    else if (kind == "mixed_nb")
        op.kind = OperatorKind::mixed_nb;
    else if (kind == "mixed_bn")
        op.kind = OperatorKind::mixed_bn;
    else
        throw std::invalid_argument(obj.member("kind") + ": unknown operator '" + kind +
                                    "'");
    if (auto* weight = obj.find("weight"))
        op.weight = parse_weight<T>(*weight, obj.member("weight"));
    return op;
}

template <typename T>
ProblemSpec<T> parse_problem(const nlohmann::json& j, const std::string& path)
{
    if (j.is_string())
        return preset<T>(j.get<std::string>());

    StrictObject obj(j, path);
    ProblemSpec<T> spec;
    if (auto* name = obj.find("name"))
        spec.name = json_string(*name, obj.member("name"));
    else
        spec.name = "inline";

    const nlohmann::json& dims = obj.at("dims");
    if (!dims.is_array())
        throw std::invalid_argument(obj.member("dims") + ": expected an array");
    for (size_t i = 0; i < dims.size(); i++)
    {
        const std::string dpath = obj.member("dims") + "[" + std::to_string(i) + "]";
        StrictObject dobj(dims[i], dpath);
        DimensionSpec<T> dim;
        dim.name = json_string(dobj.at("name"), dobj.member("name"));
        const std::string role = json_string(dobj.at("role"), dobj.member("role"));
        if (role == "spatial")
            dim.role = dim_role::spatial;
        else if (role == "parametric")
            dim.role = dim_role::parametric;
        else if (role == "temporal")
            dim.role = dim_role::temporal;
        else
            throw std::invalid_argument(dobj.member("role") + ": unknown role '" + role +
                                        "'");
        dim.lo = T(json_number(dobj.at("lo"), dobj.member("lo")));
        dim.hi = T(json_number(dobj.at("hi"), dobj.member("hi")));
        dim.n_elements = json_int(dobj.at("n"), dobj.member("n"));
        if (auto* constrained = dobj.find("dirichlet"))
        {
            if (!constrained->is_array())
                throw std::invalid_argument(dobj.member("dirichlet") +
                                            ": expected an array");
            for (const auto& node : *constrained)
                dim.dirichlet_nodes.push_back(
                    json_int(node, dobj.member("dirichlet") + " entry"));
        }
        if (auto* p = dobj.find("p"))
            dim.basis.p = json_int(*p, dobj.member("p"));
        dim.basis.s = dim.basis.p;
        if (auto* s = dobj.find("s"))
            dim.basis.s = json_int(*s, dobj.member("s"));
        if (auto* a = dobj.find("a"))
            dim.basis.a = T(json_number(*a, dobj.member("a")));
        spec.dims.push_back(std::move(dim));
    }

    const nlohmann::json& fields = obj.at("fields");
    if (!fields.is_array())
        throw std::invalid_argument(obj.member("fields") + ": expected an array");
    for (size_t i = 0; i < fields.size(); i++)
    {
        const std::string fpath = obj.member("fields") + "[" + std::to_string(i) + "]";
        StrictObject fobj(fields[i], fpath);
        FieldSpec field;
        field.name = json_string(fobj.at("name"), fobj.member("name"));
        const nlohmann::json& fdims = fobj.at("dims");
        if (!fdims.is_array())
            throw std::invalid_argument(fobj.member("dims") + ": expected an array");
        for (const auto& d : fdims)
            field.dims.push_back(json_string(d, fobj.member("dims") + " entry"));
        spec.fields.push_back(std::move(field));
    }

    const nlohmann::json& terms = obj.at("terms");
    if (!terms.is_array())
        throw std::invalid_argument(obj.member("terms") + ": expected an array");
    for (size_t i = 0; i < terms.size(); i++)
    {
        const std::string tpath = obj.member("terms") + "[" + std::to_string(i) + "]";
        StrictObject tobj(terms[i], tpath);
        WeakFormTerm<T> term;
        term.test_field = json_string(tobj.at("test"), tobj.member("test"));
        term.trial_field = term.test_field;
        if (auto* trial = tobj.find("trial"))
            term.trial_field = json_string(*trial, tobj.member("trial"));
        if (auto* coeff = tobj.find("coeff"))
            term.coeff = T(json_number(*coeff, tobj.member("coeff")));
        if (auto* label = tobj.find("label"))
            term.label = json_string(*label, tobj.member("label"));
        const nlohmann::json& ops = tobj.at("ops");
        if (!ops.is_object())
            throw std::invalid_argument(tobj.member("ops") + ": expected an object");
        for (const auto& item : ops.items())
            term.ops.emplace(item.key(), parse_operator<T>(item.value(),
                                                           tobj.member("ops") + "." +
                                                               item.key()));
        spec.terms.push_back(std::move(term));
    }

    if (auto* nonlinear = obj.find("nonlinear"))
    {
        if (!nonlinear->is_array())
            throw std::invalid_argument(obj.member("nonlinear") + ": expected an array");
        for (size_t i = 0; i < nonlinear->size(); i++)
        {
            const std::string npath =
                obj.member("nonlinear") + "[" + std::to_string(i) + "]";
            StrictObject nobj((*nonlinear)[i], npath);
            NonlinearTerm<T> nl;
            const std::string kind = json_string(nobj.at("kind"), nobj.member("kind"));
            if (kind != "quadratic_reaction")
                throw std::invalid_argument(nobj.member("kind") +
                                            ": unknown nonlinear kind '" + kind + "'");
            nl.kind = nonlinear_kind::quadratic_reaction;
            nl.field = json_string(nobj.at("field"), nobj.member("field"));
            if (auto* coeff = nobj.find("coeff"))
                nl.coeff = T(json_number(*coeff, nobj.member("coeff")));
            spec.nonlinear.push_back(std::move(nl));
        }
    }

    if (auto* forcing = obj.find("forcing"))
    {
        if (!forcing->is_object())
            throw std::invalid_argument(obj.member("forcing") + ": expected an object");
        for (const auto& item : forcing->items())
            spec.forcing.emplace(item.key(),
                                 parse_separable<T>(item.value(), obj.member("forcing") +
                                                                      "." + item.key()));
    }
    return spec;
}

template <typename T>
void parse_solver_params(const nlohmann::json& j, const std::string& path,
                         SolverParams<T>& params)
{
    StrictObject obj(j, path);
    if (auto* v = obj.find("modes"))
        params.modes = json_int(*v, obj.member("modes"));
    if (auto* v = obj.find("tol_subspace"))
        params.tol_subspace = T(json_number(*v, obj.member("tol_subspace")));
    if (auto* v = obj.find("max_sweeps"))
        params.max_sweeps = json_int(*v, obj.member("max_sweeps"));
    if (auto* v = obj.find("tol_nonlinear"))
        params.tol_nonlinear = T(json_number(*v, obj.member("tol_nonlinear")));
    if (auto* v = obj.find("max_nonlinear"))
        params.max_nonlinear = json_int(*v, obj.member("max_nonlinear"));
    if (auto* v = obj.find("quadrature_increment"))
        params.quadrature_increment = json_int(*v, obj.member("quadrature_increment"));
    if (auto* v = obj.find("linear_solver"))
    {
        const std::string solver = json_string(*v, obj.member("linear_solver"));
        if (solver == "direct")
            params.linear_solver = SolverParams<T>::linear_solver_t::direct;
        else if (solver == "iterative" || solver == "conjugate_gradient")
            params.linear_solver = SolverParams<T>::linear_solver_t::iterative;
        else
            throw std::invalid_argument(obj.member("linear_solver") +
                                        ": unknown solver '" + solver + "'");
    }
    if (auto* v = obj.find("iterative_tol"))
        params.iterative_tol = T(json_number(*v, obj.member("iterative_tol")));
    if (auto* v = obj.find("iterative_max_iter"))
        params.iterative_max_iter = json_int(*v, obj.member("iterative_max_iter"));
    if (auto* v = obj.find("seed"))
        params.seed = json_u64(*v, obj.member("seed"));
}

} // namespace detail

template <typename T>
RunConfig<T> parse_config_json(const nlohmann::json& j)
{
    detail::StrictObject obj(j, "");
    RunConfig<T> config;

    const std::string mode = detail::json_string(obj.at("mode"), "mode");
    if (mode == "solve")
        config.mode = RunMode::solve;
    else if (mode == "study")
        config.mode = RunMode::study;
    else if (mode == "oracle-compare")
        config.mode = RunMode::oracle_compare;
    else if (mode == "validate")
        config.mode = RunMode::validate;
    else
        throw std::invalid_argument("mode: unknown mode '" + mode + "'");

    config.problem = detail::parse_problem<T>(obj.at("problem"), "problem");

    if (auto* n = obj.find("n"))
        set_resolution(config.problem, detail::json_int(*n, "n"));
    bool basis_given = false;
    BasisConfig<T> basis;
    if (auto* p = obj.find("p"))
    {
        basis.p = detail::json_int(*p, "p");
        basis.s = basis.p;
        basis_given = true;
    }
    if (auto* s = obj.find("s"))
    {
        basis.s = detail::json_int(*s, "s");
        basis_given = true;
    }
    if (auto* a = obj.find("a"))
    {
        basis.a = T(detail::json_number(*a, "a"));
        basis_given = true;
    }
    if (basis_given)
        set_basis(config.problem, basis);

    if (auto* modes = obj.find("M"))
        config.problem.solver.modes = detail::json_int(*modes, "M");
    if (auto* solver = obj.find("solver"))
        detail::parse_solver_params<T>(*solver, "solver", config.problem.solver);
    if (auto* seed = obj.find("seed"))
    {
        config.problem.solver.seed = detail::json_u64(*seed, "seed");
        config.seed_given = true;
    }
    if (auto* threads = obj.find("threads"))
    {
        config.threads = detail::json_int(*threads, "threads");
        if (config.threads < 1)
            throw std::invalid_argument("threads: must be >= 1");
        config.threads_given = true;
    }
    if (auto* out = obj.find("output_dir"))
        config.output_dir = detail::json_string(*out, "output_dir");

    if (auto* exact = obj.find("exact"))
    {
        if (!exact->is_object())
            throw std::invalid_argument("exact: expected an object keyed by field");
        for (const auto& item : exact->items())
            config.exact.emplace(item.key(), detail::parse_separable<T>(
                                                 item.value(), "exact." + item.key()));
    }
    if (auto* forcing = obj.find("forcing"))
    {
        if (!forcing->is_object())
            throw std::invalid_argument("forcing: expected an object keyed by field");
        config.problem.forcing.clear();
        for (const auto& item : forcing->items())
            config.problem.forcing.emplace(
                item.key(),
                detail::parse_separable<T>(item.value(), "forcing." + item.key()));
    }

    if (auto* study = obj.find("study"))
    {
        detail::StrictObject sobj(*study, "study");
        const nlohmann::json& levels = sobj.at("levels");
        if (!levels.is_array())
            throw std::invalid_argument("study.levels: expected an array");
        for (const auto& level : levels)
            config.study.levels.push_back(detail::json_int(level, "study.levels entry"));
        if (config.study.levels.size() < 2)
            throw std::invalid_argument("study.levels: needs >= 2 levels");
        for (size_t i = 1; i < config.study.levels.size(); i++)
            if (config.study.levels[i] <= config.study.levels[i - 1])
                throw std::invalid_argument("study.levels: must be strictly increasing");
        if (auto* hypers = sobj.find("hypers"))
        {
            if (!hypers->is_array())
                throw std::invalid_argument("study.hypers: expected an array");
            for (size_t i = 0; i < hypers->size(); i++)
            {
                const std::string hpath = "study.hypers[" + std::to_string(i) + "]";
                detail::StrictObject hobj((*hypers)[i], hpath);
                HyperPoint<T> hyper;
                hyper.p = detail::json_int(hobj.at("p"), hobj.member("p"));
                hyper.s = hyper.p;
                if (auto* s = hobj.find("s"))
                    hyper.s = detail::json_int(*s, hobj.member("s"));
                if (auto* a = hobj.find("a"))
                    hyper.a = T(detail::json_number(*a, hobj.member("a")));
                config.study.hypers.push_back(hyper);
            }
        }
        if (auto* modes = sobj.find("M"))
            config.study.modes = detail::json_int(*modes, "study.M");
        else
            config.study.modes = config.problem.solver.modes;
        if (auto* seeds = sobj.find("seeds"))
        {
            if (!seeds->is_array() || seeds->empty())
                throw std::invalid_argument("study.seeds: expected a non-empty array");
            config.study.seeds.clear();
            for (const auto& seed : *seeds)
                config.study.seeds.push_back(detail::json_u64(seed, "study.seeds entry"));
            config.study_seeds_given = true;
        }
        else
        {
            config.study.seeds = {config.problem.solver.seed};
        }
        if (auto* label = sobj.find("label"))
            config.study.label = detail::json_string(*label, "study.label");
    }

    if (config.mode == RunMode::study)
    {
        if (config.study.levels.empty())
            throw std::invalid_argument("study: mode=study requires a study block");
        if (config.exact.empty())
            throw std::invalid_argument(
                "exact: mode=study requires an exact solution per field");
        config.study.base = config.problem;
        config.study.exact = config.exact;
        config.study.threads = config.threads;
    }

    obj.finish();
    return config;
}

template <typename T>
RunConfig<T> parse_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::invalid_argument("cannot open config file '" + path.string() + "'");
    nlohmann::json j;
    try
    {
        j = nlohmann::json::parse(in);
    }
    catch (const nlohmann::json::parse_error& e)
    {
        throw std::invalid_argument("config parse error in '" + path.string() +
                                    "': " + e.what());
    }
    return parse_config_json<T>(j);
}

// the fully resolved configuration echoed into every run log
template <typename T>
nlohmann::json resolved_config_json(const RunConfig<T>& config)
{
    nlohmann::json j;
    j["mode"] = to_string(config.mode);
    j["problem"] = config.problem.name;
    j["output_dir"] = config.output_dir;
    j["threads"] = config.threads;

    nlohmann::json dims = nlohmann::json::array();
    for (const auto& dim : config.problem.dims)
    {
        nlohmann::json d;
        d["name"] = dim.name;
        d["role"] = to_string(dim.role);
        d["lo"] = double(dim.lo);
        d["hi"] = double(dim.hi);
        d["n"] = dim.n_elements;
        d["p"] = dim.basis.p;
        d["s"] = dim.basis.s;
        d["a"] = double(dim.basis.a);
        d["dirichlet"] = dim.dirichlet_nodes;
        dims.push_back(std::move(d));
    }
    j["dims"] = std::move(dims);

    nlohmann::json fields = nlohmann::json::array();
    for (const auto& field : config.problem.fields)
        fields.push_back({{"name", field.name}, {"dims", field.dims}});
    j["fields"] = std::move(fields);
    j["n_terms"] = config.problem.terms.size();
    j["n_nonlinear"] = config.problem.nonlinear.size();

    const auto& solver = config.problem.solver;
    j["solver"] = {
        {"modes", solver.modes},
        {"tol_subspace", double(solver.tol_subspace)},
        {"max_sweeps", solver.max_sweeps},
        {"tol_nonlinear", double(solver.tol_nonlinear)},
        {"max_nonlinear", solver.max_nonlinear},
        {"quadrature_increment", solver.quadrature_increment},
        {"linear_solver",
         solver.linear_solver == SolverParams<T>::linear_solver_t::direct ? "direct"
                                                                          : "iterative"},
        {"iterative_tol", double(solver.iterative_tol)},
        {"iterative_max_iter", solver.iterative_max_iter},
        {"seed", solver.seed},
    };

    if (!config.study.levels.empty())
    {
        nlohmann::json hypers = nlohmann::json::array();
        for (const auto& hyper : config.study.hypers)
            hypers.push_back({{"p", hyper.p}, {"s", hyper.s}, {"a", double(hyper.a)}});
        j["study"] = {
            {"levels", config.study.levels},
            {"hypers", std::move(hypers)},
            {"M", config.study.modes},
            {"seeds", config.study.seeds},
            {"label", config.study.label},
        };
    }
    return j;
}

} // namespace taps
