#pragma once

#include <taps/types.hpp>

#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

namespace taps
{

// univariate building blocks closed under differentiation (each derivative
// is a scalar times a product of primitives); Indicator differentiates to
// zero, which is only valid when the surrounding use guarantees vanishing
// flux at its boundaries -- manufacture() checks that
template <typename T>
struct Primitive
{
    enum class kind_t
    {
        monomial,  // x^k
        affine,    // a x + b
        sine,      // sin(w x + phi)
        cosine,    // cos(w x + phi)
        exponential, // e^(a x)
        gaussian,  // exp(-((x - c) / r)^2)
        indicator  // 1 on [lo, hi]
    };

    kind_t kind = kind_t::monomial;
    int power = 0;
    T c0 = T(0), c1 = T(0);

    T value(T x) const
    {
        switch (kind)
        {
            case kind_t::monomial: return power == 0 ? T(1) : T(std::pow(x, power));
            case kind_t::affine: return c0 * x + c1;
            case kind_t::sine: return std::sin(c0 * x + c1);
            case kind_t::cosine: return std::cos(c0 * x + c1);
            case kind_t::exponential: return std::exp(c0 * x);
            case kind_t::gaussian:
            {
                T u = (x - c0) / c1;
                return std::exp(-u * u);
            }
            case kind_t::indicator: return (x >= c0 && x <= c1) ? T(1) : T(0);
        }
        return T(0);
    }
};

// scalar coefficient times a product of primitives
template <typename T>
struct Factor
{
    T coeff = T(1);
    std::vector<Primitive<T>> parts;

    T value(T x) const
    {
        T v = coeff;
        for (const auto& p : parts)
            v *= p.value(x);
        return v;
    }

    Factor operator*(const Factor& other) const
    {
        Factor out;
        out.coeff = coeff * other.coeff;
        out.parts = parts;
        out.parts.insert(out.parts.end(), other.parts.begin(), other.parts.end());
        return out;
    }
};

namespace factors
{

template <typename T>
Factor<T> constant(T c)
{
    Factor<T> f;
    f.coeff = c;
    return f;
}

template <typename T>
Factor<T> monomial(int k, T scale = T(1))
{
    Factor<T> f;
    f.coeff = scale;
    if (k > 0)
        f.parts.push_back({Primitive<T>::kind_t::monomial, k, T(0), T(0)});
    return f;
}

template <typename T>
Factor<T> affine(T a, T b)
{
    Factor<T> f;
    f.parts.push_back({Primitive<T>::kind_t::affine, 0, a, b});
    return f;
}

template <typename T>
Factor<T> sine(T omega, T phase = T(0))
{
    Factor<T> f;
    f.parts.push_back({Primitive<T>::kind_t::sine, 0, omega, phase});
    return f;
}

template <typename T>
Factor<T> cosine(T omega, T phase = T(0))
{
    Factor<T> f;
    f.parts.push_back({Primitive<T>::kind_t::cosine, 0, omega, phase});
    return f;
}

template <typename T>
Factor<T> exponential(T rate)
{
    Factor<T> f;
    f.parts.push_back({Primitive<T>::kind_t::exponential, 0, rate, T(0)});
    return f;
}

template <typename T>
Factor<T> gaussian(T center, T radius)
{
    Factor<T> f;
    f.parts.push_back({Primitive<T>::kind_t::gaussian, 0, center, radius});
    return f;
}

template <typename T>
Factor<T> indicator(T lo, T hi)
{
    Factor<T> f;
    f.parts.push_back({Primitive<T>::kind_t::indicator, 0, lo, hi});
    return f;
}

} // namespace factors

namespace detail
{

// d/dx of one primitive as a sum of factors
template <typename T>
std::vector<Factor<T>> derivative(const Primitive<T>& p)
{
    using K = typename Primitive<T>::kind_t;
    std::vector<Factor<T>> out;
    switch (p.kind)
    {
        case K::monomial:
            if (p.power > 0)
                out.push_back(factors::monomial(p.power - 1, T(p.power)));
            break;
        case K::affine:
            if (p.c0 != T(0))
                out.push_back(factors::constant(p.c0));
            break;
        case K::sine:
        {
            auto f = factors::cosine(p.c0, p.c1);
            f.coeff = p.c0;
            out.push_back(f);
            break;
        }
        case K::cosine:
        {
            auto f = factors::sine(p.c0, p.c1);
            f.coeff = -p.c0;
            out.push_back(f);
            break;
        }
        case K::exponential:
        {
            Factor<T> f;
            f.coeff = p.c0;
            f.parts.push_back(p);
            out.push_back(f);
            break;
        }
        case K::gaussian:
        {
            Factor<T> f = factors::affine(T(1), -p.c0);
            f.coeff = T(-2) / (p.c1 * p.c1);
            f.parts.push_back(p);
            out.push_back(f);
            break;
        }
        case K::indicator:
            break; // zero a.e.; flux condition checked by manufacture()
    }
    return out;
}

} // namespace detail

// product rule over the parts of a factor
template <typename T>
std::vector<Factor<T>> derivative(const Factor<T>& f)
{
    std::vector<Factor<T>> out;
    for (size_t i = 0; i < f.parts.size(); i++)
    {
        for (auto& dpart : detail::derivative(f.parts[i]))
        {
            Factor<T> term;
            term.coeff = f.coeff * dpart.coeff;
            for (size_t j = 0; j < f.parts.size(); j++)
                if (j != i)
                    term.parts.push_back(f.parts[j]);
            term.parts.insert(term.parts.end(), dpart.parts.begin(), dpart.parts.end());
            out.push_back(term);
        }
    }
    return out;
}

// one separable term: coeff * prod_d factor_d(x_d); dimensions without an
// entry are implicitly the constant 1
template <typename T>
struct SeparableTerm
{
    T coeff = T(1);
    std::map<std::string, Factor<T>> factor_by_dim;

    const Factor<T>* factor(const std::string& dim) const
    {
        auto it = factor_by_dim.find(dim);
        return it == factor_by_dim.end() ? nullptr : &it->second;
    }

    T value(const std::map<std::string, T>& point) const
    {
        T v = coeff;
        for (const auto& [dim, f] : factor_by_dim)
        {
            auto it = point.find(dim);
            if (it == point.end())
                throw std::invalid_argument("separable value: missing coordinate for dimension '" +
                                            dim + "'");
            v *= f.value(it->second);
        }
        return v;
    }
};

template <typename T>
struct SeparableFunction
{
    std::vector<SeparableTerm<T>> terms;

    bool empty() const { return terms.empty(); }

    T value(const std::map<std::string, T>& point) const
    {
        T v = T(0);
        for (const auto& t : terms)
            v += t.value(point);
        return v;
    }

    SeparableFunction& add(T coeff, std::map<std::string, Factor<T>> by_dim)
    {
        SeparableTerm<T> t;
        t.coeff = coeff;
        t.factor_by_dim = std::move(by_dim);
        terms.push_back(std::move(t));
        return *this;
    }
};

// pointwise product, expanded term by term
template <typename T>
SeparableFunction<T> product(const SeparableFunction<T>& a, const SeparableFunction<T>& b)
{
    SeparableFunction<T> out;
    for (const auto& ta : a.terms)
        for (const auto& tb : b.terms)
        {
            SeparableTerm<T> t;
            t.coeff = ta.coeff * tb.coeff;
            t.factor_by_dim = ta.factor_by_dim;
            for (const auto& [dim, f] : tb.factor_by_dim)
            {
                auto it = t.factor_by_dim.find(dim);
                if (it == t.factor_by_dim.end())
                    t.factor_by_dim.emplace(dim, f);
                else
                    it->second = it->second * f;
            }
            out.terms.push_back(std::move(t));
        }
    return out;
}

} // namespace taps
