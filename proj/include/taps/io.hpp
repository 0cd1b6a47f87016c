#pragma once

#include <taps/study.hpp>
#include <taps/td_field.hpp>

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace taps
{

namespace detail
{

inline void pack_u64(std::uint64_t v, char out[8])
{
    for (int i = 0; i < 8; i++)
        out[i] = char((v >> (8 * i)) & 0xff);
}

inline std::uint64_t unpack_u64(const char in[8])
{
    std::uint64_t v = 0;
    for (int i = 0; i < 8; i++)
        v |= std::uint64_t(static_cast<unsigned char>(in[i])) << (8 * i);
    return v;
}

inline void pack_f64(double v, char out[8])
{
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    pack_u64(bits, out);
}

inline double unpack_f64(const char in[8])
{
    std::uint64_t bits = unpack_u64(in);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

inline std::string format_g17(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace detail

// factors file, binary variant: the magic line "TAPS1 binary\n", then
// length-prefixed names and 64-bit little-endian counts/values, factor
// matrices stored column-major
template <typename T>
void write_factors_binary(const std::filesystem::path& path, const TDField<T>& field)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    out << "TAPS1 binary\n";
    char buf[8];
    auto put_u64 = [&](std::uint64_t v) {
        detail::pack_u64(v, buf);
        out.write(buf, 8);
    };
    auto put_string = [&](const std::string& s) {
        put_u64(s.size());
        out.write(s.data(), std::streamsize(s.size()));
    };
    put_string(field.name);
    put_u64(field.dims.size());
    for (size_t d = 0; d < field.dims.size(); d++)
    {
        put_string(field.dims[d]);
        const MatrixX<T>& u = field.factors[d];
        put_u64(std::uint64_t(u.rows()));
        put_u64(std::uint64_t(u.cols()));
        for (index_t c = 0; c < u.cols(); c++)
            for (index_t r = 0; r < u.rows(); r++)
            {
                detail::pack_f64(double(u(r, c)), buf);
                out.write(buf, 8);
            }
    }
    if (!out)
        throw std::runtime_error("write failed for '" + path.string() + "'");
}

// factors file, textual variant: same structure with one token per line and
// %.17g values (round-trip exact for doubles)
template <typename T>
void write_factors_text(const std::filesystem::path& path, const TDField<T>& field)
{
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    out << "TAPS1 text\n";
    out << field.name << "\n";
    out << field.dims.size() << "\n";
    for (size_t d = 0; d < field.dims.size(); d++)
    {
        const MatrixX<T>& u = field.factors[d];
        out << field.dims[d] << " " << u.rows() << " " << u.cols() << "\n";
        for (index_t c = 0; c < u.cols(); c++)
            for (index_t r = 0; r < u.rows(); r++)
                out << detail::format_g17(double(u(r, c))) << "\n";
    }
    if (!out)
        throw std::runtime_error("write failed for '" + path.string() + "'");
}

template <typename T>
void write_factors(const std::filesystem::path& path, const TDField<T>& field,
                   bool binary = true)
{
    if (binary)
        write_factors_binary(path, field);
    else
        write_factors_text(path, field);
}

template <typename T>
TDField<T> read_factors(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open '" + path.string() + "'");
    std::string magic;
    std::getline(in, magic);
    TDField<T> field;

    if (magic == "TAPS1 binary")
    {
        char buf[8];
        auto get_u64 = [&]() {
            if (!in.read(buf, 8))
                throw std::runtime_error("truncated factors file '" + path.string() + "'");
            return detail::unpack_u64(buf);
        };
        auto get_string = [&]() {
            std::string s(get_u64(), '\0');
            if (!in.read(s.data(), std::streamsize(s.size())))
                throw std::runtime_error("truncated factors file '" + path.string() + "'");
            return s;
        };
        field.name = get_string();
        const std::uint64_t n_dims = get_u64();
        for (std::uint64_t d = 0; d < n_dims; d++)
        {
            field.dims.push_back(get_string());
            const auto rows = index_t(get_u64());
            const auto cols = index_t(get_u64());
            MatrixX<T> u(rows, cols);
            for (index_t c = 0; c < cols; c++)
                for (index_t r = 0; r < rows; r++)
                {
                    if (!in.read(buf, 8))
                        throw std::runtime_error("truncated factors file '" +
                                                 path.string() + "'");
                    u(r, c) = T(detail::unpack_f64(buf));
                }
            field.factors.push_back(std::move(u));
        }
    }
    else if (magic == "TAPS1 text")
    {
        std::string line;
        if (!std::getline(in, field.name))
            throw std::runtime_error("truncated factors file '" + path.string() + "'");
        size_t n_dims = 0;
        in >> n_dims;
        for (size_t d = 0; d < n_dims; d++)
        {
            std::string dname;
            index_t rows = 0, cols = 0;
            if (!(in >> dname >> rows >> cols))
                throw std::runtime_error("truncated factors file '" + path.string() + "'");
            field.dims.push_back(dname);
            MatrixX<T> u(rows, cols);
            for (index_t c = 0; c < cols; c++)
                for (index_t r = 0; r < rows; r++)
                {
                    double v;
                    if (!(in >> v))
                        throw std::runtime_error("truncated factors file '" +
                                                 path.string() + "'");
                    u(r, c) = T(v);
                }
            field.factors.push_back(std::move(u));
        }
    }
    else
    {
        throw std::runtime_error("'" + path.string() + "' is not a TAPS1 factors file");
    }

    if (field.dims.size() != field.factors.size() || field.dims.empty())
        throw std::runtime_error("malformed factors file '" + path.string() + "'");
    for (const auto& u : field.factors)
        if (u.cols() != field.factors.front().cols())
            throw std::runtime_error("inconsistent mode counts in '" + path.string() + "'");
    return field;
}

template <typename T>
std::string study_csv(const StudyResult<T>& result)
{
    std::ostringstream out;
    out << "preset,p,s,a,M,n,dof_equiv,rel_l2_error,rate,wall_seconds,converged\n";
    for (const auto& row : result.rows)
    {
        out << row.preset << "," << row.p << "," << row.s << ","
            << detail::format_g17(double(row.a)) << "," << row.modes << "," << row.n << ","
            << row.dof_equiv << "," << detail::format_g17(double(row.rel_l2_error)) << ",";
        if (row.exact_flag)
            out << "exact";
        else if (row.rate_fitted)
            out << detail::format_g17(double(row.rate));
        else
            out << "nan";
        out << "," << detail::format_g17(row.wall_seconds) << ","
            << (row.converged ? "true" : "false") << "\n";
    }
    return out.str();
}

template <typename T>
void write_study_csv(const std::filesystem::path& path, const StudyResult<T>& result)
{
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    out << study_csv(result);
    if (!out)
        throw std::runtime_error("write failed for '" + path.string() + "'");
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content)
{
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    out << content;
    if (!out)
        throw std::runtime_error("write failed for '" + path.string() + "'");
}

} // namespace taps
