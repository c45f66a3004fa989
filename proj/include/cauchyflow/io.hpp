#pragma once

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <system_error>
#include <vector>

#include "cauchyflow/field.hpp"
#include "cauchyflow/grid.hpp"

namespace cauchyflow {

/// Shortest decimal string that round-trips the exact double. Used for all
/// CSV/report output so reruns diff byte-for-byte.
inline std::string format_double(double x) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

namespace detail {

inline void require_little_endian() {
    if constexpr (std::endian::native != std::endian::little)
        throw IoError("field files use little-endian layout; big-endian hosts are unsupported");
}

inline void write_u64(std::ostream& os, std::uint64_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline void write_f64(std::ostream& os, double v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline std::uint64_t read_u64(std::istream& is) {
    std::uint64_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!is) throw IoError("unexpected end of file while reading header");
    return v;
}

inline double read_f64(std::istream& is) {
    double v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!is) throw IoError("unexpected end of file while reading value");
    return v;
}

inline void write_block(std::ostream& os, const double* p, std::int64_t n) {
    os.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * 8));
}

inline void read_block(std::istream& is, double* p, std::int64_t n) {
    is.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n * 8));
    if (!is) throw IoError("unexpected end of file while reading field data");
}

}  // namespace detail

/// Grid header: dimension, resolutions, lengths, all 64-bit little-endian.
inline void write_grid_header(std::ostream& os, const Grid& g) {
    detail::require_little_endian();
    detail::write_u64(os, static_cast<std::uint64_t>(g.dim()));
    for (int a = 0; a < g.dim(); ++a) detail::write_u64(os, static_cast<std::uint64_t>(g.extent(a)));
    for (int a = 0; a < g.dim(); ++a) detail::write_f64(os, g.length(a));
}

inline Grid read_grid_header(std::istream& is) {
    detail::require_little_endian();
    const int dim = static_cast<int>(detail::read_u64(is));
    if (dim != 2 && dim != 3) throw IoError("field file: dimension must be 2 or 3");
    std::array<std::int64_t, 3> n{1, 1, 1};
    std::array<double, 3> len{two_pi, two_pi, two_pi};
    for (int a = 0; a < dim; ++a) n[a] = static_cast<std::int64_t>(detail::read_u64(is));
    for (int a = 0; a < dim; ++a) len[a] = detail::read_f64(is);
    return Grid(dim, n, len);
}

inline void write_field(std::ostream& os, const ScalarField& f) {
    write_grid_header(os, f.grid());
    detail::write_block(os, f.data(), f.size());
}

inline void write_field(std::ostream& os, const VectorField& u) {
    write_grid_header(os, u.grid());
    for (int c = 0; c < u.components(); ++c) detail::write_block(os, u.comp(c).data(), u.grid().size());
}

inline void write_field(std::ostream& os, const VorticityField& w) {
    write_grid_header(os, w.grid());
    for (int c = 0; c < w.components(); ++c) detail::write_block(os, w.comp(c).data(), w.grid().size());
}

inline ScalarField read_scalar_field(std::istream& is) {
    const Grid g = read_grid_header(is);
    ScalarField f(g);
    detail::read_block(is, f.data(), g.size());
    return f;
}

inline VectorField read_vector_field(std::istream& is) {
    const Grid g = read_grid_header(is);
    VectorField u(g);
    for (int c = 0; c < u.components(); ++c) detail::read_block(is, u.comp(c).data(), g.size());
    return u;
}

inline VorticityField read_vorticity_field(std::istream& is) {
    const Grid g = read_grid_header(is);
    VorticityField w(g);
    for (int c = 0; c < w.components(); ++c) detail::read_block(is, w.comp(c).data(), g.size());
    return w;
}

template <typename FieldT>
inline void save_field(const std::filesystem::path& path, const FieldT& f) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path.string());
    write_field(os, f);
}

inline ScalarField load_scalar_field(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open for reading: " + path.string());
    return read_scalar_field(is);
}

inline VectorField load_vector_field(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open for reading: " + path.string());
    return read_vector_field(is);
}

// ---- CSV inspection export ---------------------------------------------------

/// Rows of "i0,i1,i2,components..." (2D omits i2). Intended for eyeballing
/// and plotting, not for round-tripping.
inline void write_field_csv(std::ostream& os, const VectorField& u) {
    const Grid& g = u.grid();
    os << (g.dim() == 2 ? "i0,i1" : "i0,i1,i2");
    for (int c = 0; c < u.components(); ++c) os << ",c" << c;
    os << "\n";
    for (std::int64_t i = 0; i < g.size(); ++i) {
        const auto idx = g.unflatten(i);
        os << idx[0] << ',' << idx[1];
        if (g.dim() == 3) os << ',' << idx[2];
        for (int c = 0; c < u.components(); ++c) os << ',' << format_double(u.comp(c)[i]);
        os << "\n";
    }
}

inline void write_field_csv(std::ostream& os, const ScalarField& f) {
    const Grid& g = f.grid();
    os << (g.dim() == 2 ? "i0,i1,v" : "i0,i1,i2,v") << "\n";
    for (std::int64_t i = 0; i < g.size(); ++i) {
        const auto idx = g.unflatten(i);
        os << idx[0] << ',' << idx[1];
        if (g.dim() == 3) os << ',' << idx[2];
        os << ',' << format_double(f[i]) << "\n";
    }
}

}  // namespace cauchyflow
