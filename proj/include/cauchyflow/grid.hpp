#pragma once

#include <array>
#include <cstdint>
#include <numbers>
#include <string>

#include "cauchyflow/errors.hpp"

namespace cauchyflow {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Point in label (Lagrangian) or physical space. 2D uses components 0 and 1.
using Point = std::array<double, 3>;

/// Uniform periodic grid on a 2- or 3-dimensional box, default side 2*pi.
///
/// Storage convention for fields on the grid is row-major with the last
/// axis contiguous: flat = (i0*n1 + i1)*n2 + i2 in 3D, flat = i0*n1 + i1
/// in 2D. Resolutions must be even and at least 4 so that spectral
/// operators have a well-defined Nyquist convention.
class Grid {
  public:
    Grid(int dim, std::array<std::int64_t, 3> n, std::array<double, 3> length)
        : dim_(dim), n_(n), length_(length) {
        if (dim != 2 && dim != 3) throw InvalidFieldError("Grid: dimension must be 2 or 3");
        if (dim == 2) {
            n_[2] = 1;
            length_[2] = two_pi;
        }
        for (int a = 0; a < dim_; ++a) {
            if (n_[a] < 4 || n_[a] % 2 != 0)
                throw InvalidFieldError("Grid: resolution per axis must be even and >= 4, got " +
                                        std::to_string(n_[a]));
            if (!(length_[a] > 0.0)) throw InvalidFieldError("Grid: domain length must be positive");
        }
    }

    static Grid square(std::int64_t n, double length = two_pi) {
        return Grid(2, {n, n, 1}, {length, length, length});
    }
    static Grid cube(std::int64_t n, double length = two_pi) {
        return Grid(3, {n, n, n}, {length, length, length});
    }

    int dim() const { return dim_; }
    std::int64_t extent(int axis) const { return n_[axis]; }
    double length(int axis) const { return length_[axis]; }
    double spacing(int axis) const { return length_[axis] / static_cast<double>(n_[axis]); }

    std::int64_t size() const { return n_[0] * n_[1] * n_[2]; }

    std::int64_t flatten(std::int64_t i0, std::int64_t i1, std::int64_t i2 = 0) const {
        return (i0 * n_[1] + i1) * n_[2] + i2;
    }

    std::array<std::int64_t, 3> unflatten(std::int64_t flat) const {
        std::array<std::int64_t, 3> idx{};
        idx[2] = flat % n_[2];
        flat /= n_[2];
        idx[1] = flat % n_[1];
        idx[0] = flat / n_[1];
        return idx;
    }

    /// Physical coordinates of a grid node.
    Point point(std::int64_t flat) const {
        const auto idx = unflatten(flat);
        Point p{0.0, 0.0, 0.0};
        for (int a = 0; a < dim_; ++a) p[a] = static_cast<double>(idx[a]) * spacing(a);
        return p;
    }

    bool operator==(const Grid& o) const {
        if (dim_ != o.dim_) return false;
        for (int a = 0; a < dim_; ++a)
            if (n_[a] != o.n_[a] || length_[a] != o.length_[a]) return false;
        return true;
    }
    bool operator!=(const Grid& o) const { return !(*this == o); }

  private:
    int dim_;
    std::array<std::int64_t, 3> n_;
    std::array<double, 3> length_;
};

inline void require_same_grid(const Grid& a, const Grid& b, const char* where) {
    if (a != b) throw GridMismatchError(std::string(where) + ": operands live on different grids");
}

}  // namespace cauchyflow
