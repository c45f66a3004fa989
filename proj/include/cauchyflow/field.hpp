#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "cauchyflow/grid.hpp"

namespace cauchyflow {

/// Real scalar field sampled on a periodic grid.
class ScalarField {
  public:
    explicit ScalarField(const Grid& grid, double fill = 0.0)
        : grid_(grid), v_(static_cast<std::size_t>(grid.size()), fill) {}

    const Grid& grid() const { return grid_; }
    std::int64_t size() const { return grid_.size(); }

    double& operator[](std::int64_t i) { return v_[static_cast<std::size_t>(i)]; }
    double operator[](std::int64_t i) const { return v_[static_cast<std::size_t>(i)]; }

    double* data() { return v_.data(); }
    const double* data() const { return v_.data(); }

    ScalarField& operator+=(const ScalarField& o) {
        require_same_grid(grid_, o.grid_, "ScalarField::+=");
        for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += o.v_[i];
        return *this;
    }
    ScalarField& operator-=(const ScalarField& o) {
        require_same_grid(grid_, o.grid_, "ScalarField::-=");
        for (std::size_t i = 0; i < v_.size(); ++i) v_[i] -= o.v_[i];
        return *this;
    }
    ScalarField& operator*=(double s) {
        for (double& x : v_) x *= s;
        return *this;
    }

    friend ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
    friend ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
    friend ScalarField operator*(double s, ScalarField a) { return a *= s; }

  private:
    Grid grid_;
    std::vector<double> v_;
};

/// Vector field with dim(grid) components, stored component-major.
class VectorField {
  public:
    explicit VectorField(const Grid& grid) : grid_(grid) {
        comp_.reserve(grid.dim());
        for (int c = 0; c < grid.dim(); ++c) comp_.emplace_back(grid);
    }

    const Grid& grid() const { return grid_; }
    int components() const { return static_cast<int>(comp_.size()); }

    ScalarField& comp(int c) { return comp_[static_cast<std::size_t>(c)]; }
    const ScalarField& comp(int c) const { return comp_[static_cast<std::size_t>(c)]; }

    VectorField& operator+=(const VectorField& o) {
        require_same_grid(grid_, o.grid_, "VectorField::+=");
        for (std::size_t c = 0; c < comp_.size(); ++c) comp_[c] += o.comp_[c];
        return *this;
    }
    VectorField& operator-=(const VectorField& o) {
        require_same_grid(grid_, o.grid_, "VectorField::-=");
        for (std::size_t c = 0; c < comp_.size(); ++c) comp_[c] -= o.comp_[c];
        return *this;
    }
    VectorField& operator*=(double s) {
        for (auto& f : comp_) f *= s;
        return *this;
    }

    friend VectorField operator+(VectorField a, const VectorField& b) { return a += b; }
    friend VectorField operator-(VectorField a, const VectorField& b) { return a -= b; }
    friend VectorField operator*(double s, VectorField a) { return a *= s; }

  private:
    Grid grid_;
    std::vector<ScalarField> comp_;
};

/// d x d tensor field; entry (i, j) holds d x_i / d a_j for Jacobians.
class TensorField {
  public:
    explicit TensorField(const Grid& grid) : grid_(grid) {
        const int d = grid.dim();
        comp_.reserve(static_cast<std::size_t>(d) * d);
        for (int c = 0; c < d * d; ++c) comp_.emplace_back(grid);
    }

    const Grid& grid() const { return grid_; }

    ScalarField& at(int i, int j) { return comp_[static_cast<std::size_t>(i * grid_.dim() + j)]; }
    const ScalarField& at(int i, int j) const {
        return comp_[static_cast<std::size_t>(i * grid_.dim() + j)];
    }

  private:
    Grid grid_;
    std::vector<ScalarField> comp_;
};

/// Codomain of the curl: one component in 2D, three in 3D. Also the type of
/// vorticity and of the Cauchy invariant field.
class VorticityField {
  public:
    explicit VorticityField(const Grid& grid) : grid_(grid) {
        const int n = grid.dim() == 2 ? 1 : 3;
        comp_.reserve(static_cast<std::size_t>(n));
        for (int c = 0; c < n; ++c) comp_.emplace_back(grid);
    }

    const Grid& grid() const { return grid_; }
    int components() const { return static_cast<int>(comp_.size()); }
    bool is_scalar() const { return comp_.size() == 1; }

    ScalarField& comp(int c) { return comp_[static_cast<std::size_t>(c)]; }
    const ScalarField& comp(int c) const { return comp_[static_cast<std::size_t>(c)]; }

    /// The single component of a 2D vorticity-like field.
    ScalarField& scalar() { return comp_[0]; }
    const ScalarField& scalar() const { return comp_[0]; }

    VorticityField& operator-=(const VorticityField& o) {
        require_same_grid(grid_, o.grid_, "VorticityField::-=");
        for (std::size_t c = 0; c < comp_.size(); ++c) comp_[c] -= o.comp_[c];
        return *this;
    }
    VorticityField& operator*=(double s) {
        for (auto& f : comp_) f *= s;
        return *this;
    }
    friend VorticityField operator-(VorticityField a, const VorticityField& b) { return a -= b; }

  private:
    Grid grid_;
    std::vector<ScalarField> comp_;
};

// ---- norms and small helpers ------------------------------------------------

inline double linf(const ScalarField& f) {
    double m = 0.0;
    for (std::int64_t i = 0; i < f.size(); ++i) m = std::max(m, std::abs(f[i]));
    return m;
}

inline double linf(const VectorField& u) {
    double m = 0.0;
    for (int c = 0; c < u.components(); ++c) m = std::max(m, linf(u.comp(c)));
    return m;
}

inline double linf(const VorticityField& w) {
    double m = 0.0;
    for (int c = 0; c < w.components(); ++c) m = std::max(m, linf(w.comp(c)));
    return m;
}

inline double mean(const ScalarField& f) {
    double s = 0.0;
    for (std::int64_t i = 0; i < f.size(); ++i) s += f[i];
    return s / static_cast<double>(f.size());
}

inline bool all_finite(const ScalarField& f) {
    for (std::int64_t i = 0; i < f.size(); ++i)
        if (!std::isfinite(f[i])) return false;
    return true;
}

inline bool all_finite(const VectorField& u) {
    for (int c = 0; c < u.components(); ++c)
        if (!all_finite(u.comp(c))) return false;
    return true;
}

inline void require_finite(const ScalarField& f, const char* where) {
    if (!all_finite(f)) throw InvalidFieldError(std::string(where) + ": non-finite input values");
}

inline void require_finite(const VectorField& u, const char* where) {
    if (!all_finite(u)) throw InvalidFieldError(std::string(where) + ": non-finite input values");
}

}  // namespace cauchyflow
