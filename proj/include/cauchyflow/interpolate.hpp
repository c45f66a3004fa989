#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "cauchyflow/field.hpp"
#include "cauchyflow/spectral.hpp"

namespace cauchyflow {

/// Exact evaluation of grid fields at arbitrary points by direct summation
/// of the trigonometric interpolant. Expensive (O(modes) per point) but free
/// of interpolation error, which is what the theorem checks need. Assumes
/// effectively band-limited data: Nyquist modes are summed one-sided.
class TrigInterpolator {
  public:
    explicit TrigInterpolator(const ScalarField& f) : TrigInterpolator(std::vector{&f}) {}

    explicit TrigInterpolator(const VectorField& u) : TrigInterpolator(component_ptrs(u)) {}

    explicit TrigInterpolator(const std::vector<const ScalarField*>& comps)
        : grid_(comps.at(0)->grid()) {
        auto& ws = SpectralWorkspace::shared(grid_);
        const SpecLayout& lay = ws.layout();
        n0_ = lay.n[0];
        n1_ = lay.n[1];
        n2_ = grid_.dim() == 2 ? 1 : lay.n[2];
        full_.resize(comps.size());
        for (std::size_t c = 0; c < comps.size(); ++c) {
            require_same_grid(grid_, comps[c]->grid(), "TrigInterpolator");
            full_[c] = expand(ws.forward(*comps[c]), lay);
        }
    }

    const Grid& grid() const { return grid_; }
    int components() const { return static_cast<int>(full_.size()); }

    /// Evaluate all components at one point.
    std::array<double, 3> eval(const Point& y) const {
        std::array<double, 3> out{0.0, 0.0, 0.0};
        const auto p0 = phases(0, n0_, y[0]);
        const auto p1 = phases(1, n1_, y[1]);
        const auto p2 = grid_.dim() == 3 ? phases(2, n2_, y[2])
                                         : std::vector<std::complex<double>>{{1.0, 0.0}};
        for (std::size_t c = 0; c < full_.size(); ++c) {
            std::complex<double> acc(0.0, 0.0);
            const std::complex<double>* coef = full_[c].data();
            for (std::int64_t i0 = 0; i0 < n0_; ++i0) {
                const std::complex<double> q0 = p0[static_cast<std::size_t>(i0)];
                for (std::int64_t i1 = 0; i1 < n1_; ++i1) {
                    const std::complex<double> q01 = q0 * p1[static_cast<std::size_t>(i1)];
                    std::complex<double> inner(0.0, 0.0);
                    for (std::int64_t i2 = 0; i2 < n2_; ++i2)
                        inner += coef[(i0 * n1_ + i1) * n2_ + i2] * p2[static_cast<std::size_t>(i2)];
                    acc += q01 * inner;
                }
            }
            out[c] = acc.real();
        }
        return out;
    }

    double eval_scalar(const Point& y) const { return eval(y)[0]; }

  private:
    static std::vector<const ScalarField*> component_ptrs(const VectorField& u) {
        std::vector<const ScalarField*> p;
        for (int c = 0; c < u.components(); ++c) p.push_back(&u.comp(c));
        return p;
    }

    /// Expand the r2c half-spectrum to the full complex cube via Hermitian
    /// symmetry (the halved axis is the last grid axis).
    std::vector<std::complex<double>> expand(const Spectrum& half, const SpecLayout& lay) const {
        std::vector<std::complex<double>> full(
            static_cast<std::size_t>(n0_ * n1_ * n2_));
        if (grid_.dim() == 2) {
            const std::int64_t mh = lay.m[1];
            for (std::int64_t i0 = 0; i0 < n0_; ++i0) {
                for (std::int64_t i1 = 0; i1 < n1_; ++i1) {
                    std::complex<double> v;
                    if (i1 < mh) {
                        v = half[static_cast<std::size_t>(i0 * mh + i1)];
                    } else {
                        const std::int64_t j0 = (n0_ - i0) % n0_;
                        const std::int64_t j1 = n1_ - i1;
                        v = std::conj(half[static_cast<std::size_t>(j0 * mh + j1)]);
                    }
                    full[static_cast<std::size_t>(i0 * n1_ + i1)] = v;
                }
            }
        } else {
            const std::int64_t mh = lay.m[2];
            for (std::int64_t i0 = 0; i0 < n0_; ++i0)
                for (std::int64_t i1 = 0; i1 < n1_; ++i1)
                    for (std::int64_t i2 = 0; i2 < n2_; ++i2) {
                        std::complex<double> v;
                        if (i2 < mh) {
                            v = half[static_cast<std::size_t>((i0 * n1_ + i1) * mh + i2)];
                        } else {
                            const std::int64_t j0 = (n0_ - i0) % n0_;
                            const std::int64_t j1 = (n1_ - i1) % n1_;
                            const std::int64_t j2 = n2_ - i2;
                            v = std::conj(half[static_cast<std::size_t>((j0 * n1_ + j1) * mh + j2)]);
                        }
                        full[static_cast<std::size_t>((i0 * n1_ + i1) * n2_ + i2)] = v;
                    }
        }
        return full;
    }

    std::vector<std::complex<double>> phases(int axis, std::int64_t n, double y) const {
        std::vector<std::complex<double>> p(static_cast<std::size_t>(n));
        const double dk = two_pi / grid_.length(axis);
        for (std::int64_t i = 0; i < n; ++i) {
            const std::int64_t f = i <= n / 2 ? i : i - n;
            const double arg = dk * static_cast<double>(f) * y;
            p[static_cast<std::size_t>(i)] = std::complex<double>(std::cos(arg), std::sin(arg));
        }
        return p;
    }

    Grid grid_;
    std::int64_t n0_, n1_, n2_;
    std::vector<std::vector<std::complex<double>>> full_;
};

}  // namespace cauchyflow
