#pragma once

#include <fftw3.h>

#include <array>
#include <complex>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <tuple>
#include <vector>

#include "cauchyflow/field.hpp"
#include "cauchyflow/grid.hpp"

namespace cauchyflow {

using Spectrum = std::vector<std::complex<double>>;

/// Real-to-complex transform layout for a grid: the last grid axis is
/// halved, all entries row-major. Integer frequencies f satisfy
/// -n/2 < f <= n/2 on full axes and 0 <= f <= n/2 on the halved axis.
struct SpecLayout {
    int dim;
    std::array<std::int64_t, 3> n;   // grid extents
    std::array<std::int64_t, 3> m;   // spectral extents (m[2] = 1 in 2D)
    std::array<double, 3> dk;        // 2*pi / L per axis
    std::int64_t size;

    explicit SpecLayout(const Grid& g) : dim(g.dim()) {
        n = {g.extent(0), g.extent(1), g.extent(2)};
        if (dim == 2) {
            m = {n[0], n[1] / 2 + 1, 1};
        } else {
            m = {n[0], n[1], n[2] / 2 + 1};
        }
        for (int a = 0; a < 3; ++a) dk[a] = a < dim ? two_pi / g.length(a) : 0.0;
        size = m[0] * m[1] * m[2];
    }

    /// Wavenumber used by differentiation: Nyquist modes are annihilated so
    /// that derivatives of real fields stay real and odd symmetry holds.
    double k_deriv(int axis, std::int64_t f) const {
        if (2 * f == n[axis] || 2 * f == -n[axis]) return 0.0;
        return dk[axis] * static_cast<double>(f);
    }
    double k_raw(int axis, std::int64_t f) const { return dk[axis] * static_cast<double>(f); }
};

/// Visit every spectral entry with its flat index and integer frequencies.
template <typename F>
inline void for_each_mode(const SpecLayout& lay, F&& fn) {
    if (lay.dim == 2) {
        std::int64_t idx = 0;
        for (std::int64_t i0 = 0; i0 < lay.n[0]; ++i0) {
            const std::int64_t f0 = i0 <= lay.n[0] / 2 ? i0 : i0 - lay.n[0];
            for (std::int64_t f1 = 0; f1 < lay.m[1]; ++f1, ++idx) fn(idx, f0, f1, std::int64_t{0});
        }
    } else {
        std::int64_t idx = 0;
        for (std::int64_t i0 = 0; i0 < lay.n[0]; ++i0) {
            const std::int64_t f0 = i0 <= lay.n[0] / 2 ? i0 : i0 - lay.n[0];
            for (std::int64_t i1 = 0; i1 < lay.n[1]; ++i1) {
                const std::int64_t f1 = i1 <= lay.n[1] / 2 ? i1 : i1 - lay.n[1];
                for (std::int64_t f2 = 0; f2 < lay.m[2]; ++f2, ++idx) fn(idx, f0, f1, f2);
            }
        }
    }
}

/// Cached FFTW plans + aligned buffers for one grid signature. Plan creation
/// is serialized globally (FFTW requirement); instances are per-thread, so
/// execution never races on the shared buffers.
class SpectralWorkspace {
  public:
    explicit SpectralWorkspace(const Grid& g) : lay_(g) {
        const std::int64_t nreal = g.size();
        real_ = fftw_alloc_real(static_cast<std::size_t>(nreal));
        cplx_ = fftw_alloc_complex(static_cast<std::size_t>(lay_.size));
        std::array<int, 3> ni{static_cast<int>(lay_.n[0]), static_cast<int>(lay_.n[1]),
                              static_cast<int>(lay_.n[2])};
        std::lock_guard<std::mutex> lock(planner_mutex());
        fwd_ = fftw_plan_dft_r2c(g.dim(), ni.data(), real_, cplx_, FFTW_ESTIMATE);
        bwd_ = fftw_plan_dft_c2r(g.dim(), ni.data(), cplx_, real_, FFTW_ESTIMATE);
        if (fwd_ == nullptr || bwd_ == nullptr) throw Error("SpectralWorkspace: fftw planning failed");
    }

    ~SpectralWorkspace() {
        std::lock_guard<std::mutex> lock(planner_mutex());
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(bwd_);
        fftw_free(real_);
        fftw_free(cplx_);
    }

    SpectralWorkspace(const SpectralWorkspace&) = delete;
    SpectralWorkspace& operator=(const SpectralWorkspace&) = delete;

    const SpecLayout& layout() const { return lay_; }

    /// Grid samples -> normalized trig-interpolant coefficients.
    Spectrum forward(const ScalarField& f) {
        const std::int64_t nreal = f.size();
        for (std::int64_t i = 0; i < nreal; ++i) real_[i] = f[i];
        fftw_execute(fwd_);
        Spectrum out(static_cast<std::size_t>(lay_.size));
        const double norm = 1.0 / static_cast<double>(nreal);
        auto* c = reinterpret_cast<std::complex<double>*>(cplx_);
        for (std::int64_t i = 0; i < lay_.size; ++i) out[static_cast<std::size_t>(i)] = c[i] * norm;
        return out;
    }

    /// Coefficients -> grid samples (inverse of forward()).
    ScalarField inverse(const Spectrum& spec, const Grid& g) {
        auto* c = reinterpret_cast<std::complex<double>*>(cplx_);
        for (std::int64_t i = 0; i < lay_.size; ++i) c[i] = spec[static_cast<std::size_t>(i)];
        fftw_execute(bwd_);
        ScalarField out(g);
        for (std::int64_t i = 0; i < g.size(); ++i) out[i] = real_[i];
        return out;
    }

    /// Per-thread workspace cache keyed by grid signature.
    static SpectralWorkspace& shared(const Grid& g) {
        using Key = std::tuple<int, std::int64_t, std::int64_t, std::int64_t, double, double, double>;
        thread_local std::map<Key, std::unique_ptr<SpectralWorkspace>> cache;
        Key key{g.dim(),   g.extent(0), g.extent(1), g.extent(2),
                g.length(0), g.length(1), g.length(2)};
        auto it = cache.find(key);
        if (it == cache.end()) it = cache.emplace(key, std::make_unique<SpectralWorkspace>(g)).first;
        return *it->second;
    }

  private:
    static std::mutex& planner_mutex() {
        static std::mutex m;
        return m;
    }

    SpecLayout lay_;
    double* real_;
    fftw_complex* cplx_;
    fftw_plan fwd_;
    fftw_plan bwd_;
};

// ---- differential operators -------------------------------------------------

/// Spectrally exact gradient of the trigonometric interpolant; each output
/// component has zero mean.
inline VectorField gradient(const ScalarField& f) {
    require_finite(f, "gradient");
    auto& ws = SpectralWorkspace::shared(f.grid());
    const auto& lay = ws.layout();
    const Spectrum spec = ws.forward(f);
    VectorField out(f.grid());
    Spectrum comp(spec.size());
    for (int a = 0; a < f.grid().dim(); ++a) {
        for_each_mode(lay, [&](std::int64_t i, std::int64_t f0, std::int64_t f1, std::int64_t f2) {
            const std::int64_t fa = a == 0 ? f0 : (a == 1 ? f1 : f2);
            comp[static_cast<std::size_t>(i)] =
                spec[static_cast<std::size_t>(i)] * std::complex<double>(0.0, lay.k_deriv(a, fa));
        });
        out.comp(a) = ws.inverse(comp, f.grid());
    }
    return out;
}

inline ScalarField divergence(const VectorField& u) {
    require_finite(u, "divergence");
    auto& ws = SpectralWorkspace::shared(u.grid());
    const auto& lay = ws.layout();
    Spectrum acc(static_cast<std::size_t>(lay.size), std::complex<double>(0.0, 0.0));
    for (int a = 0; a < u.grid().dim(); ++a) {
        const Spectrum spec = ws.forward(u.comp(a));
        for_each_mode(lay, [&](std::int64_t i, std::int64_t f0, std::int64_t f1, std::int64_t f2) {
            const std::int64_t fa = a == 0 ? f0 : (a == 1 ? f1 : f2);
            acc[static_cast<std::size_t>(i)] +=
                spec[static_cast<std::size_t>(i)] * std::complex<double>(0.0, lay.k_deriv(a, fa));
        });
    }
    return ws.inverse(acc, u.grid());
}

/// Spectral curl: three components in 3D, the single scalar d1 u2 - d2 u1
/// in 2D. In 3D the result is divergence-free to rounding.
inline VorticityField curl(const VectorField& u) {
    require_finite(u, "curl");
    auto& ws = SpectralWorkspace::shared(u.grid());
    const auto& lay = ws.layout();
    const Grid& g = u.grid();
    VorticityField out(g);
    if (g.dim() == 2) {
        const Spectrum s0 = ws.forward(u.comp(0));
        const Spectrum s1 = ws.forward(u.comp(1));
        Spectrum w(s0.size());
        for_each_mode(lay, [&](std::int64_t i, std::int64_t f0, std::int64_t f1, std::int64_t) {
            const auto ii = static_cast<std::size_t>(i);
            w[ii] = std::complex<double>(0.0, 1.0) *
                    (lay.k_deriv(0, f0) * s1[ii] - lay.k_deriv(1, f1) * s0[ii]);
        });
        out.scalar() = ws.inverse(w, g);
        return out;
    }
    std::array<Spectrum, 3> s{ws.forward(u.comp(0)), ws.forward(u.comp(1)), ws.forward(u.comp(2))};
    Spectrum w(s[0].size());
    for (int c = 0; c < 3; ++c) {
        const int a1 = (c + 1) % 3, a2 = (c + 2) % 3;
        for_each_mode(lay, [&](std::int64_t i, std::int64_t f0, std::int64_t f1, std::int64_t f2) {
            const std::array<std::int64_t, 3> f{f0, f1, f2};
            const auto ii = static_cast<std::size_t>(i);
            w[ii] = std::complex<double>(0.0, 1.0) *
                    (lay.k_deriv(a1, f[a1]) * s[a2][ii] - lay.k_deriv(a2, f[a2]) * s[a1][ii]);
        });
        out.comp(c) = ws.inverse(w, g);
    }
    return out;
}

struct HelmholtzParts {
    VectorField solenoidal;
    VectorField gradient_part;
    std::array<double, 3> mean;
};

/// Unique periodic-domain splitting u = solenoidal + gradient_part + mean,
/// with both parts zero-mean and the sum exactly reproducing the input.
inline HelmholtzParts helmholtz_decompose(const VectorField& u) {
    require_finite(u, "helmholtz_decompose");
    auto& ws = SpectralWorkspace::shared(u.grid());
    const auto& lay = ws.layout();
    const Grid& g = u.grid();
    const int d = g.dim();

    std::vector<Spectrum> s;
    s.reserve(static_cast<std::size_t>(d));
    for (int a = 0; a < d; ++a) s.push_back(ws.forward(u.comp(a)));

    HelmholtzParts parts{VectorField(g), VectorField(g), {0.0, 0.0, 0.0}};
    for (int a = 0; a < d; ++a) {
        parts.mean[static_cast<std::size_t>(a)] = s[static_cast<std::size_t>(a)][0].real();
    }

    std::vector<Spectrum> grad(static_cast<std::size_t>(d),
                               Spectrum(static_cast<std::size_t>(lay.size)));
    for_each_mode(lay, [&](std::int64_t i, std::int64_t f0, std::int64_t f1, std::int64_t f2) {
        const std::array<std::int64_t, 3> f{f0, f1, f2};
        const auto ii = static_cast<std::size_t>(i);
        double k2 = 0.0;
        std::array<double, 3> k{0.0, 0.0, 0.0};
        for (int a = 0; a < d; ++a) {
            k[static_cast<std::size_t>(a)] = lay.k_raw(a, f[static_cast<std::size_t>(a)]);
            k2 += k[static_cast<std::size_t>(a)] * k[static_cast<std::size_t>(a)];
        }
        if (k2 == 0.0) {
            for (int a = 0; a < d; ++a) grad[static_cast<std::size_t>(a)][ii] = 0.0;
            return;
        }
        std::complex<double> kdotu(0.0, 0.0);
        for (int a = 0; a < d; ++a)
            kdotu += k[static_cast<std::size_t>(a)] * s[static_cast<std::size_t>(a)][ii];
        for (int a = 0; a < d; ++a)
            grad[static_cast<std::size_t>(a)][ii] = k[static_cast<std::size_t>(a)] * kdotu / k2;
    });

    for (int a = 0; a < d; ++a) {
        const auto ia = static_cast<std::size_t>(a);
        Spectrum sol(s[ia].size());
        for (std::size_t i = 0; i < sol.size(); ++i) sol[i] = s[ia][i] - grad[ia][i];
        sol[0] = 0.0;  // mean carried separately
        parts.gradient_part.comp(a) = ws.inverse(grad[ia], g);
        parts.solenoidal.comp(a) = ws.inverse(sol, g);
    }
    return parts;
}

/// Solves curl(u) = w, div(u) = d for the zero-mean field u. The curl source
/// must itself be divergence-free (and zero-mean); otherwise the system is
/// inconsistent and an InconsistentSourceError is thrown.
inline VectorField invert_curl_div(const VorticityField& w, const ScalarField& d,
                                   double consistency_tol = 1e-8) {
    require_same_grid(w.grid(), d.grid(), "invert_curl_div");
    require_finite(d, "invert_curl_div");
    for (int c = 0; c < w.components(); ++c) require_finite(w.comp(c), "invert_curl_div");

    const Grid& g = w.grid();
    auto& ws = SpectralWorkspace::shared(g);
    const auto& lay = ws.layout();

    const double wscale = std::max(1.0, linf(w));
    const double dscale = std::max(1.0, linf(d));
    if (std::abs(mean(d)) > consistency_tol * dscale)
        throw InconsistentSourceError("invert_curl_div: divergence source has nonzero mean");
    for (int c = 0; c < w.components(); ++c)
        if (std::abs(mean(w.comp(c))) > consistency_tol * wscale)
            throw InconsistentSourceError("invert_curl_div: curl source has nonzero mean");

    const Spectrum ds = ws.forward(d);
    VectorField out(g);

    if (g.dim() == 2) {
        const Spectrum wspec = ws.forward(w.scalar());
        Spectrum u0(wspec.size()), u1(wspec.size());
        for_each_mode(lay, [&](std::int64_t i, std::int64_t f0, std::int64_t f1, std::int64_t) {
            const auto ii = static_cast<std::size_t>(i);
            const double k0 = lay.k_deriv(0, f0), k1 = lay.k_deriv(1, f1);
            const double k2 = k0 * k0 + k1 * k1;
            if (k2 == 0.0) {
                u0[ii] = u1[ii] = 0.0;
                return;
            }
            const std::complex<double> mi(0.0, -1.0);
            u0[ii] = mi * (k0 * ds[ii] - k1 * wspec[ii]) / k2;
            u1[ii] = mi * (k1 * ds[ii] + k0 * wspec[ii]) / k2;
        });
        out.comp(0) = ws.inverse(u0, g);
        out.comp(1) = ws.inverse(u1, g);
    } else {
        std::array<Spectrum, 3> wsv{ws.forward(w.comp(0)), ws.forward(w.comp(1)),
                                    ws.forward(w.comp(2))};
        std::array<Spectrum, 3> u;
        for (auto& c : u) c.assign(wsv[0].size(), std::complex<double>(0.0, 0.0));
        for_each_mode(lay, [&](std::int64_t i, std::int64_t f0, std::int64_t f1, std::int64_t f2) {
            const std::array<std::int64_t, 3> f{f0, f1, f2};
            const auto ii = static_cast<std::size_t>(i);
            std::array<double, 3> k;
            double k2 = 0.0;
            for (int a = 0; a < 3; ++a) {
                k[static_cast<std::size_t>(a)] = lay.k_deriv(a, f[static_cast<std::size_t>(a)]);
                k2 += k[static_cast<std::size_t>(a)] * k[static_cast<std::size_t>(a)];
            }
            if (k2 == 0.0) return;
            const std::complex<double> im(0.0, 1.0);
            // u = (i k x w - i k d) / |k|^2
            for (int a = 0; a < 3; ++a) {
                const int a1 = (a + 1) % 3, a2 = (a + 2) % 3;
                const std::complex<double> kxw =
                    k[static_cast<std::size_t>(a1)] * wsv[static_cast<std::size_t>(a2)][ii] -
                    k[static_cast<std::size_t>(a2)] * wsv[static_cast<std::size_t>(a1)][ii];
                u[static_cast<std::size_t>(a)][ii] =
                    im * (kxw - k[static_cast<std::size_t>(a)] * ds[ii]) / k2;
            }
        });
        for (int a = 0; a < 3; ++a) out.comp(a) = ws.inverse(u[static_cast<std::size_t>(a)], g);
    }

    // verify the curl source was solenoidal; a violation means the caller's
    // bookkeeping produced an unsolvable system
    if (!w.is_scalar()) {
        VectorField wv(g);
        for (int c = 0; c < 3; ++c) wv.comp(c) = w.comp(c);
        const double divw = linf(divergence(wv));
        if (divw > consistency_tol * wscale * (two_pi / g.length(0)) * static_cast<double>(g.extent(0)))
            throw InconsistentSourceError("invert_curl_div: curl source has nonzero divergence");
    }
    return out;
}

/// Zero-mean potential whose gradient is the curl-free part of f.
inline ScalarField scalar_potential(const VectorField& f) {
    require_finite(f, "scalar_potential");
    auto& ws = SpectralWorkspace::shared(f.grid());
    const auto& lay = ws.layout();
    const int d = f.grid().dim();
    std::vector<Spectrum> s;
    for (int a = 0; a < d; ++a) s.push_back(ws.forward(f.comp(a)));
    Spectrum phi(static_cast<std::size_t>(lay.size), std::complex<double>(0.0, 0.0));
    for_each_mode(lay, [&](std::int64_t i, std::int64_t f0, std::int64_t f1, std::int64_t f2) {
        const std::array<std::int64_t, 3> fr{f0, f1, f2};
        const auto ii = static_cast<std::size_t>(i);
        double k2 = 0.0;
        std::array<double, 3> k{0.0, 0.0, 0.0};
        for (int a = 0; a < d; ++a) {
            k[static_cast<std::size_t>(a)] = lay.k_raw(a, fr[static_cast<std::size_t>(a)]);
            k2 += k[static_cast<std::size_t>(a)] * k[static_cast<std::size_t>(a)];
        }
        if (k2 == 0.0) return;
        std::complex<double> kdotf(0.0, 0.0);
        for (int a = 0; a < d; ++a)
            kdotf += k[static_cast<std::size_t>(a)] * s[static_cast<std::size_t>(a)][ii];
        phi[ii] = std::complex<double>(0.0, -1.0) * kdotf / k2;
    });
    return ws.inverse(phi, f.grid());
}

// ---- band limiting ----------------------------------------------------------

/// Zero all modes with |f_a| > cutoff_a on any axis.
inline ScalarField truncate_modes(const ScalarField& f, std::array<std::int64_t, 3> cutoff) {
    auto& ws = SpectralWorkspace::shared(f.grid());
    Spectrum s = ws.forward(f);
    for_each_mode(ws.layout(), [&](std::int64_t i, std::int64_t f0, std::int64_t f1, std::int64_t f2) {
        const std::array<std::int64_t, 3> fr{f0, f1, f2};
        for (int a = 0; a < f.grid().dim(); ++a)
            if (std::abs(fr[static_cast<std::size_t>(a)]) > cutoff[static_cast<std::size_t>(a)]) {
                s[static_cast<std::size_t>(i)] = 0.0;
                return;
            }
    });
    return ws.inverse(s, f.grid());
}

/// Standard 2/3-rule truncation used to dealias quadratic products.
inline ScalarField dealias(const ScalarField& f, double keep_fraction = 2.0 / 3.0) {
    std::array<std::int64_t, 3> cutoff{};
    for (int a = 0; a < 3; ++a)
        cutoff[static_cast<std::size_t>(a)] = static_cast<std::int64_t>(
            keep_fraction * static_cast<double>(f.grid().extent(a)) / 2.0 + 1e-12);
    return truncate_modes(f, cutoff);
}

inline VectorField dealias(const VectorField& u, double keep_fraction = 2.0 / 3.0) {
    VectorField out(u.grid());
    for (int c = 0; c < u.components(); ++c) out.comp(c) = dealias(u.comp(c), keep_fraction);
    return out;
}

inline VorticityField dealias(const VorticityField& w, double keep_fraction = 2.0 / 3.0) {
    VorticityField out(w.grid());
    for (int c = 0; c < w.components(); ++c) out.comp(c) = dealias(w.comp(c), keep_fraction);
    return out;
}

// ---- randomized band-limited fixtures ---------------------------------------

/// Smooth random scalar field with modes confined to |f_a| <= kmax,
/// normalized to unit max-norm. Deterministic for a given engine state.
inline ScalarField random_band_limited_scalar(const Grid& g, std::int64_t kmax,
                                              std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, 1.0);
    ScalarField noise(g);
    for (std::int64_t i = 0; i < g.size(); ++i) noise[i] = dist(rng);
    ScalarField f = truncate_modes(noise, {kmax, kmax, kmax});
    const double m = mean(f);
    for (std::int64_t i = 0; i < f.size(); ++i) f[i] -= m;
    const double s = linf(f);
    if (s > 0.0) f *= 1.0 / s;
    return f;
}

/// Random zero-mean solenoidal vector field, band-limited as above.
inline VectorField random_band_limited_solenoidal(const Grid& g, std::int64_t kmax,
                                                  std::mt19937_64& rng) {
    VectorField u(g);
    for (int c = 0; c < g.dim(); ++c) u.comp(c) = random_band_limited_scalar(g, kmax, rng);
    HelmholtzParts parts = helmholtz_decompose(u);
    VectorField out = parts.solenoidal;
    const double s = linf(out);
    if (s > 0.0) out *= 1.0 / s;
    return out;
}

}  // namespace cauchyflow
