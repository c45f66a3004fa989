#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "cauchyflow/field.hpp"
#include "cauchyflow/grid.hpp"
#include "cauchyflow/lagrangian.hpp"

namespace cauchyflow {

// ---- analytic steady flows ----------------------------------------------------

/// Closed-form steady flows used as ground truth. All entries are steady, so
/// tracking ODEs are autonomous; the incompressible entries satisfy steady
/// Euler v.grad(v) = -grad(p) exactly. The non-solenoidal entry exists only
/// as a negative control for the unit-determinant checks.
class AnalyticFlow {
  public:
    enum class Kind { Rest, Uniform, SolidRotation, TaylorGreen2D, Abc, NonSolenoidal };

    static AnalyticFlow rest(int dim) { return AnalyticFlow(Kind::Rest, dim, {}); }
    static AnalyticFlow uniform(int dim, Point u) {
        return AnalyticFlow(Kind::Uniform, dim, {u[0], u[1], u[2]});
    }
    /// 2D rigid rotation about the origin; not periodic, use point-wise only.
    static AnalyticFlow solid_rotation(double omega) {
        return AnalyticFlow(Kind::SolidRotation, 2, {omega, 0.0, 0.0});
    }
    static AnalyticFlow taylor_green(double amplitude = 1.0) {
        return AnalyticFlow(Kind::TaylorGreen2D, 2, {amplitude, 0.0, 0.0});
    }
    static AnalyticFlow abc(double a = 1.0, double b = 1.0, double c = 1.0) {
        return AnalyticFlow(Kind::Abc, 3, {a, b, c});
    }
    /// Gradient field kappa*(sin x1, sin x2[, sin x3]); div != 0 on purpose.
    static AnalyticFlow non_solenoidal(int dim, double kappa = 0.3) {
        return AnalyticFlow(Kind::NonSolenoidal, dim, {kappa, 0.0, 0.0});
    }

    Kind kind() const { return kind_; }
    int dim() const { return dim_; }
    const std::array<double, 3>& params() const { return p_; }

    bool periodic() const { return kind_ != Kind::SolidRotation; }
    bool has_pressure() const { return kind_ != Kind::NonSolenoidal; }
    bool solenoidal() const { return kind_ != Kind::NonSolenoidal; }

    std::string name() const {
        switch (kind_) {
            case Kind::Rest: return "rest";
            case Kind::Uniform: return "uniform";
            case Kind::SolidRotation: return "solid_rotation";
            case Kind::TaylorGreen2D: return "taylor_green_2d";
            case Kind::Abc: return "abc";
            case Kind::NonSolenoidal: return "non_solenoidal";
        }
        return "?";
    }

    Point velocity(const Point& x) const {
        switch (kind_) {
            case Kind::Rest: return {0.0, 0.0, 0.0};
            case Kind::Uniform: return {p_[0], p_[1], p_[2]};
            case Kind::SolidRotation: return {-p_[0] * x[1], p_[0] * x[0], 0.0};
            case Kind::TaylorGreen2D:
                return {p_[0] * std::sin(x[0]) * std::cos(x[1]),
                        -p_[0] * std::cos(x[0]) * std::sin(x[1]), 0.0};
            case Kind::Abc:
                return {p_[0] * std::sin(x[2]) + p_[2] * std::cos(x[1]),
                        p_[1] * std::sin(x[0]) + p_[0] * std::cos(x[2]),
                        p_[2] * std::sin(x[1]) + p_[1] * std::cos(x[0])};
            case Kind::NonSolenoidal: {
                Point v{p_[0] * std::sin(x[0]), p_[0] * std::sin(x[1]), 0.0};
                if (dim_ == 3) v[2] = p_[0] * std::sin(x[2]);
                return v;
            }
        }
        return {};
    }

    /// (i, j) entry is d v_i / d x_j.
    std::array<std::array<double, 3>, 3> velocity_gradient(const Point& x) const {
        std::array<std::array<double, 3>, 3> g{};
        switch (kind_) {
            case Kind::Rest:
            case Kind::Uniform: break;
            case Kind::SolidRotation:
                g[0][1] = -p_[0];
                g[1][0] = p_[0];
                break;
            case Kind::TaylorGreen2D: {
                const double a = p_[0];
                g[0][0] = a * std::cos(x[0]) * std::cos(x[1]);
                g[0][1] = -a * std::sin(x[0]) * std::sin(x[1]);
                g[1][0] = a * std::sin(x[0]) * std::sin(x[1]);
                g[1][1] = -a * std::cos(x[0]) * std::cos(x[1]);
                break;
            }
            case Kind::Abc: {
                const double a = p_[0], b = p_[1], c = p_[2];
                g[0][1] = -c * std::sin(x[1]);
                g[0][2] = a * std::cos(x[2]);
                g[1][0] = b * std::cos(x[0]);
                g[1][2] = -a * std::sin(x[2]);
                g[2][0] = -b * std::sin(x[0]);
                g[2][1] = c * std::cos(x[1]);
                break;
            }
            case Kind::NonSolenoidal:
                for (int i = 0; i < dim_; ++i) g[i][i] = p_[0] * std::cos(x[i]);
                break;
        }
        return g;
    }

    /// Steady pressure (density 1) making the flow an exact Euler solution.
    double pressure(const Point& x) const {
        switch (kind_) {
            case Kind::Rest:
            case Kind::Uniform: return 0.0;
            case Kind::SolidRotation:
                return 0.5 * p_[0] * p_[0] * (x[0] * x[0] + x[1] * x[1]);
            case Kind::TaylorGreen2D:
                return p_[0] * p_[0] * (std::cos(2.0 * x[0]) + std::cos(2.0 * x[1])) / 4.0;
            case Kind::Abc: {
                const Point v = velocity(x);
                return -0.5 * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
            }
            case Kind::NonSolenoidal:
                throw MissingDataError("non_solenoidal flow has no steady pressure");
        }
        return 0.0;
    }

    Point pressure_gradient(const Point& x) const {
        switch (kind_) {
            case Kind::Rest:
            case Kind::Uniform: return {0.0, 0.0, 0.0};
            case Kind::SolidRotation: return {p_[0] * p_[0] * x[0], p_[0] * p_[0] * x[1], 0.0};
            case Kind::TaylorGreen2D: {
                const double a2 = p_[0] * p_[0];
                return {-a2 * std::sin(2.0 * x[0]) / 2.0, -a2 * std::sin(2.0 * x[1]) / 2.0, 0.0};
            }
            case Kind::Abc: {
                // grad p = -grad(|v|^2/2) = -(grad v)^T v
                const Point v = velocity(x);
                const auto g = velocity_gradient(x);
                Point out{0.0, 0.0, 0.0};
                for (int j = 0; j < 3; ++j)
                    for (int i = 0; i < 3; ++i) out[j] -= v[i] * g[i][j];
                return out;
            }
            case Kind::NonSolenoidal:
                throw MissingDataError("non_solenoidal flow has no steady pressure");
        }
        return {};
    }

    /// Analytic vorticity; z-component only in 2D.
    Point vorticity(const Point& x) const {
        switch (kind_) {
            case Kind::Rest:
            case Kind::Uniform: return {0.0, 0.0, 0.0};
            case Kind::SolidRotation: return {0.0, 0.0, 2.0 * p_[0]};
            case Kind::TaylorGreen2D:
                return {0.0, 0.0, 2.0 * p_[0] * std::sin(x[0]) * std::sin(x[1])};
            case Kind::Abc: return velocity(x);  // Beltrami
            case Kind::NonSolenoidal: return {0.0, 0.0, 0.0};  // gradient field
        }
        return {};
    }

    /// Residual of steady Euler, v.grad(v) + grad(p); analytically zero for
    /// every entry that has a pressure.
    Point steady_euler_residual(const Point& x) const {
        const Point v = velocity(x);
        const auto g = velocity_gradient(x);
        const Point gp = pressure_gradient(x);
        Point r{0.0, 0.0, 0.0};
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) r[i] += v[j] * g[i][j];
            r[i] += gp[i];
        }
        return r;
    }

    VectorField sample_velocity(const Grid& g) const {
        require_periodic("sample_velocity");
        if (g.dim() != dim_) throw GridMismatchError("sample_velocity: flow/grid dimension mismatch");
        VectorField u(g);
        for (std::int64_t i = 0; i < g.size(); ++i) {
            const Point v = velocity(g.point(i));
            for (int c = 0; c < g.dim(); ++c) u.comp(c)[i] = v[c];
        }
        return u;
    }

    ScalarField sample_pressure(const Grid& g) const {
        require_periodic("sample_pressure");
        ScalarField p(g);
        for (std::int64_t i = 0; i < g.size(); ++i) p[i] = pressure(g.point(i));
        return p;
    }

    VorticityField sample_vorticity(const Grid& g) const {
        require_periodic("sample_vorticity");
        VorticityField w(g);
        for (std::int64_t i = 0; i < g.size(); ++i) {
            const Point o = vorticity(g.point(i));
            if (g.dim() == 2)
                w.scalar()[i] = o[2];
            else
                for (int c = 0; c < 3; ++c) w.comp(c)[i] = o[c];
        }
        return w;
    }

  private:
    AnalyticFlow(Kind k, int dim, std::array<double, 3> p) : kind_(k), dim_(dim), p_(p) {}

    void require_periodic(const char* where) const {
        if (!periodic())
            throw InvalidFieldError(std::string(where) + ": " + name() + " is not a periodic flow");
    }

    Kind kind_;
    int dim_;
    std::array<double, 3> p_;
};

// ---- Gauss-Legendre nodes ------------------------------------------------------

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
inline void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.assign(static_cast<std::size_t>(n), 0.0);
    weights.assign(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                            (static_cast<double>(n) + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = pk;
            }
            dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        nodes[static_cast<std::size_t>(i)] = x;
        weights[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    std::reverse(nodes.begin(), nodes.end());
    std::reverse(weights.begin(), weights.end());
}

// ---- adaptive Dormand-Prince 5(4) ----------------------------------------------

namespace dp5 {
// Butcher tableau, Dormand & Prince (1980).
inline constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
inline constexpr double a21 = 1.0 / 5.0;
inline constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
inline constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
inline constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                        a54 = -212.0 / 729.0;
inline constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                        a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
inline constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0,
                        b5 = -2187.0 / 6784.0, b6 = 11.0 / 84.0;
inline constexpr double e1 = 35.0 / 384.0 - 5179.0 / 57600.0, e3 = 500.0 / 1113.0 - 7571.0 / 16695.0,
                        e4 = 125.0 / 192.0 - 393.0 / 640.0,
                        e5 = -2187.0 / 6784.0 + 92097.0 / 339200.0,
                        e6 = 11.0 / 84.0 - 187.0 / 2100.0, e7 = -1.0 / 40.0;
}  // namespace dp5

struct TrackOptions {
    double tol = 1e-10;            ///< adaptive abs+rel local error tolerance
    bool fixed_step = false;       ///< classical RK4 with fixed_dt (order studies)
    double fixed_dt = 1e-3;
    std::int64_t max_steps = 4000000;
    int threads = 1;
    int weber_nodes = 0;           ///< Gauss-Legendre samples of the Weber integrand
};

namespace detail {

constexpr int max_state = 16;
using StateVec = std::array<double, max_state>;

struct OdeSpec {
    const AnalyticFlow* flow;
    int dim;
    bool with_jacobian;
    bool with_vorticity;
    bool with_weber;

    int size() const {
        int n = dim;
        if (with_jacobian) n += dim * dim;
        if (with_vorticity) n += dim == 2 ? 1 : 3;
        if (with_weber) n += 1;
        return n;
    }

    void rhs(const double* y, double* dy) const {
        const Point x{y[0], y[1], dim == 3 ? y[2] : 0.0};
        const Point v = flow->velocity(x);
        for (int i = 0; i < dim; ++i) dy[i] = v[i];
        int off = dim;
        if (with_jacobian || with_vorticity) {
            const auto g = flow->velocity_gradient(x);
            if (with_jacobian) {
                // d/dt J_ij = sum_l (dv_i/dx_l) J_lj
                for (int i = 0; i < dim; ++i)
                    for (int j = 0; j < dim; ++j) {
                        double acc = 0.0;
                        for (int l = 0; l < dim; ++l) acc += g[i][l] * y[off + l * dim + j];
                        dy[off + i * dim + j] = acc;
                    }
                off += dim * dim;
            }
            if (with_vorticity) {
                if (dim == 2) {
                    dy[off] = 0.0;  // no vortex stretching in the plane
                    off += 1;
                } else {
                    for (int i = 0; i < 3; ++i) {
                        double acc = 0.0;
                        for (int j = 0; j < 3; ++j) acc += g[i][j] * y[off + j];
                        dy[off + i] = acc;
                    }
                    off += 3;
                }
            }
        } else if (with_vorticity) {
            off += dim == 2 ? 1 : 3;
        }
        if (with_weber) {
            const double v2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
            dy[off] = flow->pressure(x) - 0.5 * v2;
        }
    }
};

struct StepStats {
    std::int64_t steps = 0;
    double max_scaled_error = 0.0;
};

/// Integrate y over [t0, t1] with DP5(4) (or fixed-step RK4), landing on t1
/// exactly. h carries the adapted step across segments.
inline void integrate_segment(const OdeSpec& spec, StateVec& y, double t0, double t1, double& h,
                              const TrackOptions& opt, StepStats& stats) {
    const int n = spec.size();
    if (t1 <= t0) return;

    if (opt.fixed_step) {
        const auto nsteps =
            static_cast<std::int64_t>(std::ceil((t1 - t0) / opt.fixed_dt - 1e-12));
        const double dt = (t1 - t0) / static_cast<double>(std::max<std::int64_t>(nsteps, 1));
        StateVec k1, k2, k3, k4, tmp;
        for (std::int64_t s = 0; s < std::max<std::int64_t>(nsteps, 1); ++s) {
            spec.rhs(y.data(), k1.data());
            for (int i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * dt * k1[i];
            spec.rhs(tmp.data(), k2.data());
            for (int i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * dt * k2[i];
            spec.rhs(tmp.data(), k3.data());
            for (int i = 0; i < n; ++i) tmp[i] = y[i] + dt * k3[i];
            spec.rhs(tmp.data(), k4.data());
            for (int i = 0; i < n; ++i)
                y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            ++stats.steps;
        }
        return;
    }

    using namespace dp5;
    StateVec k1, k2, k3, k4, k5, k6, k7, tmp, ynew;
    double t = t0;
    spec.rhs(y.data(), k1.data());
    bool fsal_valid = true;
    while (t < t1 - 1e-14 * std::max(1.0, std::abs(t1))) {
        if (stats.steps > opt.max_steps)
            throw IntegrationError("track: step budget exhausted before reaching tolerance");
        h = std::min(h, t1 - t);
        if (!fsal_valid) spec.rhs(y.data(), k1.data());
        fsal_valid = true;

        for (int i = 0; i < n; ++i) tmp[i] = y[i] + h * a21 * k1[i];
        spec.rhs(tmp.data(), k2.data());
        for (int i = 0; i < n; ++i) tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        spec.rhs(tmp.data(), k3.data());
        for (int i = 0; i < n; ++i) tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        spec.rhs(tmp.data(), k4.data());
        for (int i = 0; i < n; ++i)
            tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        spec.rhs(tmp.data(), k5.data());
        for (int i = 0; i < n; ++i)
            tmp[i] =
                y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        spec.rhs(tmp.data(), k6.data());
        for (int i = 0; i < n; ++i)
            ynew[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
        spec.rhs(ynew.data(), k7.data());

        double err = 0.0;
        for (int i = 0; i < n; ++i) {
            const double e =
                h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
            const double scale = opt.tol + opt.tol * std::max(std::abs(y[i]), std::abs(ynew[i]));
            err = std::max(err, std::abs(e) / scale);
        }
        ++stats.steps;
        if (err <= 1.0) {
            t += h;
            y = ynew;
            k1 = k7;  // FSAL
            stats.max_scaled_error = std::max(stats.max_scaled_error, err);
        } else {
            fsal_valid = false;
        }
        const double factor =
            err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
        h = std::max(h * factor, 1e-14);
    }
}

inline double initial_step(const OdeSpec& spec, const StateVec& y, double tol) {
    StateVec dy;
    spec.rhs(y.data(), dy.data());
    double dn = 0.0;
    for (int i = 0; i < spec.size(); ++i) dn = std::max(dn, std::abs(dy[i]));
    const double h = 0.1 * std::pow(tol, 0.2) / std::max(dn, 1e-3);
    return std::clamp(h, 1e-8, 0.1);
}

template <typename F>
inline void parallel_for(std::int64_t count, int threads, F&& body) {
    if (threads <= 1) {
        for (std::int64_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    const std::int64_t chunk = (count + threads - 1) / threads;
    std::exception_ptr error;
    std::mutex error_mutex;
    for (int tte = 0; tte < threads; ++tte) {
        const std::int64_t lo = tte * chunk;
        const std::int64_t hi = std::min(count, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&, lo, hi] {
            try {
                for (std::int64_t i = lo; i < hi; ++i) body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace detail

// ---- tracked bundles -----------------------------------------------------------

/// Ground-truth trajectory data on a label grid at one time: positions,
/// velocities, the variational Jacobian, Helmholtz-transported vorticity and
/// the accumulated Weber integrand.
struct TrackedBundle {
    double time;
    VectorField displacement;
    VectorField velocity;
    TensorField jacobian;
    VorticityField vorticity;   ///< transported by d(omega)/dt = (omega . grad) v
    ScalarField weber_ode;      ///< ODE-accumulated int_0^t (p - |v|^2/2) dtau
    double max_scaled_error = 0.0;
    std::int64_t total_steps = 0;

    explicit TrackedBundle(const Grid& g, double t = 0.0)
        : time(t), displacement(g), velocity(g), jacobian(g), vorticity(g), weber_ode(g) {}

    const Grid& grid() const { return displacement.grid(); }
};

struct GridTrackResult {
    std::vector<TrackedBundle> bundles;       ///< one per requested time
    std::optional<WeberHistory> weber;        ///< samples on [0, t_final] if requested
};

/// Track every label-grid point through the flow, integrating the trajectory,
/// variational and vorticity-transport ODEs together. `times` must be
/// ascending and positive; a bundle is produced at each. Weber integrand
/// samples, when requested, are taken at Gauss-Legendre nodes of
/// [0, times.back()].
inline GridTrackResult track_grid(const AnalyticFlow& flow, const Grid& grid,
                                  std::span<const double> times, const TrackOptions& opt = {}) {
    if (grid.dim() != flow.dim()) throw GridMismatchError("track_grid: flow/grid dimension mismatch");
    if (times.empty()) throw InvalidFieldError("track_grid: no times requested");
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] < 0.0 || (i > 0 && times[i] <= times[i - 1]))
            throw InvalidFieldError("track_grid: times must be ascending and nonnegative");
    }
    const int d = grid.dim();
    const bool weber_on = opt.weber_nodes > 0 && flow.has_pressure();
    const detail::OdeSpec spec{&flow, d, true, true, flow.has_pressure()};

    GridTrackResult result;
    for (double t : times) result.bundles.emplace_back(grid, t);

    std::vector<double> wnodes, wweights;
    if (weber_on) {
        gauss_legendre(opt.weber_nodes, wnodes, wweights);
        const double tf = times.back();
        for (auto& x : wnodes) x = 0.5 * tf * (x + 1.0);
        for (auto& w : wweights) w *= 0.5 * tf;
        result.weber = WeberHistory{wnodes, wweights, {}};
        for (std::size_t q = 0; q < wnodes.size(); ++q)
            result.weber->integrand.emplace_back(grid);
    }

    // merged, ascending stop list: checkpoint times + weber nodes
    struct Stop {
        double t;
        int checkpoint;  // index into times, or -1
        int node;        // index into weber nodes, or -1
    };
    std::vector<Stop> stops;
    for (std::size_t i = 0; i < times.size(); ++i)
        stops.push_back({times[i], static_cast<int>(i), -1});
    for (std::size_t q = 0; q < wnodes.size(); ++q) stops.push_back({wnodes[q], -1, static_cast<int>(q)});
    std::sort(stops.begin(), stops.end(), [](const Stop& a, const Stop& b) { return a.t < b.t; });

    std::vector<double> max_err(static_cast<std::size_t>(std::max(opt.threads, 1)), 0.0);
    std::vector<std::int64_t> steps(static_cast<std::size_t>(std::max(opt.threads, 1)), 0);

    const std::int64_t npts = grid.size();
    const std::int64_t per_thread = (npts + std::max(opt.threads, 1) - 1) / std::max(opt.threads, 1);
    detail::parallel_for(npts, opt.threads, [&](std::int64_t p) {
        const int tid = static_cast<int>(p / per_thread);
        const Point a = grid.point(p);
        detail::StateVec y{};
        for (int i = 0; i < d; ++i) y[i] = a[i];
        int off = d;
        for (int i = 0; i < d; ++i) y[off + i * d + i] = 1.0;  // J = I
        off += d * d;
        const Point o0 = flow.vorticity(a);
        if (d == 2) {
            y[off] = o0[2];
            off += 1;
        } else {
            for (int i = 0; i < 3; ++i) y[off + i] = o0[i];
            off += 3;
        }
        // remaining slot (if any) is the Weber accumulator, starts at 0

        detail::StepStats stats;
        double h = detail::initial_step(spec, y, opt.tol);
        double t = 0.0;
        for (const Stop& stop : stops) {
            detail::integrate_segment(spec, y, t, stop.t, h, opt, stats);
            t = stop.t;
            if (stop.node >= 0 && weber_on) {
                const Point x{y[0], y[1], d == 3 ? y[2] : 0.0};
                const Point v = flow.velocity(x);
                const double v2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
                result.weber->integrand[static_cast<std::size_t>(stop.node)][p] =
                    flow.pressure(x) - 0.5 * v2;
            }
            if (stop.checkpoint >= 0) {
                TrackedBundle& b = result.bundles[static_cast<std::size_t>(stop.checkpoint)];
                const Point x{y[0], y[1], d == 3 ? y[2] : 0.0};
                const Point v = flow.velocity(x);
                for (int i = 0; i < d; ++i) {
                    b.displacement.comp(i)[p] = y[i] - a[i];
                    b.velocity.comp(i)[p] = v[i];
                }
                for (int i = 0; i < d; ++i)
                    for (int j = 0; j < d; ++j) b.jacobian.at(i, j)[p] = y[d + i * d + j];
                int voff = d + d * d;
                if (d == 2) {
                    b.vorticity.scalar()[p] = y[voff];
                    voff += 1;
                } else {
                    for (int i = 0; i < 3; ++i) b.vorticity.comp(i)[p] = y[voff + i];
                    voff += 3;
                }
                if (spec.with_weber) b.weber_ode[p] = y[voff];
            }
        }
        max_err[static_cast<std::size_t>(tid)] =
            std::max(max_err[static_cast<std::size_t>(tid)], stats.max_scaled_error);
        steps[static_cast<std::size_t>(tid)] += stats.steps;
    });

    for (auto& b : result.bundles) {
        for (double e : max_err) b.max_scaled_error = std::max(b.max_scaled_error, e);
        for (std::int64_t s : steps) b.total_steps += s;
    }
    return result;
}

inline TrackedBundle track_grid_single(const AnalyticFlow& flow, const Grid& grid, double t,
                                       const TrackOptions& opt = {}) {
    const std::array<double, 1> times{t};
    return std::move(track_grid(flow, grid, times, opt).bundles.front());
}

/// Track arbitrary marker points (contour advection); positions only.
inline std::vector<std::vector<Point>> track_points(const AnalyticFlow& flow,
                                                    std::span<const Point> points,
                                                    std::span<const double> times,
                                                    const TrackOptions& opt = {}) {
    const int d = flow.dim();
    const detail::OdeSpec spec{&flow, d, false, false, false};
    std::vector<std::vector<Point>> out(times.size(),
                                        std::vector<Point>(points.size(), Point{0, 0, 0}));
    detail::parallel_for(static_cast<std::int64_t>(points.size()), opt.threads, [&](std::int64_t p) {
        detail::StateVec y{};
        for (int i = 0; i < d; ++i) y[i] = points[static_cast<std::size_t>(p)][i];
        detail::StepStats stats;
        double h = detail::initial_step(spec, y, opt.tol);
        double t = 0.0;
        for (std::size_t s = 0; s < times.size(); ++s) {
            detail::integrate_segment(spec, y, t, times[s], h, opt, stats);
            t = times[s];
            for (int i = 0; i < d; ++i) out[s][static_cast<std::size_t>(p)][i] = y[i];
        }
    });
    return out;
}

/// Build a FlowState from a tracked bundle; v0 is the flow sampled on the
/// label grid, the Weber history (if tracked) is attached.
inline FlowState to_flow_state(const TrackedBundle& bundle, const AnalyticFlow& flow,
                               std::optional<WeberHistory> weber = std::nullopt,
                               bool allow_invalid = false) {
    FlowState state = make_flow_state(LagrangianMap(bundle.displacement, bundle.time),
                                      bundle.velocity, flow.sample_velocity(bundle.grid()),
                                      allow_invalid || !flow.solenoidal());
    state.weber = std::move(weber);
    return state;
}

/// L_inf distance between Helmholtz-transported vorticity and a vorticity
/// field produced by the pushforward formula; the two routes must agree.
inline double helmholtz_transport_check(const TrackedBundle& bundle,
                                        const VorticityField& formula_output) {
    require_same_grid(bundle.grid(), formula_output.grid(), "helmholtz_transport_check");
    double m = 0.0;
    for (int c = 0; c < formula_output.components(); ++c)
        for (std::int64_t p = 0; p < bundle.grid().size(); ++p)
            m = std::max(m, std::abs(bundle.vorticity.comp(c)[p] - formula_output.comp(c)[p]));
    return m;
}

/// Max |det(J) - 1| over the bundle, from the variational (not spectral)
/// Jacobian; the oracle's own volume-preservation diagnostic.
inline double determinant_drift(const TrackedBundle& bundle) {
    const ScalarField det = determinant(bundle.jacobian);
    double m = 0.0;
    for (std::int64_t p = 0; p < det.size(); ++p) m = std::max(m, std::abs(det[p] - 1.0));
    return m;
}

}  // namespace cauchyflow
