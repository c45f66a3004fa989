#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cauchyflow/field.hpp"
#include "cauchyflow/grid.hpp"
#include "cauchyflow/io.hpp"
#include "cauchyflow/spectral.hpp"

namespace cauchyflow {

/// The Lagrangian map a -> x(a,t) = a + s(a,t), stored as the periodic
/// displacement s (x itself is not periodic, s is).
struct LagrangianMap {
    VectorField displacement;
    double time = 0.0;

    explicit LagrangianMap(const Grid& g, double t = 0.0) : displacement(g), time(t) {}
    LagrangianMap(VectorField s, double t) : displacement(std::move(s)), time(t) {}

    const Grid& grid() const { return displacement.grid(); }

    /// Absolute particle positions x(a) on the label grid.
    VectorField positions() const {
        const Grid& g = grid();
        VectorField x = displacement;
        for (std::int64_t i = 0; i < g.size(); ++i) {
            const Point a = g.point(i);
            for (int c = 0; c < g.dim(); ++c) x.comp(c)[i] += a[c];
        }
        return x;
    }
};

/// Pointwise determinant of a d x d tensor field.
inline ScalarField determinant(const TensorField& t) {
    const Grid& g = t.grid();
    ScalarField det(g);
    if (g.dim() == 2) {
        for (std::int64_t i = 0; i < g.size(); ++i)
            det[i] = t.at(0, 0)[i] * t.at(1, 1)[i] - t.at(0, 1)[i] * t.at(1, 0)[i];
    } else {
        for (std::int64_t i = 0; i < g.size(); ++i) {
            const double a00 = t.at(0, 0)[i], a01 = t.at(0, 1)[i], a02 = t.at(0, 2)[i];
            const double a10 = t.at(1, 0)[i], a11 = t.at(1, 1)[i], a12 = t.at(1, 2)[i];
            const double a20 = t.at(2, 0)[i], a21 = t.at(2, 1)[i], a22 = t.at(2, 2)[i];
            det[i] = a00 * (a11 * a22 - a12 * a21) - a01 * (a10 * a22 - a12 * a20) +
                     a02 * (a10 * a21 - a11 * a20);
        }
    }
    return det;
}

/// Gradient tensor of the map, (i, j) = d x_i / d a_j, plus its determinant.
struct JacobianField {
    TensorField grad;
    ScalarField det;
};

/// Spectral Jacobian of the map: grad x = I + grad s. Throws
/// MapDegenerateError if orientation is lost anywhere.
inline JacobianField jacobian(const LagrangianMap& map) {
    const Grid& g = map.grid();
    require_finite(map.displacement, "jacobian");
    TensorField t(g);
    for (int i = 0; i < g.dim(); ++i) {
        const VectorField gi = gradient(map.displacement.comp(i));
        for (int j = 0; j < g.dim(); ++j) {
            t.at(i, j) = gi.comp(j);
            if (i == j)
                for (std::int64_t p = 0; p < g.size(); ++p) t.at(i, j)[p] += 1.0;
        }
    }
    ScalarField det = determinant(t);
    std::int64_t worst = 0;
    for (std::int64_t p = 0; p < g.size(); ++p)
        if (det[p] < det[worst]) worst = p;
    if (det[worst] <= 0.0)
        throw MapDegenerateError("jacobian: map is orientation-reversing (det <= 0) at a grid point",
                                 worst, det[worst]);
    return JacobianField{std::move(t), std::move(det)};
}

/// The per-point Cauchy invariant field: equal to the initial vorticity for
/// every exact incompressible Euler state.
using CauchyInvariantField = VorticityField;

/// Gauss-Legendre samples of the Lagrangian Weber integrand
/// (p - |v|^2 / 2)(x(a,tau)) on tau in (0, t).
struct WeberHistory {
    std::vector<double> nodes;
    std::vector<double> weights;
    std::vector<ScalarField> integrand;
};

/// A Lagrangian flow snapshot: the map, its velocity, and the initial data
/// it claims to solve. Pressure history is optional and only needed for the
/// Weber function.
struct FlowState {
    LagrangianMap map;
    VectorField velocity;  // xdot(a, t), periodic in a
    VectorField v0;        // initial velocity
    VorticityField omega0; // curl of v0
    std::optional<WeberHistory> weber;

    const Grid& grid() const { return map.grid(); }
    double time() const { return map.time; }
};

/// Builds a state and verifies the initial-data invariants
/// (div v0 = 0, omega0 = curl v0) unless allow_invalid is set
/// (negative-control runs inject non-solenoidal data on purpose).
inline FlowState make_flow_state(LagrangianMap map, VectorField velocity, VectorField v0,
                                 bool allow_invalid = false, double tol = 1e-11) {
    require_same_grid(map.grid(), velocity.grid(), "make_flow_state");
    require_same_grid(map.grid(), v0.grid(), "make_flow_state");
    require_finite(velocity, "make_flow_state");
    require_finite(v0, "make_flow_state");
    VorticityField omega0 = curl(v0);
    if (!allow_invalid) {
        const double scale = std::max(1.0, linf(v0));
        const double div0 = linf(divergence(v0));
        if (div0 > tol * scale * static_cast<double>(map.grid().extent(0)))
            throw InvalidFieldError("make_flow_state: initial velocity is not solenoidal (|div v0| = " +
                                    format_double(div0) + ")");
    }
    return FlowState{std::move(map), std::move(velocity), std::move(v0), std::move(omega0),
                     std::nullopt};
}

namespace detail {

/// Row i of a gradient tensor as a small vector at point p.
inline std::array<double, 3> tensor_row(const TensorField& t, int i, std::int64_t p) {
    std::array<double, 3> r{0.0, 0.0, 0.0};
    for (int j = 0; j < t.grid().dim(); ++j) r[j] = t.at(i, j)[p];
    return r;
}

inline TensorField velocity_gradient_tensor(const FlowState& state) {
    const Grid& g = state.grid();
    TensorField t(g);
    for (int i = 0; i < g.dim(); ++i) {
        const VectorField gi = gradient(state.velocity.comp(i));
        for (int j = 0; j < g.dim(); ++j) t.at(i, j) = gi.comp(j);
    }
    return t;
}

}  // namespace detail

/// Sum_k grad(xdot_k) x grad(x_k): three components in 3D, the single
/// in-plane cross in 2D. Time-independent and equal to omega0 on solutions.
inline CauchyInvariantField cauchy_invariants(const FlowState& state) {
    const Grid& g = state.grid();
    require_same_grid(g, state.velocity.grid(), "cauchy_invariants");
    const TensorField dv = detail::velocity_gradient_tensor(state);
    const TensorField dx = jacobian(state.map).grad;
    CauchyInvariantField c(g);
    if (g.dim() == 2) {
        for (std::int64_t p = 0; p < g.size(); ++p) {
            double acc = 0.0;
            for (int k = 0; k < 2; ++k)
                acc += dv.at(k, 0)[p] * dx.at(k, 1)[p] - dv.at(k, 1)[p] * dx.at(k, 0)[p];
            c.scalar()[p] = acc;
        }
    } else {
        for (std::int64_t p = 0; p < g.size(); ++p) {
            std::array<double, 3> acc{0.0, 0.0, 0.0};
            for (int k = 0; k < 3; ++k) {
                const auto a = detail::tensor_row(dv, k, p);
                const auto b = detail::tensor_row(dx, k, p);
                acc[0] += a[1] * b[2] - a[2] * b[1];
                acc[1] += a[2] * b[0] - a[0] * b[2];
                acc[2] += a[0] * b[1] - a[1] * b[0];
            }
            for (int a = 0; a < 3; ++a) c.comp(a)[p] = acc[a];
        }
    }
    return c;
}

/// The momentum form Sum_k xdot_k grad(x_k) = J^T xdot; "decurling" it gives
/// the Weber relation, taking its curl gives the invariants.
inline VectorField weber_form(const FlowState& state) {
    const Grid& g = state.grid();
    const TensorField dx = jacobian(state.map).grad;
    VectorField m(g);
    for (std::int64_t p = 0; p < g.size(); ++p)
        for (int j = 0; j < g.dim(); ++j) {
            double acc = 0.0;
            for (int k = 0; k < g.dim(); ++k) acc += state.velocity.comp(k)[p] * dx.at(k, j)[p];
            m.comp(j)[p] = acc;
        }
    return m;
}

/// curl of the momentum form. Identical to cauchy_invariants by vector
/// calculus; computed through the product-then-curl route as a cross-check.
inline CauchyInvariantField hankel_curl_form(const FlowState& state) {
    return curl(weber_form(state));
}

/// Pushforward of the initial vorticity by the map gradient:
/// omega_i = Sum_j omega0_j d x_i / d a_j. Requires det(grad x) = 1 within
/// tolerance, which the formula's derivation assumes.
inline VorticityField vorticity_formula(const JacobianField& jac, const VorticityField& omega0,
                                        double det_tol = 1e-6) {
    const Grid& g = jac.grad.grid();
    require_same_grid(g, omega0.grid(), "vorticity_formula");
    double worst = 0.0;
    for (std::int64_t p = 0; p < g.size(); ++p) worst = std::max(worst, std::abs(jac.det[p] - 1.0));
    if (worst > det_tol)
        throw ConstraintViolatedError(
            "vorticity_formula: unit-determinant constraint violated (|det-1| = " +
                format_double(worst) + ")",
            worst, det_tol);
    VorticityField out(g);
    if (g.dim() == 2) {
        out.scalar() = omega0.scalar();  // scalar vorticity is conserved pointwise
        return out;
    }
    for (std::int64_t p = 0; p < g.size(); ++p)
        for (int i = 0; i < 3; ++i) {
            double acc = 0.0;
            for (int j = 0; j < 3; ++j) acc += omega0.comp(j)[p] * jac.grad.at(i, j)[p];
            out.comp(i)[p] = acc;
        }
    return out;
}

/// Weber function W(a,t) = int_0^t (p - |v|^2/2) dtau along trajectories,
/// from the state's stored quadrature samples. The Weber relation then reads
/// weber_form - v0 = -grad W.
inline ScalarField weber_function(const FlowState& state) {
    if (!state.weber.has_value())
        throw MissingDataError("weber_function: state carries no pressure history");
    const WeberHistory& h = *state.weber;
    ScalarField w(state.grid());
    for (std::size_t q = 0; q < h.nodes.size(); ++q) {
        require_same_grid(w.grid(), h.integrand[q].grid(), "weber_function");
        for (std::int64_t p = 0; p < w.size(); ++p) w[p] += h.weights[q] * h.integrand[q][p];
    }
    return w;
}

/// Discrete relabeling-symmetry residual from a uniformly spaced run of
/// states: curl of [ D_t(weber_form) - Sum_k D_t(xdot_k) grad x_k ] with
/// centered differences D_t around the middle state. Zero for exact
/// solutions up to O(dt^2); generically nonzero for non-solutions.
inline VorticityField noether_residual(std::span<const FlowState> states) {
    if (states.size() < 3)
        throw InvalidFieldError("noether_residual: need at least 3 time-adjacent states");
    const double dt = states[1].time() - states[0].time();
    for (std::size_t i = 1; i < states.size(); ++i) {
        const double d = states[i].time() - states[i - 1].time();
        if (!(dt > 0.0) || std::abs(d - dt) > 1e-9 * std::max(1.0, std::abs(dt)))
            throw NonUniformSpacingError("noether_residual: states are not uniformly spaced in time");
    }
    const std::size_t mid = states.size() / 2;
    const FlowState& lo = states[mid - 1];
    const FlowState& hi = states[mid + 1];
    const FlowState& ct = states[mid];
    const Grid& g = ct.grid();
    require_same_grid(g, lo.grid(), "noether_residual");
    require_same_grid(g, hi.grid(), "noether_residual");

    const double inv2dt = 1.0 / (2.0 * dt);
    VectorField dm = weber_form(hi);
    dm -= weber_form(lo);
    dm *= inv2dt;

    const TensorField dxc = jacobian(ct.map).grad;
    VectorField accel_form(g);  // Sum_k D_t(xdot_k) grad x_k at center time
    for (std::int64_t p = 0; p < g.size(); ++p)
        for (int j = 0; j < g.dim(); ++j) {
            double acc = 0.0;
            for (int k = 0; k < g.dim(); ++k)
                acc += (hi.velocity.comp(k)[p] - lo.velocity.comp(k)[p]) * inv2dt * dxc.at(k, j)[p];
            accel_form.comp(j)[p] = acc;
        }
    dm -= accel_form;
    return curl(dm);
}

/// ||a - b||_inf / max(||b||_inf, floor): the drift metric used by all
/// invariant checks.
inline double relative_linf_drift(const VorticityField& a, const VorticityField& b,
                                  double floor_scale = 1e-12) {
    require_same_grid(a.grid(), b.grid(), "relative_linf_drift");
    double num = 0.0;
    for (int c = 0; c < a.components(); ++c) {
        for (std::int64_t p = 0; p < a.grid().size(); ++p)
            num = std::max(num, std::abs(a.comp(c)[p] - b.comp(c)[p]));
    }
    return num / std::max(linf(b), floor_scale);
}

// ---- snapshot files ----------------------------------------------------------

namespace snapshot_flags {
inline constexpr std::uint64_t velocity = 1u << 0;
inline constexpr std::uint64_t v0 = 1u << 1;
inline constexpr std::uint64_t omega0 = 1u << 2;
inline constexpr std::uint64_t weber = 1u << 3;
}  // namespace snapshot_flags

/// Snapshot layout: [t][grid header][flags][displacement][velocity][v0]
/// [omega0][weber samples], all fields in the flat binary field layout.
inline void write_snapshot(std::ostream& os, const FlowState& state) {
    detail::write_f64(os, state.time());
    write_grid_header(os, state.grid());
    std::uint64_t flags = snapshot_flags::velocity | snapshot_flags::v0 | snapshot_flags::omega0;
    if (state.weber.has_value()) flags |= snapshot_flags::weber;
    detail::write_u64(os, flags);
    write_field(os, state.map.displacement);
    write_field(os, state.velocity);
    write_field(os, state.v0);
    write_field(os, state.omega0);
    if (state.weber.has_value()) {
        const WeberHistory& h = *state.weber;
        detail::write_u64(os, h.nodes.size());
        for (double t : h.nodes) detail::write_f64(os, t);
        for (double w : h.weights) detail::write_f64(os, w);
        for (const auto& f : h.integrand) write_field(os, f);
    }
}

inline FlowState read_snapshot(std::istream& is) {
    const double t = detail::read_f64(is);
    const Grid g = read_grid_header(is);
    const std::uint64_t flags = detail::read_u64(is);
    if (!(flags & snapshot_flags::velocity) || !(flags & snapshot_flags::v0) ||
        !(flags & snapshot_flags::omega0))
        throw IoError("snapshot: missing required fields");
    VectorField s = read_vector_field(is);
    require_same_grid(g, s.grid(), "read_snapshot");
    FlowState state{LagrangianMap(std::move(s), t), read_vector_field(is), read_vector_field(is),
                    read_vorticity_field(is), std::nullopt};
    if (flags & snapshot_flags::weber) {
        WeberHistory h;
        const std::uint64_t q = detail::read_u64(is);
        h.nodes.resize(q);
        h.weights.resize(q);
        for (auto& x : h.nodes) x = detail::read_f64(is);
        for (auto& x : h.weights) x = detail::read_f64(is);
        for (std::uint64_t i = 0; i < q; ++i) h.integrand.push_back(read_scalar_field(is));
        state.weber = std::move(h);
    }
    return state;
}

inline void save_snapshot(const std::filesystem::path& path, const FlowState& state) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path.string());
    write_snapshot(os, state);
}

inline FlowState load_snapshot(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open for reading: " + path.string());
    return read_snapshot(is);
}

}  // namespace cauchyflow
