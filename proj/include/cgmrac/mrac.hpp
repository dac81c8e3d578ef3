#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "cgmrac/baseline.hpp"
#include "cgmrac/error.hpp"
#include "cgmrac/numerics.hpp"
#include "cgmrac/plant.hpp"

namespace cgmrac {

inline constexpr double COMPANION_TOL = 1e-10;

/// z = T x with z = [alpha, alpha_dot] under the design model.
struct ZTransform {
    Mat<2, 2> T;
    Mat<2, 2> T_inv;
};

[[nodiscard]] inline ZTransform build_transform(double a11, double a12) {
    if (!(std::abs(a12) >= 1e-12)) throw Error(Errc::SingularTransform, "a12 ~ 0, z = Tx is not invertible");
    ZTransform t;
    t.T = Mat<2, 2>{{1.0, 0.0, a11, a12}};
    t.T_inv = Mat<2, 2>{{1.0, 0.0, -a11 / a12, 1.0 / a12}};
    return t;
}

struct MracTuning {
    Mat<2, 2> Q_lyap = Mat<2, 2>::identity();
    double gamma_z = 50.0;
    double gamma_r = 50.0;
    double eps = 0.025;
    double kz_bound = 10.0;
    double kr_bound = 10.0;
};

/**
 * Everything the adaptive law needs, expressed in z coordinates.
 *
 * A_m_z and B_m_z describe the reference model (the nominal baseline closed
 * loop without integral action); B0_z is the nominal input direction.
 */
struct MracDesign {
    ZTransform tf;
    Mat<2, 2> A_d_z; // design plant, T A_d T^-1
    Mat<2, 2> A_m_z; // T (A_d - B0 K) T^-1
    Vec<2> B_m_z;    // T B0 F
    Vec<2> B0_z;     // T B0
    Mat<1, 2> K_bl_z; // baseline feedback in z coordinates, K T^-1
    double F_bl = 0.0;
    Mat<2, 2> P;
    Mat<2, 2> Q_lyap;
    double gamma_z = 0.0;
    double gamma_r = 0.0;
    double sgn_lambda = 1.0;
    double eps = 0.0;
    double kz_bound = 0.0;
    double kr_bound = 0.0;
};

struct AdaptiveGains {
    Mat<1, 2> K_z;
    double K_r = 0.0;

    friend constexpr bool operator==(const AdaptiveGains&, const AdaptiveGains&) = default;
};

[[nodiscard]] inline MracDesign build_mrac(const BaselineDesign& d, const ZTransform& t, const MracTuning& tune) {
    if (!(tune.gamma_z >= 0.0) || !(tune.gamma_r >= 0.0))
        throw Error(Errc::InvalidArgument, "adaptation rates must be >= 0");
    if (!(tune.eps > 0.0)) throw Error(Errc::InvalidArgument, "mrac.eps must be > 0");
    if (!(tune.kz_bound > 0.0) || !(tune.kr_bound > 0.0))
        throw Error(Errc::InvalidArgument, "projection bounds must be > 0");

    MracDesign m;
    m.tf = t;
    m.A_d_z = t.T * d.A_d * t.T_inv;
    m.A_m_z = t.T * d.A_cl * t.T_inv;
    m.B0_z = t.T * d.B0;
    m.B_m_z = d.F * m.B0_z;
    m.K_bl_z = d.K * t.T_inv;
    m.F_bl = d.F;
    m.Q_lyap = tune.Q_lyap;
    m.gamma_z = tune.gamma_z;
    m.gamma_r = tune.gamma_r;
    m.eps = tune.eps;
    m.kz_bound = tune.kz_bound;
    m.kr_bound = tune.kr_bound;
    // Control effectiveness is positive across the whole c.g. envelope.
    m.sgn_lambda = 1.0;

    const bool companion = std::abs(m.A_m_z(0, 0)) <= COMPANION_TOL && std::abs(m.A_m_z(0, 1) - 1.0) <= COMPANION_TOL &&
                           std::abs(m.B0_z[0]) <= COMPANION_TOL && std::abs(m.B_m_z[0]) <= COMPANION_TOL;
    if (!companion) throw Error(Errc::CompanionFormViolation, "transformed reference model is not in companion form");

    m.P = solve_lyapunov(m.A_m_z, m.Q_lyap);
    return m;
}

/// Uncertain plant in z coordinates: shift row [0 1] on top, dynamics in row 2.
struct CompanionPlant {
    Mat<2, 2> A;
    Vec<2> B;
};

/**
 * Companion-form model of a plant seen through the nominal transform.
 *
 * The elevator lift term is dropped (as in the design model) and the first
 * row is the exact shift row; only the moment row carries uncertainty.
 */
[[nodiscard]] inline CompanionPlant companion_plant(const ZTransform& t, const PlantModel& p) noexcept {
    Mat<2, 1> b_moment = p.B;
    b_moment(0, 0) = 0.0;
    const Mat<2, 2> a_z = t.T * p.A * t.T_inv;
    const Vec<2> b_z = t.T * b_moment;
    CompanionPlant c;
    c.A = Mat<2, 2>{{0.0, 1.0, a_z(1, 0), a_z(1, 1)}};
    c.B = Vec<2>{{0.0, b_z[1]}};
    return c;
}

/// Plant in x coordinates whose companion model is exactly `c`.
[[nodiscard]] inline PlantModel plant_from_companion(const ZTransform& t, const CompanionPlant& c, double mu) noexcept {
    PlantModel p;
    p.A = t.T_inv * c.A * t.T;
    p.B = t.T_inv * c.B;
    p.mu = mu;
    return p;
}

struct IdealGains {
    Mat<1, 2> K_z;       // adaptive share, total minus baseline
    double K_r = 0.0;
    double lambda = 0.0;
    Mat<1, 2> K_z_total; // satisfies A - B K_z_total = A_m_z
    double K_r_total = 0.0; // satisfies B K_r_total = B_m_z
};

/// Gains that satisfy the model matching conditions against the plant `c`.
[[nodiscard]] inline IdealGains ideal_gains(const MracDesign& m, const CompanionPlant& c) {
    const double b_true = c.B[1];
    const double b_nom = m.B0_z[1];
    if (!(std::abs(b_true) >= 1e-12) || !(std::abs(b_nom) >= 1e-12))
        throw Error(Errc::DegenerateInput, "input effectiveness of plant or design model is ~0");

    IdealGains g;
    g.lambda = b_true / b_nom;
    const double lb = g.lambda * b_nom;
    for (std::size_t j = 0; j < 2; ++j) {
        g.K_z_total[j] = (c.A(1, j) - m.A_m_z(1, j)) / lb;
        // Written against the design plant so a matched plant yields exact zeros.
        g.K_z[j] = (c.A(1, j) - m.A_d_z(1, j)) / lb + (1.0 / g.lambda - 1.0) * m.K_bl_z[j];
    }
    g.K_r_total = m.B_m_z[1] / lb;
    g.K_r = (m.B_m_z[1] - b_nom * m.F_bl) / lb + (1.0 / g.lambda - 1.0) * m.F_bl;
    return g;
}

[[nodiscard]] inline double adaptive_control(const AdaptiveGains& g, const Vec<2>& z, double r) noexcept {
    return -(g.K_z * z).scalar() + g.K_r * r;
}

/// Boundary clamp of a rate on the box [-bound, bound]: outward pushes at the face are removed.
[[nodiscard]] constexpr double project(double value, double raw_deriv, double bound) noexcept {
    return (std::abs(value) >= bound && value * raw_deriv > 0.0) ? 0.0 : raw_deriv;
}

template<std::size_t N>
[[nodiscard]] constexpr RowVec<N> project(const RowVec<N>& value, const RowVec<N>& raw_deriv, double bound) noexcept {
    RowVec<N> out{};
    for (std::size_t i = 0; i < N; ++i) out[i] = project(value[i], raw_deriv[i], bound);
    return out;
}

/// Gain rates from the Lyapunov-based laws with projection, frozen inside the dead zone.
[[nodiscard]] inline AdaptiveGains update_derivs(const MracDesign& m, const AdaptiveGains& g, const Vec<2>& e,
                                                 const Vec<2>& z, double r) noexcept {
    AdaptiveGains d{};
    if (norm2(e) <= m.eps) return d;
    const double s = (e.transpose() * m.P * m.B0_z).scalar();
    const RowVec<2> raw_kz = (m.gamma_z * m.sgn_lambda * s) * z.transpose();
    const double raw_kr = -m.gamma_r * m.sgn_lambda * s * r;
    d.K_z = project(g.K_z, raw_kz, m.kz_bound);
    d.K_r = project(g.K_r, raw_kr, m.kr_bound);
    return d;
}

[[nodiscard]] inline AdaptiveGains clamp_to_box(AdaptiveGains g, const MracDesign& m) noexcept {
    for (std::size_t i = 0; i < 2; ++i) g.K_z[i] = std::clamp(g.K_z[i], -m.kz_bound, m.kz_bound);
    g.K_r = std::clamp(g.K_r, -m.kr_bound, m.kr_bound);
    return g;
}

/// Lyapunov function of the error and gain-mismatch dynamics (diagnostic only).
[[nodiscard]] inline double lyapunov_value(const MracDesign& m, const Vec<2>& e, const Mat<1, 2>& dkz, double dkr,
                                           double lambda) {
    if (!(m.gamma_z > 0.0) || !(m.gamma_r > 0.0))
        throw Error(Errc::ZeroRate, "Lyapunov value needs positive adaptation rates");
    const double state_part = (e.transpose() * m.P * e).scalar();
    const double kz_part = std::abs(lambda) / m.gamma_z * (dkz * dkz.transpose()).scalar();
    const double kr_part = std::abs(lambda) / m.gamma_r * dkr * dkr;
    return 0.5 * (state_part + kz_part + kr_part);
}

} // namespace cgmrac
