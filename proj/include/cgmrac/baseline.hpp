#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "cgmrac/error.hpp"
#include "cgmrac/numerics.hpp"
#include "cgmrac/plant.hpp"

namespace cgmrac {

/// Candidates tried, in order, when the integral gain is left unspecified.
inline constexpr std::array<double, 2> kIntegralGainCandidates{2.0, -2.0};

/**
 * Fixed baseline law: LQ state feedback, feedforward scaled for unit DC gain
 * from reference to alpha, and integral action on the deviation of alpha from
 * the nominal closed-loop response.
 *
 *   u_bl = -K x + F r + ki * xi,   xi' = alpha - alpha_ref
 *
 * The design model is the forward-c.g. model with the lift contribution of
 * the elevator removed (B0 has a zero first entry).
 */
struct BaselineDesign {
    Mat<1, 2> K;
    double F = 0.0;
    double ki = 0.0;
    bool ki_auto = false; // ki was picked by the stability check, not configured
    Mat<2, 2> A_d;
    Mat<2, 1> B0;
    Mat<1, 2> C{{1.0, 0.0}};
    Mat<2, 2> A_cl;       // A_d - B0 K
    Mat<2, 2> P_lqr;
    double dc_gain = 0.0; // C (-A_cl)^-1 B0 F, 1 after a successful design
    double u_limit = std::numeric_limits<double>::infinity(); // integrator freezes above |u|
};

/// Reference-filter state (the nominal closed loop driven by r) and integrator.
struct BaselineState {
    Vec<2> x_ref;
    double xi = 0.0;
};

struct BaselineStateDeriv {
    Vec<2> x_ref;
    double xi = 0.0;
};

/// Closed loop of the design model with the integral channel, states (x, xi).
[[nodiscard]] inline Mat<3, 3> augmented_loop(const Mat<2, 2>& a_cl, const Mat<2, 1>& b0, const Mat<1, 2>& c,
                                              double ki) noexcept {
    Mat<3, 3> m{};
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t j = 0; j < 2; ++j) m(i, j) = a_cl(i, j);
        m(i, 2) = b0(i, 0) * ki;
    }
    m(2, 0) = c(0, 0);
    m(2, 1) = c(0, 1);
    return m;
}

[[nodiscard]] inline BaselineDesign design_baseline(const Mat<2, 2>& a_fwd, const Mat<2, 1>& b_fwd,
                                                    const Mat<2, 2>& qw, double rw, std::optional<double> ki,
                                                    double u_limit = std::numeric_limits<double>::infinity()) {
    if (!all_finite(a_fwd) || !all_finite(b_fwd)) throw Error(Errc::InvalidArgument, "non-finite design model");
    if (!(rw > 0.0) || !std::isfinite(rw)) throw Error(Errc::InvalidArgument, "baseline.rw must be > 0");
    if (ki && !std::isfinite(*ki)) throw Error(Errc::InvalidArgument, "baseline.ki must be finite");
    if (!(u_limit > 0.0)) throw Error(Errc::InvalidArgument, "baseline.u_limit must be > 0");

    BaselineDesign d;
    d.A_d = a_fwd;
    d.B0 = b_fwd;
    d.B0(0, 0) = 0.0;
    d.u_limit = u_limit;

    const auto sol = lqr(d.A_d, d.B0, qw, Mat<1, 1>{{rw}});
    d.K = sol.K;
    d.P_lqr = sol.P;
    d.A_cl = d.A_d - d.B0 * d.K;
    if (!is_hurwitz(d.A_cl)) throw Error(Errc::NoStabilizingSolution, "LQ closed loop is not Hurwitz");

    const double g = (d.C * inverse(-d.A_cl) * d.B0).scalar();
    if (!(std::abs(g) >= 1e-9)) throw Error(Errc::SingularDcGain, "DC gain of the LQ loop is ~0");
    d.F = 1.0 / g;
    d.dc_gain = g * d.F;

    if (ki) {
        d.ki = *ki;
        // ki = 0 disconnects the integrator; its pole at the origin never reaches the loop.
        if (d.ki != 0.0 && !is_hurwitz(augmented_loop(d.A_cl, d.B0, d.C, d.ki)))
            throw Error(Errc::UnstableAugmentedLoop, "integral-augmented loop unstable for ki = " + std::to_string(d.ki));
    } else {
        bool found = false;
        for (double cand : kIntegralGainCandidates) {
            if (is_hurwitz(augmented_loop(d.A_cl, d.B0, d.C, cand))) {
                d.ki = cand;
                found = true;
                break;
            }
        }
        if (!found) throw Error(Errc::UnstableAugmentedLoop, "no candidate integral gain stabilizes the loop");
        d.ki_auto = true;
    }
    return d;
}

[[nodiscard]] inline double baseline_control(const BaselineDesign& d, const PlantState& x, const BaselineState& s,
                                             double r) noexcept {
    return -(d.K * x).scalar() + d.F * r + d.ki * s.xi;
}

[[nodiscard]] inline BaselineStateDeriv baseline_aux_deriv(const BaselineDesign& d, const PlantState& x,
                                                           const BaselineState& s, double r) noexcept {
    BaselineStateDeriv ds;
    ds.x_ref = d.A_cl * s.x_ref + (d.F * r) * d.B0;
    ds.xi = (d.C * x).scalar() - (d.C * s.x_ref).scalar();
    return ds;
}

} // namespace cgmrac
