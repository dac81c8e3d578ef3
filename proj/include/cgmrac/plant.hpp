#pragma once

#include <cmath>
#include <string>

#include "cgmrac/error.hpp"
#include "cgmrac/numerics.hpp"

namespace cgmrac {

/// Linearized pitch-axis state, [alpha (rad), q (rad/s)].
using PlantState = Vec<2>;

/// Short-period pitch model at one center-of-gravity position.
struct PlantModel {
    Mat<2, 2> A;
    Mat<2, 1> B; // per rad of elevator deflection
    Mat<1, 2> C{{1.0, 0.0}};
    double mu = 0.0; // 0 = most forward c.g., 1 = most aft
};

// Corner models of the linearized pitch dynamics.
inline constexpr Mat<2, 2> kForwardA{{-1.453, 0.9672, 5.181, -1.639}};
inline constexpr Mat<2, 1> kForwardB{{0.4467, 34.79}};
inline constexpr Mat<2, 2> kAftA{{-1.45, 0.9673, 15.08, -1.414}};
inline constexpr Mat<2, 1> kAftB{{0.4461, 31.77}};

/// Entrywise affine blend of the forward (mu = 0) and aft (mu = 1) corner models.
[[nodiscard]] inline PlantModel plant_matrices(double mu) {
    if (!(mu >= 0.0 && mu <= 1.0))
        throw Error(Errc::OutOfRange, "c.g. position mu must lie in [0, 1], got " + std::to_string(mu));
    PlantModel m;
    m.A = (1.0 - mu) * kForwardA + mu * kAftA;
    m.B = (1.0 - mu) * kForwardB + mu * kAftB;
    m.mu = mu;
    return m;
}

[[nodiscard]] inline PlantState plant_deriv(const PlantModel& m, const PlantState& x, double u) noexcept {
    return m.A * x + u * m.B;
}

} // namespace cgmrac
