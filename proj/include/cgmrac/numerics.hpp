#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <utility>

#include "cgmrac/error.hpp"

namespace cgmrac {

// Tolerances shared by the solvers and their callers.
inline constexpr double LYAP_RES = 1e-10; // max-abs residual of A'P + PA + Q
inline constexpr double CARE_RES = 1e-8;  // max-abs residual of the Riccati equation
inline constexpr double SYM_TOL = 1e-12;  // symmetry of solver outputs
inline constexpr double PIVOT_TOL = 1e-14; // relative to the largest entry of the system

/**
 * Fixed-size dense real matrix, row-major storage.
 *
 * Everything in this project lives in 1 to 4 dimensions, so the sizes are
 * template parameters and dimension mismatches are compile errors.
 */
template<std::size_t R, std::size_t C>
struct Mat {
    static_assert(R >= 1 && C >= 1 && R <= 4 && C <= 4, "Mat supports 1x1 up to 4x4");

    std::array<double, R * C> v{};

    [[nodiscard]] static constexpr std::size_t rows() noexcept { return R; }
    [[nodiscard]] static constexpr std::size_t cols() noexcept { return C; }

    constexpr double& operator()(std::size_t i, std::size_t j) noexcept { return v[i * C + j]; }
    constexpr double operator()(std::size_t i, std::size_t j) const noexcept { return v[i * C + j]; }

    // Vector-style access for single row or single column matrices.
    constexpr double& operator[](std::size_t i) noexcept
        requires(R == 1 || C == 1)
    {
        return v[i];
    }
    constexpr double operator[](std::size_t i) const noexcept
        requires(R == 1 || C == 1)
    {
        return v[i];
    }

    [[nodiscard]] static constexpr Mat zeros() noexcept { return Mat{}; }

    [[nodiscard]] static constexpr Mat identity() noexcept
        requires(R == C)
    {
        Mat m{};
        for (std::size_t i = 0; i < R; ++i) m(i, i) = 1.0;
        return m;
    }

    [[nodiscard]] static constexpr Mat diag(const std::array<double, R>& d) noexcept
        requires(R == C)
    {
        Mat m{};
        for (std::size_t i = 0; i < R; ++i) m(i, i) = d[i];
        return m;
    }

    [[nodiscard]] constexpr double scalar() const noexcept
        requires(R == 1 && C == 1)
    {
        return v[0];
    }

    [[nodiscard]] constexpr Mat<C, R> transpose() const noexcept {
        Mat<C, R> t{};
        for (std::size_t i = 0; i < R; ++i)
            for (std::size_t j = 0; j < C; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    [[nodiscard]] constexpr Mat<1, C> row(std::size_t i) const noexcept {
        Mat<1, C> r{};
        for (std::size_t j = 0; j < C; ++j) r[j] = (*this)(i, j);
        return r;
    }

    friend constexpr bool operator==(const Mat&, const Mat&) = default;
};

template<std::size_t N>
using Vec = Mat<N, 1>;

template<std::size_t N>
using RowVec = Mat<1, N>;

template<std::size_t R, std::size_t C>
[[nodiscard]] constexpr Mat<R, C> operator+(Mat<R, C> a, const Mat<R, C>& b) noexcept {
    for (std::size_t i = 0; i < R * C; ++i) a.v[i] += b.v[i];
    return a;
}

template<std::size_t R, std::size_t C>
[[nodiscard]] constexpr Mat<R, C> operator-(Mat<R, C> a, const Mat<R, C>& b) noexcept {
    for (std::size_t i = 0; i < R * C; ++i) a.v[i] -= b.v[i];
    return a;
}

template<std::size_t R, std::size_t C>
[[nodiscard]] constexpr Mat<R, C> operator-(Mat<R, C> a) noexcept {
    for (auto& x : a.v) x = -x;
    return a;
}

template<std::size_t R, std::size_t C>
[[nodiscard]] constexpr Mat<R, C> operator*(double s, Mat<R, C> a) noexcept {
    for (auto& x : a.v) x *= s;
    return a;
}

template<std::size_t R, std::size_t C>
[[nodiscard]] constexpr Mat<R, C> operator*(Mat<R, C> a, double s) noexcept {
    return s * a;
}

template<std::size_t R, std::size_t K, std::size_t C>
[[nodiscard]] constexpr Mat<R, C> operator*(const Mat<R, K>& a, const Mat<K, C>& b) noexcept {
    Mat<R, C> m{};
    for (std::size_t i = 0; i < R; ++i)
        for (std::size_t j = 0; j < C; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < K; ++k) acc += a(i, k) * b(k, j);
            m(i, j) = acc;
        }
    return m;
}

template<std::size_t R, std::size_t C>
[[nodiscard]] constexpr double max_abs(const Mat<R, C>& a) noexcept {
    double m = 0.0;
    for (double x : a.v) m = std::max(m, std::abs(x));
    return m;
}

template<std::size_t R, std::size_t C>
[[nodiscard]] bool all_finite(const Mat<R, C>& a) noexcept {
    return std::all_of(a.v.begin(), a.v.end(), [](double x) { return std::isfinite(x); });
}

template<std::size_t N>
[[nodiscard]] constexpr double trace(const Mat<N, N>& a) noexcept {
    double t = 0.0;
    for (std::size_t i = 0; i < N; ++i) t += a(i, i);
    return t;
}

[[nodiscard]] constexpr double det(const Mat<2, 2>& a) noexcept {
    return a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
}

template<std::size_t N>
[[nodiscard]] constexpr double dot(const Vec<N>& a, const Vec<N>& b) noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < N; ++i) s += a[i] * b[i];
    return s;
}

template<std::size_t N>
[[nodiscard]] double norm2(const Vec<N>& a) noexcept {
    return std::sqrt(dot(a, a));
}

template<std::size_t N>
[[nodiscard]] constexpr bool is_symmetric(const Mat<N, N>& a, double tol = SYM_TOL) noexcept {
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = i + 1; j < N; ++j)
            if (std::abs(a(i, j) - a(j, i)) > tol * std::max(1.0, max_abs(a))) return false;
    return true;
}

/// Cholesky-based positive-definiteness test for a symmetric matrix.
template<std::size_t N>
[[nodiscard]] bool is_positive_definite(const Mat<N, N>& a) noexcept {
    Mat<N, N> l{};
    for (std::size_t j = 0; j < N; ++j) {
        double d = a(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (!(d > 0.0)) return false;
        l(j, j) = std::sqrt(d);
        for (std::size_t i = j + 1; i < N; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / l(j, j);
        }
    }
    return true;
}

namespace detail {

// Dense solve of M x = b with partial pivoting. M is N x N row-major.
template<std::size_t N>
[[nodiscard]] std::array<double, N> gauss_solve(std::array<double, N * N> m, std::array<double, N> b) {
    double scale = 0.0;
    for (double x : m) scale = std::max(scale, std::abs(x));
    if (!(scale > 0.0)) throw Error(Errc::SingularSystem, "zero coefficient matrix");

    for (std::size_t col = 0; col < N; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < N; ++r)
            if (std::abs(m[r * N + col]) > std::abs(m[piv * N + col])) piv = r;
        if (!(std::abs(m[piv * N + col]) > PIVOT_TOL * scale))
            throw Error(Errc::SingularSystem, "zero pivot in column " + std::to_string(col));
        if (piv != col) {
            for (std::size_t j = 0; j < N; ++j) std::swap(m[col * N + j], m[piv * N + j]);
            std::swap(b[col], b[piv]);
        }
        for (std::size_t r = col + 1; r < N; ++r) {
            const double f = m[r * N + col] / m[col * N + col];
            if (f == 0.0) continue;
            for (std::size_t j = col; j < N; ++j) m[r * N + j] -= f * m[col * N + j];
            b[r] -= f * b[col];
        }
    }
    std::array<double, N> x{};
    for (std::size_t i = N; i-- > 0;) {
        double s = b[i];
        for (std::size_t j = i + 1; j < N; ++j) s -= m[i * N + j] * x[j];
        x[i] = s / m[i * N + i];
    }
    return x;
}

// Solves A'P + PA = -Q without checking stability or definiteness.
template<std::size_t N>
[[nodiscard]] Mat<N, N> lyapunov_unchecked(const Mat<N, N>& a, const Mat<N, N>& q) {
    constexpr std::size_t M = N * N;
    std::array<double, M * M> sys{};
    std::array<double, M> rhs{};
    // Row (i,j) of the vectorized equation: sum_k a(k,i) p(k,j) + sum_k p(i,k) a(k,j) = -q(i,j)
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j) {
            const std::size_t row = i * N + j;
            for (std::size_t k = 0; k < N; ++k) {
                sys[row * M + (k * N + j)] += a(k, i);
                sys[row * M + (i * N + k)] += a(k, j);
            }
            rhs[row] = -q(i, j);
        }
    const auto x = gauss_solve<M>(sys, rhs);
    Mat<N, N> p{};
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j) p(i, j) = 0.5 * (x[i * N + j] + x[j * N + i]);
    return p;
}

} // namespace detail

/// Inverse by Gauss-Jordan elimination; throws SingularSystem.
template<std::size_t N>
[[nodiscard]] Mat<N, N> inverse(const Mat<N, N>& a) {
    Mat<N, N> inv{};
    for (std::size_t c = 0; c < N; ++c) {
        std::array<double, N> e{};
        e[c] = 1.0;
        const auto col = detail::gauss_solve<N>(a.v, e);
        for (std::size_t r = 0; r < N; ++r) inv(r, c) = col[r];
    }
    return inv;
}

/// Roots of s^2 - tr(A) s + det(A), larger real part first.
[[nodiscard]] inline std::pair<std::complex<double>, std::complex<double>> eig2(const Mat<2, 2>& a) noexcept {
    const double half_tr = 0.5 * trace(a);
    const double d = det(a);
    const double disc = half_tr * half_tr - d;
    if (disc >= 0.0) {
        const double s = std::sqrt(disc);
        // Avoid cancellation: compute the larger-magnitude root directly, the other via Vieta.
        const double big = half_tr + std::copysign(s, half_tr);
        double r1 = big;
        double r2 = (big != 0.0) ? d / big : 0.0;
        if (r2 > r1) std::swap(r1, r2);
        return {{r1, 0.0}, {r2, 0.0}};
    }
    const double w = std::sqrt(-disc);
    return {{half_tr, w}, {half_tr, -w}};
}

/// Characteristic polynomial coefficients c[0..N] with c[0] = 1 (Faddeev-LeVerrier).
template<std::size_t N>
[[nodiscard]] constexpr std::array<double, N + 1> char_poly(const Mat<N, N>& a) noexcept {
    std::array<double, N + 1> c{};
    c[0] = 1.0;
    Mat<N, N> m{};
    for (std::size_t k = 1; k <= N; ++k) {
        m = a * m + c[k - 1] * Mat<N, N>::identity();
        c[k] = -trace(a * m) / static_cast<double>(k);
    }
    return c;
}

/// True iff every eigenvalue of A has strictly negative real part.
template<std::size_t N>
[[nodiscard]] bool is_hurwitz(const Mat<N, N>& a) noexcept {
    if (!all_finite(a)) return false;
    if constexpr (N == 1) {
        return a(0, 0) < 0.0;
    } else if constexpr (N == 2) {
        return trace(a) < 0.0 && det(a) > 0.0;
    } else {
        // Routh array on the characteristic polynomial; all first-column entries must be positive.
        const auto c = char_poly(a);
        std::array<double, N + 1> prev{};
        std::array<double, N + 1> cur{};
        for (std::size_t i = 0, k = 0; i <= N; i += 2, ++k) prev[k] = c[i];
        for (std::size_t i = 1, k = 0; i <= N; i += 2, ++k) cur[k] = c[i];
        if (!(prev[0] > 0.0)) return false;
        for (std::size_t row = 1; row <= N; ++row) {
            if (!(cur[0] > 0.0)) return false;
            if (row == N) break;
            std::array<double, N + 1> next{};
            for (std::size_t k = 0; k < N; ++k) next[k] = (cur[0] * prev[k + 1] - prev[0] * cur[k + 1]) / cur[0];
            prev = cur;
            cur = next;
        }
        return true;
    }
}

/**
 * Solves A_m' P + P A_m = -Q for the symmetric positive-definite P.
 *
 * The equation is vectorized into an N^2 x N^2 linear system and solved by
 * Gaussian elimination with partial pivoting.
 */
template<std::size_t N>
[[nodiscard]] Mat<N, N> solve_lyapunov(const Mat<N, N>& a_m, const Mat<N, N>& q) {
    if (!is_hurwitz(a_m)) throw Error(Errc::NotHurwitz, "Lyapunov solve needs a Hurwitz matrix");
    if (!is_symmetric(q) || !is_positive_definite(q))
        throw Error(Errc::InvalidArgument, "Lyapunov weight Q must be symmetric positive-definite");
    return detail::lyapunov_unchecked(a_m, q);
}

template<std::size_t N>
[[nodiscard]] double lyapunov_residual(const Mat<N, N>& a, const Mat<N, N>& p, const Mat<N, N>& q) noexcept {
    return max_abs(a.transpose() * p + p * a + q);
}

template<std::size_t N, std::size_t M>
[[nodiscard]] double care_residual(const Mat<N, N>& a, const Mat<N, M>& b, const Mat<N, N>& qw, const Mat<M, M>& rw,
                                   const Mat<N, N>& p) {
    const Mat<N, N> bt_p_term = p * b * inverse(rw) * b.transpose() * p;
    return max_abs(a.transpose() * p + p * a - bt_p_term + qw);
}

template<std::size_t N, std::size_t M>
struct LqrSolution {
    Mat<N, N> P;
    Mat<M, N> K;
    int iterations = 0;
};

/**
 * Stabilizing solution of A'P + PA - P B Rw^-1 B' P + Qw = 0 by Newton-Kleinman.
 *
 * The initial gain comes from the Bass construction: with beta above the
 * spectral abscissa of A, Z solving (A + beta I) Z + Z (A + beta I)' = 2 B B'
 * gives K0 = B' Z^-1 such that A - B K0 is Hurwitz (requires controllability).
 */
template<std::size_t N, std::size_t M>
[[nodiscard]] LqrSolution<N, M> lqr(const Mat<N, N>& a, const Mat<N, M>& b, const Mat<N, N>& qw,
                                    const Mat<M, M>& rw) {
    if (!all_finite(a) || !all_finite(b) || !all_finite(qw) || !all_finite(rw))
        throw Error(Errc::InvalidArgument, "non-finite Riccati input");
    if (!is_symmetric(qw) || !is_positive_definite(qw))
        throw Error(Errc::InvalidArgument, "state weight Qw must be symmetric positive-definite");
    if (!is_symmetric(rw) || !is_positive_definite(rw))
        throw Error(Errc::InvalidArgument, "input weight Rw must be symmetric positive-definite");
    if (max_abs(b) == 0.0) throw Error(Errc::NoStabilizingSolution, "input matrix B is zero");

    const Mat<M, M> rw_inv = inverse(rw);
    const auto identity = Mat<N, N>::identity();

    Mat<M, N> k{};
    if (!is_hurwitz(a)) {
        // Gershgorin-style bound on the spectral abscissa.
        double beta = 1.0;
        for (std::size_t i = 0; i < N; ++i) {
            double row = 0.0;
            for (std::size_t j = 0; j < N; ++j) row += std::abs(a(i, j));
            beta = std::max(beta, row + 1.0);
        }
        try {
            const Mat<N, N> shifted = (a + beta * identity).transpose();
            const Mat<N, N> z = detail::lyapunov_unchecked(shifted, -2.0 * (b * b.transpose()));
            k = b.transpose() * inverse(z);
        } catch (const Error&) {
            throw Error(Errc::NoStabilizingSolution, "no stabilizing initial gain (uncontrollable pair)");
        }
        if (!is_hurwitz(a - b * k))
            throw Error(Errc::NoStabilizingSolution, "initial gain does not stabilize the pair");
    }

    constexpr int kMaxIterations = 100;
    Mat<N, N> p{};
    for (int it = 1; it <= kMaxIterations; ++it) {
        const Mat<N, N> a_k = a - b * k;
        Mat<N, N> p_next{};
        try {
            p_next = solve_lyapunov(a_k, qw + k.transpose() * rw * k);
        } catch (const Error& e) {
            throw Error(Errc::NoStabilizingSolution, std::string("Newton-Kleinman iterate failed: ") + e.what());
        }
        k = rw_inv * b.transpose() * p_next;
        const double step = max_abs(p_next - p);
        p = p_next;
        if (it > 1 && step <= 1e-12 * std::max(1.0, max_abs(p))) {
            if (care_residual(a, b, qw, rw, p) > CARE_RES)
                throw Error(Errc::NoStabilizingSolution, "Riccati residual above tolerance");
            return {p, k, it};
        }
    }
    throw Error(Errc::NoStabilizingSolution, "Newton-Kleinman did not converge");
}

/// Stabilizing Riccati solution P; see lqr() for the gain.
template<std::size_t N, std::size_t M>
[[nodiscard]] Mat<N, N> solve_care(const Mat<N, N>& a, const Mat<N, M>& b, const Mat<N, N>& qw, const Mat<M, M>& rw) {
    return lqr(a, b, qw, rw).P;
}

// Fixed-step integration over plain arrays of state.
template<std::size_t N>
using State = std::array<double, N>;

template<std::size_t N>
[[nodiscard]] constexpr State<N> axpy(const State<N>& x, double h, const State<N>& d) noexcept {
    State<N> out{};
    for (std::size_t i = 0; i < N; ++i) out[i] = x[i] + h * d[i];
    return out;
}

/// Classical fourth-order Runge-Kutta step of s' = f(t, s).
template<std::size_t N, typename F>
[[nodiscard]] State<N> rk4_step(F&& f, double t, const State<N>& s, double h) {
    const State<N> k1 = f(t, s);
    const State<N> k2 = f(t + 0.5 * h, axpy(s, 0.5 * h, k1));
    const State<N> k3 = f(t + 0.5 * h, axpy(s, 0.5 * h, k2));
    const State<N> k4 = f(t + h, axpy(s, h, k3));
    State<N> out{};
    for (std::size_t i = 0; i < N; ++i) out[i] = s[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    return out;
}

} // namespace cgmrac
