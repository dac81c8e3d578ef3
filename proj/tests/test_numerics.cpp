#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "cgmrac/numerics.hpp"
#include "cgmrac/plant.hpp"

using namespace cgmrac;
using Catch::Approx;

namespace {

template<class Fn>
Errc error_code_of(Fn&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected cgmrac::Error");
    return Errc::InvalidArgument;
}

template<std::size_t N>
Mat<N, N> random_matrix(std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Mat<N, N> m;
    for (auto& x : m.v) x = u(rng);
    return m;
}

// Gershgorin: every eigenvalue of M lies within max row sum of |M| of the origin.
template<std::size_t N>
Mat<N, N> random_hurwitz(std::mt19937_64& rng) {
    Mat<N, N> m = random_matrix<N>(rng);
    double rho = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < N; ++j) s += std::abs(m(i, j));
        rho = std::max(rho, s);
    }
    return m - (rho + 1.0) * Mat<N, N>::identity();
}

} // namespace

TEST_CASE("eig2 on known spectra") {
    const auto [a, b] = eig2(Mat<2, 2>{{0.0, 1.0, -2.0, -3.0}});
    CHECK(a.real() == Approx(-1.0).margin(1e-14));
    CHECK(b.real() == Approx(-2.0).margin(1e-14));
    CHECK(a.imag() == 0.0);

    const auto [c, d] = eig2(Mat<2, 2>{{0.0, 1.0, -1.0, 0.0}});
    CHECK(c.real() == Approx(0.0).margin(1e-15));
    CHECK(std::abs(c.imag()) == Approx(1.0));
    CHECK(d == std::conj(c));
}

TEST_CASE("eig2 forward c.g. model has one unstable root") {
    // det < 0 means real roots of opposite sign.
    CHECK(det(kForwardA) < 0.0);
    const auto [hi, lo] = eig2(kForwardA);
    CHECK(hi.real() == Approx(0.6944714236070946).epsilon(1e-12));
    CHECK(lo.real() == Approx(-3.786471423607094).epsilon(1e-12));
    CHECK_FALSE(is_hurwitz(kForwardA));
}

TEST_CASE("eig2 satisfies trace and determinant identities") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 500; ++i) {
        const auto a = random_matrix<2>(rng, -50.0, 50.0);
        const auto [l1, l2] = eig2(a);
        const double scale = 1.0 + max_abs(a) * max_abs(a);
        CHECK(std::abs((l1 + l2).real() - trace(a)) <= 1e-12 * scale);
        CHECK(std::abs((l1 * l2).real() - det(a)) <= 1e-10 * scale);
        CHECK(l1.real() >= l2.real());
    }
}

TEST_CASE("is_hurwitz agrees with a known spectrum under similarity") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> eig(-3.0, 3.0);
    auto check = [&]<std::size_t N>(std::integral_constant<std::size_t, N>) {
        for (int rep = 0; rep < 200; ++rep) {
            Mat<N, N> upper = random_matrix<N>(rng);
            bool stable = true;
            for (std::size_t i = 0; i < N; ++i) {
                for (std::size_t j = 0; j < i; ++j) upper(i, j) = 0.0;
                double l = eig(rng);
                if (std::abs(l) < 0.05) l = (l < 0 ? -0.05 : 0.05);
                upper(i, i) = l;
                stable = stable && l < 0.0;
            }
            Mat<N, N> s = random_matrix<N>(rng) + 3.0 * Mat<N, N>::identity();
            const Mat<N, N> a = s * upper * inverse(s);
            CHECK(is_hurwitz(a) == stable);
        }
    };
    check(std::integral_constant<std::size_t, 2>{});
    check(std::integral_constant<std::size_t, 3>{});
    check(std::integral_constant<std::size_t, 4>{});
}

TEST_CASE("is_hurwitz rejects marginal and non-finite matrices") {
    CHECK_FALSE(is_hurwitz(Mat<2, 2>{{0.0, 1.0, -1.0, 0.0}}));
    CHECK_FALSE(is_hurwitz(Mat<3, 3>::zeros()));
    CHECK_FALSE(is_hurwitz(Mat<2, 2>{{std::nan(""), 0.0, 0.0, -1.0}}));
    CHECK(is_hurwitz(-1.0 * Mat<4, 4>::identity()));
}

TEST_CASE("inverse") {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 100; ++i) {
        const auto a = random_matrix<3>(rng) + 4.0 * Mat<3, 3>::identity();
        CHECK(max_abs(a * inverse(a) - Mat<3, 3>::identity()) <= 1e-12);
    }
    CHECK(error_code_of([] { (void)inverse(Mat<2, 2>{{1.0, 2.0, 2.0, 4.0}}); }) == Errc::SingularSystem);
}

TEST_CASE("solve_lyapunov examples") {
    const auto p1 = solve_lyapunov(-0.5 * Mat<2, 2>::identity(), Mat<2, 2>::identity());
    CHECK(max_abs(p1 - Mat<2, 2>::identity()) <= 1e-14);

    const auto p2 = solve_lyapunov(Mat<2, 2>{{0.0, 1.0, -2.0, -3.0}}, Mat<2, 2>::identity());
    CHECK(max_abs(p2 - Mat<2, 2>{{1.25, 0.25, 0.25, 0.25}}) <= 1e-12);
}

TEST_CASE("solve_lyapunov residual on random stable systems") {
    std::mt19937_64 rng(2024);
    for (int i = 0; i < 100; ++i) {
        const auto a = random_hurwitz<2>(rng);
        const auto p = solve_lyapunov(a, Mat<2, 2>::identity());
        CHECK(lyapunov_residual(a, p, Mat<2, 2>::identity()) <= LYAP_RES);
        CHECK(is_symmetric(p));
        CHECK(is_positive_definite(p));
    }
    for (int i = 0; i < 50; ++i) {
        const auto a = random_hurwitz<4>(rng);
        const auto p = solve_lyapunov(a, Mat<4, 4>::identity());
        CHECK(lyapunov_residual(a, p, Mat<4, 4>::identity()) <= LYAP_RES);
        CHECK(is_positive_definite(p));
    }
}

TEST_CASE("solve_lyapunov preconditions") {
    CHECK(error_code_of([] { (void)solve_lyapunov(kForwardA, Mat<2, 2>::identity()); }) == Errc::NotHurwitz);
    CHECK(error_code_of([] {
              (void)solve_lyapunov(-1.0 * Mat<2, 2>::identity(), Mat<2, 2>{{1.0, 0.0, 0.0, -1.0}});
          }) == Errc::InvalidArgument);
    CHECK(error_code_of([] {
              (void)solve_lyapunov(-1.0 * Mat<2, 2>::identity(), Mat<2, 2>{{1.0, 0.5, 0.0, 1.0}});
          }) == Errc::InvalidArgument);
}

TEST_CASE("solve_care double integrator") {
    const Mat<2, 2> a{{0.0, 1.0, 0.0, 0.0}};
    const Mat<2, 1> b{{0.0, 1.0}};
    const auto sol = lqr(a, b, Mat<2, 2>::identity(), Mat<1, 1>{{1.0}});
    CHECK(sol.K(0, 0) == Approx(1.0).margin(1e-6));
    CHECK(sol.K(0, 1) == Approx(std::sqrt(3.0)).margin(1e-6));
    CHECK(care_residual(a, b, Mat<2, 2>::identity(), Mat<1, 1>{{1.0}}, sol.P) <= CARE_RES);
    CHECK(is_symmetric(sol.P));
    CHECK(is_positive_definite(sol.P));
}

TEST_CASE("solve_care on the pitch design model") {
    Mat<2, 1> b0 = kForwardB;
    b0(0, 0) = 0.0;
    const auto sol = lqr(kForwardA, b0, Mat<2, 2>::diag({10.0, 1.0}), Mat<1, 1>{{1.0}});
    CHECK(sol.K(0, 0) == Approx(2.0630907852826232).epsilon(1e-9));
    CHECK(sol.K(0, 1) == Approx(1.0097387142462906).epsilon(1e-9));
    const auto [l1, l2] = eig2(kForwardA - b0 * sol.K);
    CHECK(l1.real() <= -2.0);
    CHECK(l2.real() <= -2.0);
}

TEST_CASE("solve_care rejects an input matrix of zeros") {
    CHECK(error_code_of([] {
              (void)solve_care(kForwardA, Mat<2, 1>::zeros(), Mat<2, 2>::identity(), Mat<1, 1>{{1.0}});
          }) == Errc::NoStabilizingSolution);
}

TEST_CASE("solve_care residual on random stabilizable systems") {
    std::mt19937_64 rng(99);
    int accepted = 0;
    for (int i = 0; i < 200 && accepted < 100; ++i) {
        const auto a = random_matrix<2>(rng, -3.0, 3.0);
        Mat<2, 1> b;
        b(0, 0) = 0.1 + std::abs(random_matrix<1>(rng)(0, 0));
        b(1, 0) = 1.0 + std::abs(random_matrix<1>(rng)(0, 0));
        // Skip nearly uncontrollable pairs; their Riccati solutions are ill-conditioned.
        const Mat<2, 1> ab = a * b;
        const Mat<2, 2> ctrb{{b(0, 0), ab(0, 0), b(1, 0), ab(1, 0)}};
        if (std::abs(det(ctrb)) < 0.1 * max_abs(ctrb) * max_abs(ctrb)) continue;
        ++accepted;
        const auto sol = lqr(a, b, Mat<2, 2>::identity(), Mat<1, 1>{{1.0}});
        CHECK(care_residual(a, b, Mat<2, 2>::identity(), Mat<1, 1>{{1.0}}, sol.P) <= CARE_RES * (1.0 + max_abs(sol.P)));
        CHECK(is_hurwitz(a - b * sol.K));
    }
    CHECK(accepted == 100);
}

TEST_CASE("rk4 single step on exponential decay") {
    auto f = [](double, const State<1>& s) { return State<1>{-s[0]}; };
    const double h = 0.1;
    const double taylor = 1.0 - h + h * h / 2.0 - h * h * h / 6.0 + h * h * h * h / 24.0;
    const auto s = rk4_step(f, 0.0, State<1>{1.0}, h);
    CHECK(s[0] == Approx(taylor).margin(1e-15));
    CHECK(s[0] == Approx(0.90483750).margin(1e-8));
}

TEST_CASE("rk4 global error is fourth order") {
    // Harmonic oscillator with a time-dependent force, integrated to t = 2.
    auto f = [](double t, const State<2>& s) { return State<2>{s[1], -s[0] + std::cos(2.0 * t)}; };
    auto exact = [](double t) { return std::cos(t) + (std::cos(t) - std::cos(2.0 * t)) / 3.0; };
    auto error_with = [&](int n) {
        State<2> s{1.0, 0.0};
        const double h = 2.0 / n;
        for (int k = 0; k < n; ++k) s = rk4_step(f, k * h, s, h);
        return std::abs(s[0] - exact(2.0));
    };
    const double e1 = error_with(40);
    const double e2 = error_with(80);
    CHECK(std::log2(e1 / e2) >= 3.9);
}

TEST_CASE("rk4 convergence order on linear decay") {
    const double lambda = -1.3;
    auto f = [lambda](double, const State<1>& s) { return State<1>{lambda * s[0]}; };
    auto error_with = [&](double h) {
        State<1> s{1.0};
        const int n = static_cast<int>(std::lround(1.0 / h));
        for (int k = 0; k < n; ++k) s = rk4_step(f, k * h, s, h);
        return std::abs(s[0] - std::exp(lambda));
    };
    const double e1 = error_with(0.1);
    const double e2 = error_with(0.05);
    const double e3 = error_with(0.025);
    CHECK(std::log2(e1 / e2) >= 3.9);
    CHECK(std::log2(e2 / e3) >= 3.9);
}
