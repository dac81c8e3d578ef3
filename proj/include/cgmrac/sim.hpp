#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "cgmrac/baseline.hpp"
#include "cgmrac/error.hpp"
#include "cgmrac/mrac.hpp"
#include "cgmrac/numerics.hpp"
#include "cgmrac/plant.hpp"

namespace cgmrac {

inline constexpr double DIVERGENCE_LIMIT = 1e6;

struct RefStep {
    double time = 0.0;      // s
    double amplitude = 0.0; // rad
};

/// Repeated steps over ~25 s; an arbitrary default, not a reproduction of any published sequence.
[[nodiscard]] inline std::vector<RefStep> default_ref_steps() {
    return {{1.0, 0.1}, {6.0, 0.0}, {11.0, 0.15}, {16.0, 0.0}, {21.0, 0.1}};
}

struct Scenario {
    double mu = 1.0;
    double dt = 1e-3;
    double t_end = 30.0;
    std::vector<RefStep> ref_steps = default_ref_steps();
    double noise_std = 0.0;
    std::uint64_t seed = 1;
    bool mrac_enabled = true;
    int sample_stride = 10;
    // Replaces plant_matrices(mu) when set; used to simulate idealized plants.
    std::optional<PlantModel> plant_override;
};

inline void validate(const Scenario& sc) {
    if (!(sc.mu >= 0.0 && sc.mu <= 1.0)) throw Error(Errc::OutOfRange, "scenario mu must lie in [0, 1]");
    if (!(sc.dt > 0.0) || !std::isfinite(sc.dt)) throw Error(Errc::InvalidArgument, "scenario.dt must be > 0");
    if (!(sc.t_end > 0.0) || !std::isfinite(sc.t_end)) throw Error(Errc::InvalidArgument, "scenario.t_end must be > 0");
    if (!(sc.noise_std >= 0.0)) throw Error(Errc::InvalidArgument, "scenario.noise_std must be >= 0");
    if (sc.sample_stride < 1) throw Error(Errc::InvalidArgument, "scenario.sample_stride must be >= 1");
    for (std::size_t i = 0; i < sc.ref_steps.size(); ++i) {
        const auto& s = sc.ref_steps[i];
        if (!std::isfinite(s.amplitude)) throw Error(Errc::InvalidArgument, "step amplitude must be finite");
        if (!(s.time >= 0.0 && s.time <= sc.t_end))
            throw Error(Errc::InvalidArgument, "step times must lie within [0, t_end]");
        if (i > 0 && !(s.time > sc.ref_steps[i - 1].time))
            throw Error(Errc::InvalidArgument, "step times must be strictly increasing");
    }
}

/// Amplitude of the latest step at or before t, zero before the first step.
[[nodiscard]] inline double reference_signal(const std::vector<RefStep>& steps, double t) noexcept {
    double r = 0.0;
    for (const auto& s : steps) {
        if (s.time <= t)
            r = s.amplitude;
        else
            break;
    }
    return r;
}

struct SimState {
    PlantState x;
    BaselineState baseline;
    Vec<2> z_m;
    AdaptiveGains gains;

    static constexpr std::size_t kSize = 10;

    [[nodiscard]] State<kSize> pack() const noexcept {
        return {x[0], x[1], baseline.x_ref[0], baseline.x_ref[1], baseline.xi,
                z_m[0], z_m[1], gains.K_z[0], gains.K_z[1], gains.K_r};
    }

    [[nodiscard]] static SimState unpack(const State<kSize>& s) noexcept {
        SimState st;
        st.x = PlantState{{s[0], s[1]}};
        st.baseline.x_ref = Vec<2>{{s[2], s[3]}};
        st.baseline.xi = s[4];
        st.z_m = Vec<2>{{s[5], s[6]}};
        st.gains.K_z = Mat<1, 2>{{s[7], s[8]}};
        st.gains.K_r = s[9];
        return st;
    }
};

struct TraceRecord {
    double t, r, alpha, q, alpha_m, u_bl, u_ad, u, e_norm, Kz1, Kz2, Kr, V_proxy;
};

enum class Verdict { Completed, Diverged };

struct SimTrace {
    Scenario scenario;
    std::vector<TraceRecord> records;
    Verdict verdict = Verdict::Completed;
    double diverged_at = 0.0; // s, valid when Diverged
    SimState final_state;
};

/// Number of integration steps for the scenario horizon.
[[nodiscard]] inline long step_count(const Scenario& sc) noexcept {
    return std::lround(sc.t_end / sc.dt);
}

[[nodiscard]] inline std::size_t expected_record_count(const Scenario& sc) noexcept {
    return static_cast<std::size_t>(step_count(sc) / sc.sample_stride) + 1;
}

namespace detail {

struct LoopSignals {
    double r, u_bl, u_ad, u, e_norm, v_proxy;
    Vec<2> e;
    Vec<2> z;
};

struct ClosedLoop {
    const PlantModel& plant;
    const BaselineDesign& bd;
    const MracDesign& md;
    const Scenario& sc;

    [[nodiscard]] LoopSignals signals(double t, const SimState& st, const Vec<2>& noise) const noexcept {
        LoopSignals sig{};
        const PlantState x_meas = st.x + noise;
        sig.r = reference_signal(sc.ref_steps, t);
        sig.z = md.tf.T * x_meas;
        sig.e = sig.z - st.z_m;
        sig.e_norm = norm2(sig.e);
        sig.u_bl = baseline_control(bd, x_meas, st.baseline, sig.r);
        sig.u_ad = sc.mrac_enabled ? adaptive_control(st.gains, sig.z, sig.r) : 0.0;
        sig.u = sig.u_bl + sig.u_ad;
        sig.v_proxy = 0.5 * (sig.e.transpose() * md.P * sig.e).scalar();
        return sig;
    }

    [[nodiscard]] State<SimState::kSize> deriv(double t, const State<SimState::kSize>& packed,
                                               const Vec<2>& noise) const noexcept {
        const SimState st = SimState::unpack(packed);
        const LoopSignals sig = signals(t, st, noise);
        SimState d{};
        d.x = plant_deriv(plant, st.x, sig.u);
        const BaselineStateDeriv aux = baseline_aux_deriv(bd, st.x + noise, st.baseline, sig.r);
        d.baseline.x_ref = aux.x_ref;
        d.baseline.xi = (std::abs(sig.u) > bd.u_limit) ? 0.0 : aux.xi;
        d.z_m = md.A_m_z * st.z_m + sig.r * md.B_m_z;
        if (sc.mrac_enabled) d.gains = update_derivs(md, st.gains, sig.e, sig.z, sig.r);
        return d.pack();
    }
};

} // namespace detail

/**
 * Integrates plant, baseline filter and integrator, reference model and
 * adaptive gains as one RK4 system with fixed step sc.dt.
 *
 * Measurement noise is drawn once per step and held across the RK4 stages.
 * Gains are clamped into the projection box after every step. The run stops
 * with a Diverged verdict as soon as any state is non-finite or exceeds
 * DIVERGENCE_LIMIT in magnitude.
 */
[[nodiscard]] inline SimTrace run_scenario(const Scenario& sc, const BaselineDesign& bd, const MracDesign& md) {
    validate(sc);
    const PlantModel plant = sc.plant_override ? *sc.plant_override : plant_matrices(sc.mu);
    const detail::ClosedLoop loop{plant, bd, md, sc};

    std::mt19937_64 rng(sc.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto draw_noise = [&]() {
        if (sc.noise_std == 0.0) return Vec<2>{};
        const double n_alpha = sc.noise_std * normal(rng);
        const double n_q = sc.noise_std * normal(rng);
        return Vec<2>{{n_alpha, n_q}};
    };

    SimTrace trace;
    trace.scenario = sc;
    const long n = step_count(sc);
    trace.records.reserve(expected_record_count(sc));

    State<SimState::kSize> s{};
    for (long k = 0;; ++k) {
        const double t = static_cast<double>(k) * sc.dt;
        const Vec<2> noise = draw_noise();
        if (k % sc.sample_stride == 0) {
            const SimState st = SimState::unpack(s);
            const auto sig = loop.signals(t, st, noise);
            trace.records.push_back({t, sig.r, st.x[0], st.x[1], st.z_m[0], sig.u_bl, sig.u_ad, sig.u, sig.e_norm,
                                     st.gains.K_z[0], st.gains.K_z[1], st.gains.K_r, sig.v_proxy});
        }
        if (k == n) break;

        auto f = [&](double tt, const State<SimState::kSize>& ss) { return loop.deriv(tt, ss, noise); };
        s = rk4_step(f, t, s, sc.dt);
        SimState next = SimState::unpack(s);
        next.gains = clamp_to_box(next.gains, md);
        s = next.pack();

        const bool bad = std::any_of(s.begin(), s.end(),
                                     [](double v) { return !std::isfinite(v) || std::abs(v) > DIVERGENCE_LIMIT; });
        if (bad) {
            trace.verdict = Verdict::Diverged;
            trace.diverged_at = static_cast<double>(k + 1) * sc.dt;
            break;
        }
    }
    trace.final_state = SimState::unpack(s);
    return trace;
}

struct SegmentMetrics {
    double start = 0.0;
    double end = 0.0;
    double target = 0.0;
    std::optional<double> overshoot_pct;   // absent for zero targets
    std::optional<double> settling_time;   // s after segment start; absent if unsettled
};

struct Metrics {
    std::vector<SegmentMetrics> segments;
    double ise = 0.0;
    AdaptiveGains final_gains;
    double max_e_norm = 0.0;
    Verdict verdict = Verdict::Completed;
};

/**
 * Step-response metrics per reference segment.
 *
 * Overshoot is measured in the direction of travel from the previous level
 * and normalized by |target|. The settling band is 2 % of |target|, or of the
 * step size when the target is zero.
 */
[[nodiscard]] inline Metrics compute_metrics(const SimTrace& tr) {
    if (tr.records.empty()) throw Error(Errc::EmptyTrace, "trace has no samples");
    Metrics m;
    m.verdict = tr.verdict;
    const auto& recs = tr.records;
    const double dt_sample = tr.scenario.dt * tr.scenario.sample_stride;
    for (const auto& rec : recs) {
        m.ise += (rec.alpha - rec.r) * (rec.alpha - rec.r) * dt_sample;
        m.max_e_norm = std::max(m.max_e_norm, rec.e_norm);
    }
    m.final_gains.K_z = Mat<1, 2>{{recs.back().Kz1, recs.back().Kz2}};
    m.final_gains.K_r = recs.back().Kr;

    const auto& steps = tr.scenario.ref_steps;
    const double t_last = recs.back().t;
    double previous = 0.0;
    for (std::size_t i = 0; i < steps.size(); ++i) {
        SegmentMetrics seg;
        seg.start = steps[i].time;
        seg.end = (i + 1 < steps.size()) ? steps[i + 1].time : tr.scenario.t_end;
        seg.target = steps[i].amplitude;
        const double direction = (seg.target >= previous) ? 1.0 : -1.0;
        const double band = 0.02 * ((seg.target != 0.0) ? std::abs(seg.target) : std::abs(seg.target - previous));
        previous = seg.target;
        if (seg.start > t_last) {
            m.segments.push_back(seg);
            continue;
        }

        double extreme = -std::numeric_limits<double>::infinity();
        double settle_from = 0.0;
        bool inside = false;
        bool any = false;
        const bool last = (i + 1 == steps.size());
        for (const auto& rec : recs) {
            if (rec.t < seg.start || rec.t > seg.end || (!last && rec.t == seg.end)) continue;
            any = true;
            extreme = std::max(extreme, direction * rec.alpha);
            if (std::abs(rec.alpha - seg.target) <= band) {
                if (!inside) settle_from = rec.t;
                inside = true;
            } else {
                inside = false;
            }
        }
        if (any && seg.target != 0.0)
            seg.overshoot_pct = std::max(0.0, extreme - direction * seg.target) / std::abs(seg.target) * 100.0;
        if (inside) seg.settling_time = settle_from - seg.start;
        m.segments.push_back(seg);
    }
    return m;
}

} // namespace cgmrac
