#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include "gfm/config_io.hpp"
#include "gfm/harness.hpp"

using namespace gfm;

namespace {

struct Lcg {
    uint64_t s;
    explicit Lcg(uint64_t seed) : s(seed) {}
    double uniform() {
        s = s * 6364136223846793005ull + 1442695040888963407ull;
        return static_cast<double>(s >> 11) * 0x1.0p-53;
    }
    double range(double lo, double hi) { return lo + (hi - lo) * uniform(); }
};

// Every column of the series, in one place, so structural tests cover the
// full record and not a hand-picked subset.
const std::vector<std::vector<double> TimeSeries::*>& columns() {
    static const std::vector<std::vector<double> TimeSeries::*> cols = {
        &TimeSeries::t,          &TimeSeries::v_pcc_alpha, &TimeSeries::v_pcc_beta,
        &TimeSeries::v_pcc_a,    &TimeSeries::v_pcc_b,     &TimeSeries::v_pcc_c,
        &TimeSeries::i_g_alpha,  &TimeSeries::i_g_beta,    &TimeSeries::i_g_d,
        &TimeSeries::i_g_q,      &TimeSeries::i_c_alpha,   &TimeSeries::i_c_beta,
        &TimeSeries::i_c_d,      &TimeSeries::i_c_q,       &TimeSeries::i_ref_d_pre,
        &TimeSeries::i_ref_q_pre, &TimeSeries::i_ref_d,    &TimeSeries::i_ref_q,
        &TimeSeries::p,          &TimeSeries::q,           &TimeSeries::p_ref,
        &TimeSeries::q_ref,      &TimeSeries::omega,       &TimeSeries::theta,
        &TimeSeries::e_mag,      &TimeSeries::r_v_dyn,     &TimeSeries::limiter,
        &TimeSeries::sf,         &TimeSeries::fm,          &TimeSeries::v_plus,
        &TimeSeries::v_minus};
    return cols;
}

ScenarioConfig parse_cfg(const std::string& json) {
    return parse_scenario(json, "inline-test").cfg;
}

const char* kNoFaultJson = R"({
    "name": "steady",
    "duration": 0.4,
    "scr": 5.0,
    "setpoints": {"p_s": 0.5, "q_s": 0.0}
})";

const char* kFaultJson = R"({
    "name": "sag",
    "duration": 1.1,
    "scr": 5.0,
    "setpoints": {"p_s": 1.0, "q_s": 0.0},
    "fault": {"t_on": 0.2, "t_clear": 0.35, "retained_voltage": 0.3, "impedance": 0.04}
})";

}  // namespace

TEST_CASE("equilibrium meets the setpoints and the network equations") {
    const ScenarioConfig cfg = parse_cfg(R"({
        "name": "eq",
        "duration": 0.1,
        "plant": {"z_line": 0.2},
        "setpoints": {"p_s": 1.0, "q_s": 0.0}
    })");
    using C = std::complex<double>;
    Lcg rng(7);
    for (int trial = 0; trial < 40; ++trial) {
        Setpoints sp;
        sp.p_s = rng.range(0.1, 1.0);
        sp.q_s = rng.range(-0.3, 0.3);
        const Equilibrium eq = solve_equilibrium(cfg.plant, cfg.spc, sp);

        CHECK(std::abs(eq.p - sp.p_s) <= 1e-9);
        const double q_target =
            sp.q_s + (cfg.spc.v_star - std::abs(eq.v_pcc)) * cfg.spc.d_q;
        CHECK(std::abs(eq.q - q_target) <= 1e-9);

        // Complex power definition at the PCC.
        const C s = eq.v_pcc * std::conj(eq.i_g);
        CHECK(std::abs(s.real() - eq.p) <= 1e-12);
        CHECK(std::abs(s.imag() - eq.q) <= 1e-12);

        // Branch relations of the LCL-plus-line ladder at the fundamental.
        const C zlb{cfg.plant.r_parasitic, cfg.plant.z_line};
        const C z2{cfg.plant.r_parasitic, cfg.plant.l_gf};
        const C z1{cfg.plant.r_parasitic, cfg.plant.l_cf};
        const C yc{0.0, cfg.plant.c_f};
        const C eg{cfg.plant.grid_v, 0.0};
        CHECK(std::abs(eq.v_pcc - (eg + zlb * eq.i_g)) <= 1e-12);
        CHECK(std::abs(eq.v_cf - (eq.v_pcc + z2 * eq.i_g)) <= 1e-12);
        CHECK(std::abs(eq.i_c - (eq.i_g + yc * eq.v_cf)) <= 1e-12);
        CHECK(std::abs(eq.v_conv - (eq.v_cf + z1 * eq.i_c)) <= 1e-12);

        // The virtual admittance closes the loop: i_c = (e - v_pcc) / z_v.
        const C zv{cfg.spc.r_v, cfg.spc.l_v};
        CHECK(std::abs(eq.i_c - (eq.e - eq.v_pcc) / zv) <= 1e-9);
    }
}

TEST_CASE("no-fault run stays on the commanded operating point") {
    const ScenarioConfig cfg = parse_cfg(kNoFaultJson);
    const TimeSeries ts = run_scenario(cfg);

    REQUIRE_FALSE(ts.diverged);
    REQUIRE(ts.size() == 4000);  // 0.4 s at 10 kHz, one row per control period
    CHECK(ts.t.front() == 0.0);
    CHECK(ts.t.back() == doctest::Approx(0.3999).epsilon(1e-12));
    CHECK(ts.sample_dt == doctest::Approx(1e-4).epsilon(1e-15));
    for (const auto col : columns()) REQUIRE((ts.*col).size() == ts.size());

    CHECK(ts.events.empty());
    const double w0 = cfg.plant.omega0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        CHECK(ts.fm[i] == 0.0);
        CHECK(ts.sf[i] == 0.0);
        CHECK(ts.limiter[i] == 0.0);
        CHECK(std::abs(ts.p[i] - 0.5) <= 5e-3);
        CHECK(std::abs(ts.omega[i] - w0) <= 0.05);
        CHECK(ts.r_v_dyn[i] == cfg.spc.r_v);
        if (ts.t[i] >= 0.1) CHECK(std::abs(ts.p[i] - 0.5) <= 2e-3);
        if (ts.t[i] >= 0.02) {
            CHECK(ts.v_plus[i] > 0.9);
            CHECK(ts.v_plus[i] < 1.1);
            CHECK(ts.v_minus[i] < 0.02);
        }
    }
    CHECK(std::abs(ts.p.back() - 0.5) <= 2e-4);
    CHECK(std::abs(ts.omega.back() - w0) <= 1e-3);
    CHECK(ts.e_mag.back() > 0.9);
    CHECK(ts.e_mag.back() < 1.3);
}

TEST_CASE("recorded angle advances by exactly omega*dt each sample") {
    for (const char* json : {kNoFaultJson, kFaultJson}) {
        const TimeSeries ts = run_scenario(parse_cfg(json));
        REQUIRE_FALSE(ts.diverged);
        for (std::size_t k = 1; k < ts.size(); ++k) {
            const double step = wrap_angle(ts.theta[k] - ts.theta[k - 1]);
            CHECK(std::abs(step - ts.omega[k] * ts.sample_dt) <= 1e-9);
        }
    }
}

TEST_CASE("decimation records every Nth sample of the identical trajectory") {
    ScenarioConfig cfg = parse_cfg(kNoFaultJson);
    const TimeSeries full = run_scenario(cfg);
    cfg.decimate = 5;
    const TimeSeries dec = run_scenario(cfg);

    REQUIRE(dec.size() == 800);
    CHECK(dec.sample_dt == doctest::Approx(5e-4).epsilon(1e-15));
    for (std::size_t k = 1; k < dec.size(); ++k)
        CHECK(dec.t[k] - dec.t[k - 1] == doctest::Approx(5e-4).epsilon(1e-12));
    for (const auto col : columns()) {
        const auto& f = full.*col;
        const auto& d = dec.*col;
        REQUIRE(d.size() == 800);
        for (std::size_t k = 0; k < d.size(); ++k) {
            CHECK(d[k] == f[5 * k]);  // bitwise: decimation only skips rows
        }
    }
}

TEST_CASE("repeated runs are bitwise identical") {
    const ScenarioConfig cfg = parse_cfg(kFaultJson);
    const TimeSeries a = run_scenario(cfg);
    const TimeSeries b = run_scenario(cfg);
    REQUIRE(a.size() == b.size());
    for (const auto col : columns()) CHECK(a.*col == b.*col);
    REQUIRE(a.events.size() == b.events.size());
    for (std::size_t i = 0; i < a.events.size(); ++i) {
        CHECK(a.events[i].t == b.events[i].t);
        CHECK(a.events[i].to == b.events[i].to);
    }
}

TEST_CASE("an unstable gain flags divergence and keeps the valid prefix") {
    ScenarioConfig cfg = parse_cfg(kNoFaultJson);
    cfg.spc.k_p_cc *= 1e9;
    const TimeSeries ts = run_scenario(cfg);
    CHECK(ts.diverged);
    CHECK_FALSE(ts.diagnostic.empty());
    CHECK(ts.size() < 4000);  // stopped early
    for (const auto col : columns())
        for (const double v : ts.*col) CHECK(std::isfinite(v));
}

TEST_CASE("overshoot measures the worst window deviation") {
    const std::vector<double> t{0.0, 1.0, 2.0, 3.0};
    const std::vector<double> y{1.0, 1.5, 0.8, 1.1};
    CHECK(overshoot(t, y, 1.0, 0.0, 3.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(overshoot(t, y, 1.0, 2.0, 3.0) == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(overshoot(t, y, 1.0, 0.0, 3.0, 2.0) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK_THROWS_AS(overshoot(t, y, 1.0, 5.0, 6.0), std::invalid_argument);
}

TEST_CASE("settling time finds the start of the maximal in-band suffix") {
    const std::vector<double> t{0.0, 1.0, 2.0, 3.0, 4.0};
    const std::vector<double> y{2.0, 2.0, 1.04, 0.97, 1.01};
    const auto st = settling_time(t, y, 1.0, 0.05);
    REQUIRE(st.has_value());
    CHECK(*st == 2.0);
    // A final out-of-band sample means it never settled.
    CHECK_FALSE(settling_time(t, {1.0, 1.0, 1.0, 1.0, 3.0}, 1.0, 0.05).has_value());
    // Settled from the first sample.
    const auto all_in = settling_time(t, {1.0, 1.01, 0.99, 1.0, 1.0}, 1.0, 0.05);
    REQUIRE(all_in.has_value());
    CHECK(*all_in == 0.0);
    // Explicit scale widens the band independently of the reference.
    const auto wide = settling_time(t, y, 1.0, 0.05, 20.0);
    REQUIRE(wide.has_value());
    CHECK(*wide == 0.0);
    CHECK_FALSE(settling_time({}, {}, 1.0, 0.05).has_value());
}

TEST_CASE("peak current reports the vector-norm maximum and its time") {
    const std::vector<double> t{0.0, 0.1, 0.2, 0.3};
    const std::vector<double> ia{1.0, 3.0, 0.0, -2.0};
    const std::vector<double> ib{0.0, 4.0, 1.0, 2.0};
    const PeakCurrent pk = peak_current(t, ia, ib);
    CHECK(pk.value == doctest::Approx(5.0).epsilon(1e-15));
    CHECK(pk.t == 0.1);
    CHECK_THROWS_AS(peak_current({}, {}, {}), std::invalid_argument);
}

TEST_CASE("detrended peak-to-peak isolates the superimposed swing") {
    // Cosine alternation: over whole periods it is uncorrelated with a line
    // (unlike sine), so the least-squares detrend leaves exactly the swing.
    std::vector<double> t, line, swing;
    for (int k = 0; k <= 1000; ++k) {
        const double x = k * 1e-3;
        t.push_back(x);
        line.push_back(3.0 * x + 2.0);
        swing.push_back(0.5 * std::cos(2.0 * kPi * 5.0 * x));
    }
    CHECK(detrended_peak_to_peak(t, line, 0.0, 1.0) <= 1e-12);
    CHECK(detrended_peak_to_peak(t, swing, 0.0, 1.0) ==
          doctest::Approx(1.0).epsilon(0.02));
    // Adding any straight line to the signal does not change the result.
    std::vector<double> shifted(swing);
    for (std::size_t i = 0; i < shifted.size(); ++i) shifted[i] += line[i];
    CHECK(detrended_peak_to_peak(t, shifted, 0.0, 1.0) ==
          doctest::Approx(detrended_peak_to_peak(t, swing, 0.0, 1.0)).epsilon(1e-9));
    CHECK_THROWS_AS(detrended_peak_to_peak(t, line, 0.5, 0.5), std::invalid_argument);
}

TEST_CASE("fault-run metrics capture the ride-through story") {
    const ScenarioConfig cfg = parse_cfg(kFaultJson);
    const TimeSeries ts = run_scenario(cfg);
    REQUIRE_FALSE(ts.diverged);
    const ScenarioMetrics m = compute_metrics(ts, cfg);

    REQUIRE(m.fm_events.size() == 2);
    CHECK(m.fm_events[0].to == Mode::Fault);
    CHECK(m.fm_events[0].t == doctest::Approx(0.2009).epsilon(1e-9));
    CHECK(m.fm_events[1].to == Mode::Normal);
    CHECK(m.fm_events[1].t > 0.5);   // clearing + recovery hold + power gate
    CHECK(m.fm_events[1].t < 0.7);

    CHECK(m.limiter_engaged);
    CHECK(m.limiter_first_t >= cfg.fault.t_on);
    CHECK(m.limiter_first_t < cfg.fault.t_on + 0.01);
    CHECK(m.limiter_samples > 100);
    CHECK(m.peak_i_ref <= cfg.spc.i_lim * (1.0 + 1e-9));
    CHECK(m.peak_i_g.value > 1.0);
    CHECK(m.peak_i_g.value < 1.5);
    CHECK(m.peak_i_c.value < 1.5);

    CHECK(std::abs(m.final_p - 1.0) <= 0.05);
    REQUIRE(m.p_recovery_error.has_value());
    CHECK(*m.p_recovery_error <= 0.05);
    REQUIRE(m.recovery_iq_swing.has_value());
    CHECK(*m.recovery_iq_swing > 0.0);
    REQUIRE(m.p_settling_time.has_value());
    CHECK(*m.p_settling_time >= cfg.fault.t_clear);
    CHECK(*m.p_settling_time < cfg.duration);

    // The mode column tells the same story as the event list.
    std::vector<FmEvent> from_column;
    for (std::size_t k = 1; k < ts.size(); ++k)
        if (ts.fm[k] != ts.fm[k - 1])
            from_column.push_back({ts.t[k], ts.fm[k] > 0.5 ? Mode::Fault : Mode::Normal});
    REQUIRE(from_column.size() == m.fm_events.size());
    for (std::size_t i = 0; i < from_column.size(); ++i) {
        CHECK(from_column[i].t == m.fm_events[i].t);
        CHECK(from_column[i].to == m.fm_events[i].to);
    }
}

TEST_CASE("metrics on no-fault runs omit the recovery block") {
    const ScenarioConfig cfg = parse_cfg(kNoFaultJson);
    const ScenarioMetrics m = compute_metrics(run_scenario(cfg), cfg);
    CHECK_FALSE(m.limiter_engaged);
    CHECK(m.limiter_samples == 0);
    CHECK(m.fm_events.empty());
    CHECK_FALSE(m.p_recovery_error.has_value());
    CHECK_FALSE(m.recovery_iq_swing.has_value());
    CHECK_FALSE(m.p_settling_time.has_value());
    // An empty series yields the inert default.
    const ScenarioMetrics z = compute_metrics(TimeSeries{}, cfg);
    CHECK_FALSE(z.limiter_engaged);
    CHECK(z.peak_i_ref == 0.0);
}
