#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <limits>

#include "gfm/plant.hpp"

using namespace gfm;

namespace {

using C = std::complex<double>;
constexpr double kW0 = 2.0 * kPi * 50.0;
constexpr double kDt = 1e-5;
const C kJ{0.0, 1.0};

// Independent steady-state solve of the LCL + line ladder at the fundamental:
// branch impedances in per-unit are r + j*l directly (the state-space model
// divides inductances by omega0, so at omega0 the reactance equals l).
struct LadderPhasors {
    C i_c, v_cf, i_g;
};

LadderPhasors phasor_solve(const PlantParams& p, double z_grid, double src_mag,
                           const C& v_conv) {
    const C e_g{src_mag, 0.0};
    const C z1 = C(p.r_parasitic, p.l_cf);           // converter branch
    const C z3 = C(2.0 * p.r_parasitic, p.l_gf + z_grid);  // grid branch
    const C yc = kJ * p.c_f;                          // filter capacitor
    const C v_cf = (v_conv / z1 + e_g / z3) / (1.0 / z1 + 1.0 / z3 + yc);
    return {(v_conv - v_cf) / z1, v_cf, (v_cf - e_g) / z3};
}

AlphaBeta at(const C& phasor, double t) {
    const C v = phasor * std::exp(kJ * (kW0 * t));
    return {v.real(), v.imag()};
}

double state_error(const PlantState& s, const LadderPhasors& ph, double t) {
    const AlphaBeta ic = at(ph.i_c, t), vc = at(ph.v_cf, t), ig = at(ph.i_g, t);
    return std::max({(s.i_c - ic).norm(), (s.v_cf - vc).norm(), (s.i_g - ig).norm()});
}

}  // namespace

TEST_CASE("scr_to_impedance") {
    CHECK(scr_to_impedance(5.0) == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(scr_to_impedance(2.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK_THROWS_AS(scr_to_impedance(1.0), std::invalid_argument);
    CHECK_THROWS_AS(scr_to_impedance(0.5), std::invalid_argument);
}

TEST_CASE("thevenin_source applies the fault window with a continuous phase") {
    PlantParams p;
    p.omega0 = kW0;
    FaultSchedule f;
    f.enabled = true;
    f.t_on = 0.5;
    f.t_clear = 0.65;
    f.retained_voltage = 0.3;
    f.fault_impedance = 0.04;

    const TheveninOutput before = thevenin_source(0.4999, f, p);
    CHECK(before.magnitude == 1.0);
    CHECK(before.z_grid == 0.2);
    const TheveninOutput on = thevenin_source(0.5, f, p);  // half-open [t_on, t_clear)
    CHECK(on.magnitude == 0.3);
    CHECK(on.z_grid == 0.04);
    const TheveninOutput cleared = thevenin_source(0.65, f, p);
    CHECK(cleared.magnitude == 1.0);
    CHECK(cleared.z_grid == 0.2);

    // Phase carries straight through the magnitude steps.
    const double t = 0.5;
    const double ang = std::atan2(on.e_grid.beta, on.e_grid.alpha);
    CHECK(std::abs(std::remainder(ang - kW0 * t, 2.0 * kPi)) < 1e-12);

    FaultSchedule off;  // disabled: schedule has no effect
    const TheveninOutput nof = thevenin_source(0.6,  off, p);
    CHECK(nof.magnitude == 1.0);
}

TEST_CASE("effective_substep prewarp expands the step by (w0 dt)^2/12") {
    const double dte = effective_substep(kW0, kDt);
    CHECK(dte > kDt);
    const double x = kW0 * kDt;
    CHECK(std::abs(dte - kDt * (1.0 + x * x / 12.0)) < kDt * x * x * x * x);
    // Vanishes in the limit.
    CHECK(effective_substep(kW0, 1e-9) == doctest::Approx(1e-9).epsilon(1e-12));
}

TEST_CASE("trajectory holds the analytic phasor steady state for one second") {
    PlantParams p;
    p.omega0 = kW0;
    FaultSchedule nofault;

    const C v_conv_ph = 1.04 * std::exp(kJ * 0.31);
    const LadderPhasors ph = phasor_solve(p, p.z_line, p.grid_v, v_conv_ph);

    PlantState s;
    s.i_c = at(ph.i_c, 0.0);
    s.v_cf = at(ph.v_cf, 0.0);
    s.i_g = at(ph.i_g, 0.0);
    s.t = 0.0;

    const LadderDiscretization lad = make_ladder(p, p.z_line, kDt);
    double worst = 0.0;
    const int n = 100000;  // 1 s at 10 us substeps
    for (int k = 0; k < n; ++k) {
        const double t0 = k * kDt, t1 = (k + 1) * kDt;
        // Midpoint-averaged converter voltage: the 2*v_conv zero-order-hold
        // input convention then reproduces the trapezoidal endpoint sum, for
        // which the prewarped discretization is exact at omega0.
        const AlphaBeta vc = (at(v_conv_ph, t0) + at(v_conv_ph, t1)) * 0.5;
        const TheveninOutput e0 = thevenin_source(t0, nofault, p);
        const TheveninOutput e1 = thevenin_source(t1, nofault, p);
        ladder_substep(s, lad, vc, e0.e_grid, e1.e_grid);
        s.t = t1;
        worst = std::max(worst, state_error(s, ph, s.t));
    }
    CHECK(worst < 1e-6);  // measured ~1e-11: roundoff accumulation only
}

TEST_CASE("zero sources and zero state stay exactly zero") {
    PlantParams p;
    p.omega0 = kW0;
    p.grid_v = 0.0;
    FaultSchedule nofault;
    PlantState s;
    for (int k = 0; k < 200; ++k) {
        auto [next, meas] = plant_step(s, {0.0, 0.0}, nofault, p, kDt);
        s = next;
        CHECK(s.i_c.alpha == 0.0);
        CHECK(s.i_c.beta == 0.0);
        CHECK(s.v_cf.alpha == 0.0);
        CHECK(s.i_g.alpha == 0.0);
        CHECK(meas.v_pcc.alpha == 0.0);
        CHECK(meas.v_pcc.beta == 0.0);
    }
}

TEST_CASE("discrete energy balance closes exactly each substep") {
    // Trapezoidal identity: with endpoint averages x_bar = (x0+x1)/2,
    //   W1 - W0 = dte * (v_conv . i_c_bar - e_g_bar . i_g_bar
    //                    - r |i_c_bar|^2 - rg |i_g_bar|^2)
    // where W = (lc |i_c|^2 + cc |v_cf|^2 + lg |i_g|^2) / 2. This is an exact
    // algebraic property of the discretization, not an approximation.
    PlantParams p;
    p.omega0 = kW0;
    FaultSchedule nofault;
    const LadderDiscretization lad = make_ladder(p, p.z_line, kDt);
    const double lc = p.l_cf / kW0, cc = p.c_f / kW0;

    auto energy = [&](const PlantState& s) {
        return 0.5 * (lc * (s.i_c.alpha * s.i_c.alpha + s.i_c.beta * s.i_c.beta) +
                      cc * (s.v_cf.alpha * s.v_cf.alpha + s.v_cf.beta * s.v_cf.beta) +
                      lad.lg * (s.i_g.alpha * s.i_g.alpha + s.i_g.beta * s.i_g.beta));
    };
    auto dot = [](const AlphaBeta& a, const AlphaBeta& b) {
        return a.alpha * b.alpha + a.beta * b.beta;
    };

    PlantState s;  // zero start: the transient exercises all storage elements
    double drift = 0.0;
    for (int k = 0; k < 20000; ++k) {
        const double t0 = k * kDt, t1 = (k + 1) * kDt;
        const AlphaBeta v_conv = {0.9 * std::cos(kW0 * t0 + 0.2),
                                  0.9 * std::sin(kW0 * t0 + 0.2)};
        const TheveninOutput e0 = thevenin_source(t0, nofault, p);
        const TheveninOutput e1 = thevenin_source(t1, nofault, p);
        const PlantState before = s;
        const double w0 = energy(s);
        ladder_substep(s, lad, v_conv, e0.e_grid, e1.e_grid);
        const double w1 = energy(s);

        const AlphaBeta ic_bar = (before.i_c + s.i_c) * 0.5;
        const AlphaBeta ig_bar = (before.i_g + s.i_g) * 0.5;
        const AlphaBeta eg_bar = (e0.e_grid + e1.e_grid) * 0.5;
        const double flux = lad.dte * (dot(v_conv, ic_bar) - dot(eg_bar, ig_bar) -
                                       p.r_parasitic * dot(ic_bar, ic_bar) -
                                       lad.rg * dot(ig_bar, ig_bar));
        CHECK(std::abs((w1 - w0) - flux) < 1e-14);
        drift += (w1 - w0) - flux;
    }
    CHECK(std::abs(drift) < 1e-11);
}

TEST_CASE("trapezoidal step converges at second order") {
    PlantParams p;
    p.omega0 = kW0;
    FaultSchedule nofault;
    const AlphaBeta v_conv{0.9, 0.1};  // step drive from a zero state
    const double t_end = 0.02;

    auto simulate = [&](double dt) {
        const LadderDiscretization lad = make_ladder(p, p.z_line, dt);
        PlantState s;
        const long n = std::lround(t_end / dt);
        for (long k = 0; k < n; ++k) {
            const TheveninOutput e0 = thevenin_source(k * dt, nofault, p);
            const TheveninOutput e1 = thevenin_source((k + 1) * dt, nofault, p);
            ladder_substep(s, lad, v_conv, e0.e_grid, e1.e_grid);
        }
        return s;
    };

    const PlantState a = simulate(kDt);
    const PlantState b = simulate(kDt / 2.0);
    const PlantState c = simulate(kDt / 4.0);
    auto diff = [](const PlantState& x, const PlantState& y) {
        return std::max({(x.i_c - y.i_c).norm(), (x.v_cf - y.v_cf).norm(),
                         (x.i_g - y.i_g).norm()});
    };
    const double e_coarse = diff(a, b);
    const double e_fine = diff(b, c);
    REQUIRE(e_fine > 0.0);
    const double ratio = e_coarse / e_fine;  // 4 for a clean O(dt^2) method
    CHECK(ratio > 3.2);
    CHECK(ratio < 4.8);
}

TEST_CASE("pcc voltage reconstruction is consistent at quiescence") {
    // i_g = 0 and v_cf = e_grid gives di_g/dt = 0 and v_pcc = e_grid.
    PlantParams p;
    p.omega0 = kW0;
    FaultSchedule nofault;
    PlantState s;
    s.t = 0.37;
    const TheveninOutput src = thevenin_source(s.t, nofault, p);
    s.v_cf = src.e_grid;
    const PlantMeasurements m = sample_measurements(s, nofault, p);
    CHECK(std::abs(m.v_pcc.alpha - src.e_grid.alpha) < 1e-15);
    CHECK(std::abs(m.v_pcc.beta - src.e_grid.beta) < 1e-15);
}

TEST_CASE("plant_step rejects non-finite drive") {
    PlantParams p;
    p.omega0 = kW0;
    FaultSchedule nofault;
    PlantState s;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(plant_step(s, {nan, 0.0}, nofault, p, kDt), std::runtime_error);
}

TEST_CASE("faulted-region steady state matches the faulted phasor solve") {
    PlantParams p;
    p.omega0 = kW0;
    FaultSchedule f;
    f.enabled = true;
    f.t_on = 0.0;
    f.t_clear = 1.0;
    f.retained_voltage = 0.3;
    f.fault_impedance = 0.04;

    // Inside the window the steady state follows the faulted phasor solve.
    const C v_conv_ph = 0.9 * std::exp(kJ * 0.2);
    const LadderPhasors ph = phasor_solve(p, f.fault_impedance, f.retained_voltage,
                                          v_conv_ph);
    PlantState s;
    s.i_c = at(ph.i_c, 0.0);
    s.v_cf = at(ph.v_cf, 0.0);
    s.i_g = at(ph.i_g, 0.0);
    const LadderDiscretization lad = make_ladder(p, f.fault_impedance, kDt);
    for (int k = 0; k < 5000; ++k) {
        const double t0 = k * kDt, t1 = (k + 1) * kDt;
        const AlphaBeta vc = (at(v_conv_ph, t0) + at(v_conv_ph, t1)) * 0.5;
        ladder_substep(s, lad, vc, thevenin_source(t0, f, p).e_grid,
                       thevenin_source(t1, f, p).e_grid);
        s.t = t1;
    }
    CHECK(state_error(s, ph, s.t) < 1e-6);
}
