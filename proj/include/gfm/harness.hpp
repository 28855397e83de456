// Scenario orchestration: wires the plant, the synchronous power controller
// and the fault-mode logic into a fixed-step simulation loop, plus the metric
// extraction used by the CLI and the acceptance suite.
#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gfm/faultmode.hpp"
#include "gfm/framework.hpp"
#include "gfm/plant.hpp"
#include "gfm/spc.hpp"

namespace gfm {

struct Setpoints {
    double p_s = 1.0;  // active power setpoint, pu
    double q_s = 0.0;  // reactive power setpoint, pu
};

struct ControlTiming {
    double f_control = 10000.0;  // control/sampling rate, Hz
    int plant_substeps = 10;     // plant substeps per control period
};

// Fully resolved, per-unit scenario description. Deterministic: no seeds.
struct ScenarioConfig {
    std::string name = "scenario";
    double duration = 1.5;       // s
    double scr = 0.0;            // >0: line impedance derived as 1/scr
    Setpoints setpoints;
    FaultSchedule fault;
    PerUnitBase base;
    PlantParams plant;
    SpcParams spc;
    FaultModeParams faultmode;
    ControlTiming timing;
    int decimate = 1;            // record every Nth control period
};

struct FmEvent {
    double t = 0.0;
    Mode to = Mode::Normal;
};

// Uniformly sampled record of every signal of interest. Columns are stored
// as parallel vectors in the exact CSV order.
struct TimeSeries {
    std::vector<double> t;
    std::vector<double> v_pcc_alpha, v_pcc_beta;
    std::vector<double> v_pcc_a, v_pcc_b, v_pcc_c;
    std::vector<double> i_g_alpha, i_g_beta, i_g_d, i_g_q;
    std::vector<double> i_c_alpha, i_c_beta, i_c_d, i_c_q;
    std::vector<double> i_ref_d_pre, i_ref_q_pre, i_ref_d, i_ref_q;
    std::vector<double> p, q, p_ref, q_ref;
    std::vector<double> omega, theta, e_mag, r_v_dyn;
    std::vector<double> limiter, sf, fm;         // 0/1 flags (fm: 0 normal, 1 fault)
    std::vector<double> v_plus, v_minus;

    std::vector<FmEvent> events;
    double sample_dt = 0.0;      // spacing of recorded samples, s
    bool diverged = false;
    std::string diagnostic;

    std::size_t size() const { return t.size(); }
};

// Steady-state phasor operating point of the closed loop at the setpoints
// (the converter EMF solved so the delivered power matches the droop
// references on the nominal grid).
struct Equilibrium {
    std::complex<double> e;       // EMF phasor, pu
    std::complex<double> i_g;     // grid-side current phasor
    std::complex<double> v_pcc;   // PCC voltage phasor
    std::complex<double> v_cf;    // capacitor voltage phasor
    std::complex<double> i_c;     // converter-side current phasor
    std::complex<double> v_conv;  // converter output phasor
    double p = 0.0;               // delivered active power, pu
    double q = 0.0;               // delivered reactive power, pu
};

// Newton solve of the equilibrium. Throws std::runtime_error if it does not
// converge (pathological setpoints).
Equilibrium solve_equilibrium(const PlantParams& plant, const SpcParams& spc,
                              const Setpoints& setpoints);

// Run the scenario. On divergence the series returned holds the valid prefix
// with diverged=true and a diagnostic.
TimeSeries run_scenario(const ScenarioConfig& cfg);

// max |signal - reference| over [t0, t1], divided by `scale` (or by
// |reference| when scale == 0). Throws std::invalid_argument on an empty
// window.
double overshoot(const std::vector<double>& t, const std::vector<double>& y,
                 double reference, double t0, double t1, double scale = 0.0);

// First time after which the signal stays within +-band*|reference| (or
// +-band*scale) of the reference until the end of the series; absent if it
// never settles.
std::optional<double> settling_time(const std::vector<double>& t,
                                    const std::vector<double>& y,
                                    double reference, double band,
                                    double scale = 0.0);

struct PeakCurrent {
    double value = 0.0;
    double t = 0.0;
};

// Maximum of sqrt(ia^2 + ib^2) over the series and when it occurs.
PeakCurrent peak_current(const std::vector<double>& t,
                         const std::vector<double>& i_alpha,
                         const std::vector<double>& i_beta);

// Peak-to-peak of a signal over [t0, t1] after removing its least-squares
// straight-line fit; isolates a superimposed swing from a slow trajectory.
double detrended_peak_to_peak(const std::vector<double>& t,
                              const std::vector<double>& y, double t0, double t1);

struct ScenarioMetrics {
    PeakCurrent peak_i_c;
    PeakCurrent peak_i_g;
    double peak_i_ref = 0.0;            // post-limiter reference norm maximum
    bool limiter_engaged = false;
    double limiter_first_t = 0.0;
    long limiter_samples = 0;
    std::vector<FmEvent> fm_events;
    double final_p = 0.0, final_q = 0.0;
    double final_omega = 0.0, final_e_mag = 0.0;
    // Post-clearing recovery quality (present only for fault scenarios).
    std::optional<double> p_recovery_error;    // |P_end - p_s|
    std::optional<double> recovery_iq_swing;   // detrended peak-to-peak of i_g_q
    std::optional<double> p_settling_time;     // P into +-5% of p_s after clearing
};

ScenarioMetrics compute_metrics(const TimeSeries& ts, const ScenarioConfig& cfg);

}  // namespace gfm
