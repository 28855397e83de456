// Fault detection with debounce and recovery timing, grid-code power
// reference rescaling for voltage sags, the Normal/Fault reference
// multiplexer, and the dynamic virtual damping state machine that temporarily
// boosts the virtual resistance after voltage restoration.
#pragma once

#include <utility>

namespace gfm {

enum class Mode { Normal, Fault };

// What re-arms the damping boost. The default fires on the fault-signal
// falling edge (voltage back above threshold), which is when the recovery
// transient happens; mode_exit instead fires on the much later Fault->Normal
// switchback after the recovery hold.
enum class DampingTrigger { voltage_restoration, mode_exit };

struct FaultModeParams {
    double v_threshold = 0.9;      // fault detection threshold, pu
    double debounce = 1e-3;        // s of continuous sag before entering Fault
    double recovery_hold = 0.15;   // s of restored voltage before leaving Fault
    double p_diff_threshold = 0.05;  // droop-vs-fault reference gate, fraction of rated
    double damping_x = 1.0;        // boost factor: r rises to r_v*(1+x)
    double t_d = 0.05;             // s the boost is held before ramping down
    double prl_slope = 10000.0;    // rise slope, pu/s (one-period rise at default)
    double nrl_ramp_time = 0.01;   // s for the ramp back down to r_v
    DampingTrigger trigger = DampingTrigger::voltage_restoration;
};

struct FaultModeState {
    bool sf = false;               // debounced-input fault signal, latest value
    Mode fm = Mode::Normal;
    double debounce_timer = 0.0;
    double recovery_timer = 0.0;
    bool latch = false;            // damping boost engaged
    double latch_timer = 0.0;      // time since the boost trigger
    double r_dyn = 0.0;            // current dynamic virtual resistance, pu
};

struct DetectorResult {
    bool sf = false;
    Mode fm = Mode::Normal;
    bool entered_fault = false;     // Normal -> Fault this step
    bool exited_fault = false;      // Fault -> Normal this step
    bool voltage_restored = false;  // sf falling edge while in Fault
};

// One detector update. sf = (v_pu < v_threshold); Normal->Fault after sf has
// been continuously true for the debounce time; Fault->Normal only after sf
// has been continuously false for recovery_hold AND the droop and fault-mode
// active power references agree within p_diff_threshold (all powers per-unit
// of the rated base).
DetectorResult fault_detector_step(FaultModeState& s, double v_pu,
                                   double p_droop, double p_fm,
                                   const FaultModeParams& params, double dt);

// Permissible apparent power during a sag from the sequence magnitudes.
double apparent_power_new(double v_plus, double v_minus, double s_n);

// Grid-code reactive power reference: voltage droop above 0.9 pu, 2*(1-v)
// scaled injection between 0.5 and 0.9, full s_new at or below 0.5.
double grid_code_q_ref(double v_pu, double s_new, double droop_q);

// Remaining active power after the reactive priority; clamps |q_ref| to s_new
// and guarantees p^2 + q^2 <= s_new^2. Returns (p_ref, q_ref).
std::pair<double, double> fault_active_power_ref(double s_new, double q_ref);

// Pure multiplexer between the droop and fault-mode reference pairs.
std::pair<double, double> select_references(Mode fm,
                                            std::pair<double, double> droop_refs,
                                            std::pair<double, double> fault_refs);

// One step of the damping state machine. On trigger the latch sets and r_dyn
// rises toward r_v*(1+x) at prl_slope; after t_d it ramps back down at
// x*r_v/nrl_ramp_time; the latch clears once r_v is reached. Re-triggerable
// at any point. Output is always within [r_v, r_v*(1+x)].
double dynamic_damping_step(FaultModeState& s, bool trigger, double r_v,
                            const FaultModeParams& params, double dt);

}  // namespace gfm
