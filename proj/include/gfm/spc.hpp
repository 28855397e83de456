// Synchronous power controller: droop reference generation, power loop
// controller (PLC) producing the virtual frequency/angle, reactive power
// controller (RPC) producing the EMF magnitude, virtual admittance converting
// the EMF/PCC difference into current references, circular current limiter,
// and PR current control on the converter-side current. All quantities here
// are per-unit.
#pragma once

#include <utility>

#include "gfm/blocks.hpp"
#include "gfm/framework.hpp"
#include "gfm/plant.hpp"

namespace gfm {

struct SpcParams {
    double d_p = 0.0;       // active droop gain, pu power per rad/s
    double d_q = 0.0;       // reactive droop gain, pu power per pu voltage
    double r_v = 0.107;     // virtual resistance, pu
    double l_v = 0.375;     // virtual inductance, pu
    double k_p_cc = 0.0;    // current-controller proportional gain, pu
    double k_r_cc = 0.0;    // current-controller resonant gain, pu/s
    double h = 2.0;         // inertia constant, s (tuning record; loop uses k_pp/k_ip)
    double zeta = 0.5627;   // power-loop damping ratio (tuning record)
    double k_pp = 0.0;      // PLC proportional gain, rad/s per pu power
    double k_ip = 0.0;      // PLC integral gain, rad/s^2 per pu power
    double k_pq = 0.0;      // RPC gain on measured reactive power
    double k_iq = 0.0;      // RPC gain on the excitation integrator
    double e_en = 1.0;      // nominal EMF magnitude, pu
    double e_max = 1.3;     // EMF command ceiling, pu (anti-windup clamp)
    double i_lim = 1.2;     // circular current limit, pu
    double p_max = 0.0;     // linearized power-transfer gain, pu power per rad
    double omega_star = 2.0 * kPi * 50.0;  // frequency setpoint, rad/s
    double v_star = 1.0;    // voltage setpoint, pu
    double omega0 = 2.0 * kPi * 50.0;
};

struct SpcState {
    double theta = 0.0;          // virtual rotor angle, wrapped to one turn
    double omega = 0.0;          // virtual frequency of the latest step, rad/s
    double plc_integrator = 0.0; // rad/s
    double rpc_z = 0.0;          // excitation-rate integrator
    double e_mag = 1.0;          // EMF magnitude command, pu
    AlphaBeta va_y;              // virtual-admittance output memory
    AlphaBeta va_u;              // virtual-admittance input memory
    PrState cc_alpha;            // current-controller resonator, alpha axis
    PrState cc_beta;             // current-controller resonator, beta axis
    bool limiter_active = false;
};

struct ControlTelemetry {
    double p = 0.0;
    double q = 0.0;
    double omega = 0.0;
    double theta = 0.0;
    double e_mag = 0.0;
    AlphaBeta i_ref_pre;   // current reference before the limiter
    AlphaBeta i_ref;       // current reference after the limiter
    bool limiter_active = false;
};

struct PlcGains {
    double k_pp = 0.0;
    double k_ip = 0.0;
    double omega_n = 0.0;  // natural frequency implied by the gains, rad/s
};

// Droop reference generation from the frequency and voltage setpoints.
std::pair<double, double> droop_references(double p_s, double q_s,
                                           double omega_star, double omega,
                                           double v_star, double v_pcc_mag,
                                           double d_p, double d_q);

// Power-loop gains for an inertia constant h and damping ratio zeta at rated
// power s_n against the linearized power-transfer gain p_max:
//   k_ip = omega0 / (2 h s_n),  k_pp = zeta * sqrt(2 omega0 / (h s_n p_max)).
// The implied closed loop satisfies omega_n^2 = k_ip*p_max and
// 2 zeta omega_n = k_pp*p_max. Throws std::invalid_argument on non-positive
// inputs.
PlcGains plc_gains(double h, double zeta, double s_n, double p_max, double omega0);

// One power-loop update. The proportional branch acts on the measured power
// (not the error), which removes the closed-loop zero so the response against
// a proportional power-angle plant is the canonical zero-free second order;
// the integral branch accumulates the power error:
//   integrator += k_ip*(p_ref - p)*dt;  omega = omega0 + integrator - k_pp*p;
//   theta += omega*dt.
// Returns (omega, theta).
std::pair<double, double> plc_step(SpcState& s, double p_ref, double p_meas,
                                   const SpcParams& params, double dt);

// One reactive-power-loop update driving the EMF magnitude through an
// integrated excitation rate:
//   z += (q_ref - q)*dt;  e_mag += (k_iq*z - k_pq*q)*dt;
// clamped to [0, e_max] with conditional anti-windup on z (while clamped,
// only z updates that unwind are accepted). Returns e_mag.
double rpc_step(SpcState& s, double q_ref, double q_meas,
                const SpcParams& params, double dt);

// Virtual admittance 1/(r_v_dyn + s*l_v/omega0), trapezoidally discretized
// per axis; r_v_dyn is sampled every call so damping changes act immediately.
AlphaBeta virtual_admittance_step(SpcState& s, const AlphaBeta& e,
                                  const AlphaBeta& v_pcc, double r_v_dyn,
                                  double l_v, double omega0, double dt);

// Magnitude clamp preserving direction exactly.
AlphaBeta circular_limit(const AlphaBeta& i_ref, double i_lim);

// One full control period: per-unit P/Q from the PCC measurements, PLC and
// RPC updates, EMF synthesis, virtual admittance, circular limiting, and PR
// current control on the converter-side current. Returns the converter
// voltage command for the next period. The limiter clips the reference
// BEFORE the PR controllers so they never track an infeasible reference.
std::pair<AlphaBeta, ControlTelemetry> spc_control_step(
    SpcState& s, const PlantMeasurements& meas, double p_ref, double q_ref,
    double r_v_dyn, const SpcParams& params, double dt);

}  // namespace gfm
