// Electrical circuit: converter average-value voltage source, LCL filter,
// series line impedance and a Thevenin grid with a programmable symmetrical
// retained-voltage fault. Integrated per alpha/beta axis with an A-stable
// trapezoidal step whose effective step width is prewarped so the
// fundamental-frequency steady state is exact.
#pragma once

#include <stdexcept>
#include <utility>

#include "gfm/framework.hpp"

namespace gfm {

struct PlantParams {
    double l_cf = 0.05;         // converter-side filter inductance, pu
    double l_gf = 0.06;         // grid-side filter inductance, pu
    double c_f = 0.02;          // filter capacitance, pu
    double r_parasitic = 0.005; // series resistance on each inductor, pu
    double z_line = 0.2;        // line reactance, pu (1/SCR)
    double grid_v = 1.0;        // Thevenin source magnitude, pu
    double omega0 = 2.0 * kPi * 50.0;
};

// Symmetrical fault window: while t is inside [t_on, t_clear) the Thevenin
// magnitude drops to retained_voltage and its impedance becomes
// fault_impedance. Source phase omega0*t is carried through continuously.
struct FaultSchedule {
    bool enabled = false;
    double t_on = 0.0;
    double t_clear = 0.0;
    double retained_voltage = 0.3;  // pu
    double fault_impedance = 0.04;  // pu
};

struct PlantState {
    AlphaBeta i_c;   // converter-side current, pu
    AlphaBeta v_cf;  // filter capacitor voltage, pu
    AlphaBeta i_g;   // grid-side current, pu
    double t = 0.0;  // simulation time, s
};

struct PlantMeasurements {
    AlphaBeta v_pcc;
    AlphaBeta i_c;
    AlphaBeta i_g;
};

struct TheveninOutput {
    AlphaBeta e_grid;   // instantaneous source vector at angle omega0*t
    double z_grid;      // series reactance currently in circuit, pu
    double magnitude;   // source magnitude currently in effect, pu
};

// Thevenin source with the fault window applied; phase continuous.
TheveninOutput thevenin_source(double t, const FaultSchedule& schedule,
                               const PlantParams& params);

// Line reactance for a given short-circuit ratio (z = 1/scr, purely reactive).
// Throws std::invalid_argument for scr <= 1.
double scr_to_impedance(double scr);

// Effective trapezoidal step width with frequency prewarping at omega0; as
// dt -> 0 this approaches dt (second-order accurate), while at finite dt the
// omega0 steady-state trajectory is reproduced exactly.
double effective_substep(double omega0, double dt);

// Discretized per-axis state update x = [i_c, v_cf, i_g] for one grid
// impedance region. Built once per region and reused across substeps.
struct LadderDiscretization {
    double ad[3][3];
    double bd[3][2];
    double z_grid;   // region reactance, pu
    double lg;       // (l_gf + z_grid)/omega0: total grid-branch inductance
    double rg;       // grid-branch series resistance (both inductors)
    double dte;      // effective step width used in the discretization
};

LadderDiscretization make_ladder(const PlantParams& params, double z_grid, double dt);

// Advance one substep of width dt (as discretized in `lad`). v_conv is held
// constant over the substep; the grid source is evaluated at both endpoints.
void ladder_substep(PlantState& state, const LadderDiscretization& lad,
                    const AlphaBeta& v_conv, const AlphaBeta& e_grid_0,
                    const AlphaBeta& e_grid_1);

// Reconstruct the point-of-common-coupling voltage from the current state:
// v_pcc = e_grid + z_grid * di_g/dt + r * i_g, with di_g/dt taken from the
// grid-branch state equation.
PlantMeasurements sample_measurements(const PlantState& state,
                                      const FaultSchedule& schedule,
                                      const PlantParams& params);

// One plant substep through the schedule (convenience form that rebuilds the
// region discretization; the scenario loop precomputes the two regions).
// Returns the advanced state and measurements sampled at the new time.
std::pair<PlantState, PlantMeasurements> plant_step(const PlantState& state,
                                                    const AlphaBeta& v_conv,
                                                    const FaultSchedule& schedule,
                                                    const PlantParams& params,
                                                    double dt);

}  // namespace gfm
