#include "gfm/plant.hpp"

#include <cmath>

namespace gfm {

namespace {

bool in_fault(double t, const FaultSchedule& s) {
    return s.enabled && t >= s.t_on && t < s.t_clear;
}

// Invert a 3x3 matrix by the adjugate (the ladder matrices are far from
// singular for any physical parameter set).
void invert3(const double m[3][3], double out[3][3]) {
    const double a = m[0][0], b = m[0][1], c = m[0][2];
    const double d = m[1][0], e = m[1][1], f = m[1][2];
    const double g = m[2][0], h = m[2][1], i = m[2][2];
    const double A = e * i - f * h;
    const double B = -(d * i - f * g);
    const double C = d * h - e * g;
    const double det = a * A + b * B + c * C;
    const double inv = 1.0 / det;
    out[0][0] = A * inv;
    out[0][1] = -(b * i - c * h) * inv;
    out[0][2] = (b * f - c * e) * inv;
    out[1][0] = B * inv;
    out[1][1] = (a * i - c * g) * inv;
    out[1][2] = -(a * f - c * d) * inv;
    out[2][0] = C * inv;
    out[2][1] = -(a * h - b * g) * inv;
    out[2][2] = (a * e - b * d) * inv;
}

}  // namespace

TheveninOutput thevenin_source(double t, const FaultSchedule& schedule,
                               const PlantParams& params) {
    TheveninOutput out;
    if (in_fault(t, schedule)) {
        out.magnitude = schedule.retained_voltage;
        out.z_grid = schedule.fault_impedance;
    } else {
        out.magnitude = params.grid_v;
        out.z_grid = params.z_line;
    }
    const double ang = params.omega0 * t;
    out.e_grid = {out.magnitude * std::cos(ang), out.magnitude * std::sin(ang)};
    return out;
}

double scr_to_impedance(double scr) {
    if (scr <= 1.0)
        throw std::invalid_argument("scr must exceed 1 (grid stronger than the converter rating)");
    return 1.0 / scr;
}

double effective_substep(double omega0, double dt) {
    return (2.0 / omega0) * std::tan(0.5 * omega0 * dt);
}

LadderDiscretization make_ladder(const PlantParams& params, double z_grid, double dt) {
    LadderDiscretization lad{};
    const double w0 = params.omega0;
    const double lc = params.l_cf / w0;
    const double cc = params.c_f / w0;
    lad.z_grid = z_grid;
    lad.lg = (params.l_gf + z_grid) / w0;
    lad.rg = 2.0 * params.r_parasitic;  // filter inductor plus line resistance
    lad.dte = effective_substep(w0, dt);
    const double r = params.r_parasitic;

    const double A[3][3] = {
        {-r / lc, -1.0 / lc, 0.0},
        {1.0 / cc, 0.0, -1.0 / cc},
        {0.0, 1.0 / lad.lg, -lad.rg / lad.lg},
    };
    const double B[3][2] = {
        {1.0 / lc, 0.0},
        {0.0, 0.0},
        {0.0, -1.0 / lad.lg},
    };

    const double hh = 0.5 * lad.dte;
    double m[3][3], m1[3][3];
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            m[i][j] = (i == j ? 1.0 : 0.0) - hh * A[i][j];
    invert3(m, m1);

    // ad = m1 * (I + h*A);  bd = h * m1 * B
    double ipa[3][3];
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            ipa[i][j] = (i == j ? 1.0 : 0.0) + hh * A[i][j];
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double acc = 0.0;
            for (int k = 0; k < 3; ++k) acc += m1[i][k] * ipa[k][j];
            lad.ad[i][j] = acc;
        }
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 2; ++j) {
            double acc = 0.0;
            for (int k = 0; k < 3; ++k) acc += m1[i][k] * B[k][j];
            lad.bd[i][j] = hh * acc;
        }
    return lad;
}

void ladder_substep(PlantState& state, const LadderDiscretization& lad,
                    const AlphaBeta& v_conv, const AlphaBeta& e_grid_0,
                    const AlphaBeta& e_grid_1) {
    // Trapezoidal update with endpoint-summed inputs; v_conv is zero-order
    // held so it contributes 2*v_conv.
    const double xa[3] = {state.i_c.alpha, state.v_cf.alpha, state.i_g.alpha};
    const double xb[3] = {state.i_c.beta, state.v_cf.beta, state.i_g.beta};
    const double ua[2] = {2.0 * v_conv.alpha, e_grid_0.alpha + e_grid_1.alpha};
    const double ub[2] = {2.0 * v_conv.beta, e_grid_0.beta + e_grid_1.beta};
    double na[3], nb[3];
    for (int i = 0; i < 3; ++i) {
        na[i] = lad.ad[i][0] * xa[0] + lad.ad[i][1] * xa[1] + lad.ad[i][2] * xa[2] +
                lad.bd[i][0] * ua[0] + lad.bd[i][1] * ua[1];
        nb[i] = lad.ad[i][0] * xb[0] + lad.ad[i][1] * xb[1] + lad.ad[i][2] * xb[2] +
                lad.bd[i][0] * ub[0] + lad.bd[i][1] * ub[1];
    }
    state.i_c = {na[0], nb[0]};
    state.v_cf = {na[1], nb[1]};
    state.i_g = {na[2], nb[2]};
}

PlantMeasurements sample_measurements(const PlantState& state,
                                      const FaultSchedule& schedule,
                                      const PlantParams& params) {
    const TheveninOutput src = thevenin_source(state.t, schedule, params);
    const double lg = (params.l_gf + src.z_grid) / params.omega0;
    const double rg = 2.0 * params.r_parasitic;
    const AlphaBeta digdt = {
        (state.v_cf.alpha - src.e_grid.alpha - rg * state.i_g.alpha) / lg,
        (state.v_cf.beta - src.e_grid.beta - rg * state.i_g.beta) / lg,
    };
    PlantMeasurements m;
    m.v_pcc = src.e_grid + (src.z_grid / params.omega0) * digdt +
              params.r_parasitic * state.i_g;
    m.i_c = state.i_c;
    m.i_g = state.i_g;
    return m;
}

std::pair<PlantState, PlantMeasurements> plant_step(const PlantState& state,
                                                    const AlphaBeta& v_conv,
                                                    const FaultSchedule& schedule,
                                                    const PlantParams& params,
                                                    double dt) {
    const double t0 = state.t;
    const double t1 = t0 + dt;
    const double z = in_fault(t0, schedule) ? schedule.fault_impedance : params.z_line;
    const LadderDiscretization lad = make_ladder(params, z, dt);
    const TheveninOutput s0 = thevenin_source(t0, schedule, params);
    const TheveninOutput s1 = thevenin_source(t1, schedule, params);
    PlantState next = state;
    ladder_substep(next, lad, v_conv, s0.e_grid, s1.e_grid);
    next.t = t1;
    if (!std::isfinite(next.i_c.alpha) || !std::isfinite(next.i_c.beta) ||
        !std::isfinite(next.v_cf.alpha) || !std::isfinite(next.v_cf.beta) ||
        !std::isfinite(next.i_g.alpha) || !std::isfinite(next.i_g.beta)) {
        throw std::runtime_error("plant state diverged (non-finite value)");
    }
    return {next, sample_measurements(next, schedule, params)};
}

}  // namespace gfm
