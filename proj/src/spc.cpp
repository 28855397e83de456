#include "gfm/spc.hpp"

#include <cmath>
#include <stdexcept>

namespace gfm {

std::pair<double, double> droop_references(double p_s, double q_s,
                                           double omega_star, double omega,
                                           double v_star, double v_pcc_mag,
                                           double d_p, double d_q) {
    return {p_s + (omega_star - omega) * d_p, q_s + (v_star - v_pcc_mag) * d_q};
}

PlcGains plc_gains(double h, double zeta, double s_n, double p_max, double omega0) {
    if (h <= 0.0 || zeta <= 0.0 || s_n <= 0.0 || p_max <= 0.0 || omega0 <= 0.0)
        throw std::invalid_argument("plc_gains: all arguments must be positive");
    PlcGains g;
    g.k_ip = omega0 / (2.0 * h * s_n);
    g.k_pp = zeta * std::sqrt(2.0 * omega0 / (h * s_n * p_max));
    g.omega_n = std::sqrt(g.k_ip * p_max);
    return g;
}

std::pair<double, double> plc_step(SpcState& s, double p_ref, double p_meas,
                                   const SpcParams& params, double dt) {
    s.plc_integrator += params.k_ip * dt * (p_ref - p_meas);
    s.omega = params.omega0 + s.plc_integrator - params.k_pp * p_meas;
    s.theta = wrap_angle(s.theta + s.omega * dt);
    return {s.omega, s.theta};
}

double rpc_step(SpcState& s, double q_ref, double q_meas,
                const SpcParams& params, double dt) {
    const double z_cand = s.rpc_z + dt * (q_ref - q_meas);
    const double e_cand = s.e_mag + dt * (params.k_iq * z_cand - params.k_pq * q_meas);
    if (e_cand > params.e_max) {
        s.e_mag = params.e_max;
        if (q_ref - q_meas < 0.0) s.rpc_z = z_cand;  // only unwinding updates
    } else if (e_cand < 0.0) {
        s.e_mag = 0.0;
        if (q_ref - q_meas > 0.0) s.rpc_z = z_cand;
    } else {
        s.e_mag = e_cand;
        s.rpc_z = z_cand;
    }
    return s.e_mag;
}

AlphaBeta virtual_admittance_step(SpcState& s, const AlphaBeta& e,
                                  const AlphaBeta& v_pcc, double r_v_dyn,
                                  double l_v, double omega0, double dt) {
    const AlphaBeta u = e - v_pcc;
    const double lp = l_v / omega0;
    const double c2 = 2.0 / dt;
    const double a = r_v_dyn + lp * c2;
    const double b = r_v_dyn - lp * c2;
    const AlphaBeta y = {(-b * s.va_y.alpha + u.alpha + s.va_u.alpha) / a,
                         (-b * s.va_y.beta + u.beta + s.va_u.beta) / a};
    s.va_u = u;
    s.va_y = y;
    return y;
}

AlphaBeta circular_limit(const AlphaBeta& i_ref, double i_lim) {
    const double n = i_ref.norm();
    if (n > i_lim) return i_ref * (i_lim / n);
    return i_ref;
}

std::pair<AlphaBeta, ControlTelemetry> spc_control_step(
    SpcState& s, const PlantMeasurements& meas, double p_ref, double q_ref,
    double r_v_dyn, const SpcParams& params, double dt) {
    if (!std::isfinite(meas.v_pcc.alpha) || !std::isfinite(meas.v_pcc.beta) ||
        !std::isfinite(meas.i_c.alpha) || !std::isfinite(meas.i_c.beta))
        throw std::runtime_error("spc_control_step: non-finite measurement");

    ControlTelemetry tel;
    const auto [p, q] = pu_power(meas.v_pcc, meas.i_g);
    tel.p = p;
    tel.q = q;

    plc_step(s, p_ref, p, params, dt);
    rpc_step(s, q_ref, q, params, dt);
    tel.omega = s.omega;
    tel.theta = s.theta;
    tel.e_mag = s.e_mag;

    const AlphaBeta emf = {s.e_mag * std::cos(s.theta), s.e_mag * std::sin(s.theta)};
    const AlphaBeta i_ref_pre =
        virtual_admittance_step(s, emf, meas.v_pcc, r_v_dyn, params.l_v, params.omega0, dt);
    const AlphaBeta i_ref = circular_limit(i_ref_pre, params.i_lim);
    s.limiter_active = (i_ref_pre.norm() > params.i_lim);
    tel.i_ref_pre = i_ref_pre;
    tel.i_ref = i_ref;
    tel.limiter_active = s.limiter_active;

    // The resonator structs carry only memory; gains always come from params.
    s.cc_alpha.k_p = s.cc_beta.k_p = params.k_p_cc;
    s.cc_alpha.k_r = s.cc_beta.k_r = params.k_r_cc;
    s.cc_alpha.omega0 = s.cc_beta.omega0 = params.omega0;
    const AlphaBeta err = i_ref - meas.i_c;
    const AlphaBeta u = {pr_step(s.cc_alpha, err.alpha, dt),
                         pr_step(s.cc_beta, err.beta, dt)};
    const AlphaBeta v_cmd = meas.v_pcc + u;
    return {v_cmd, tel};
}

}  // namespace gfm
