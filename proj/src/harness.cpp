#include "gfm/harness.hpp"

#include <array>
#include <cmath>
#include <stdexcept>
#include <tuple>

#include "gfm/blocks.hpp"

namespace gfm {

namespace {

bool finite(const AlphaBeta& v) {
    return std::isfinite(v.alpha) && std::isfinite(v.beta);
}

std::size_t window_begin(const std::vector<double>& t, double t0) {
    std::size_t i = 0;
    while (i < t.size() && t[i] < t0) ++i;
    return i;
}

}  // namespace

Equilibrium solve_equilibrium(const PlantParams& plant, const SpcParams& spc,
                              const Setpoints& setpoints) {
    using C = std::complex<double>;
    const C zv{spc.r_v, spc.l_v};
    const C zlb{plant.r_parasitic, plant.z_line};
    const C z2{plant.r_parasitic, plant.l_gf};
    const C yc{0.0, plant.c_f};
    const C eg{plant.grid_v, 0.0};
    const C den = 1.0 + zlb / zv + yc * (zlb + z2);

    // Network solution with the current controller ideal (i_c equals the
    // virtual-admittance reference) at the fundamental frequency.
    auto net = [&](C e) {
        Equilibrium r;
        r.e = e;
        r.i_g = (e / zv - eg * (1.0 / zv + yc)) / den;
        r.v_pcc = eg + zlb * r.i_g;
        r.v_cf = r.v_pcc + z2 * r.i_g;
        r.i_c = r.i_g + yc * r.v_cf;
        r.v_conv = r.v_cf + C(plant.r_parasitic, plant.l_cf) * r.i_c;
        const C s = r.v_pcc * std::conj(r.i_g);
        r.p = s.real();
        r.q = s.imag();
        return r;
    };
    auto resid = [&](C e) {
        const Equilibrium r = net(e);
        const double q_ref =
            setpoints.q_s + (spc.v_star - std::abs(r.v_pcc)) * spc.d_q;
        return std::array<double, 2>{r.p - setpoints.p_s, r.q - q_ref};
    };

    C e = 1.05 * std::exp(C(0.0, 0.3));
    std::array<double, 2> r0{};
    for (int iter = 0; iter < 80; ++iter) {
        r0 = resid(e);
        if (std::hypot(r0[0], r0[1]) < 1e-13) break;
        // Numeric Jacobian over (Re e, Im e).
        const double h = 1e-7;
        const std::array<double, 2> rx = resid(e + C(h, 0.0));
        const std::array<double, 2> ry = resid(e + C(0.0, h));
        const double j00 = (rx[0] - r0[0]) / h, j01 = (ry[0] - r0[0]) / h;
        const double j10 = (rx[1] - r0[1]) / h, j11 = (ry[1] - r0[1]) / h;
        const double det = j00 * j11 - j01 * j10;
        if (det == 0.0) break;
        const double de_re = (-r0[0] * j11 + r0[1] * j01) / det;
        const double de_im = (-j00 * r0[1] + j10 * r0[0]) / det;
        e += C(de_re, de_im);
    }
    r0 = resid(e);
    if (std::hypot(r0[0], r0[1]) > 1e-9)
        throw std::runtime_error("equilibrium solve did not converge at the given setpoints");
    return net(e);
}

TimeSeries run_scenario(const ScenarioConfig& cfg_in) {
    ScenarioConfig cfg = cfg_in;
    if (cfg.scr > 0.0) cfg.plant.z_line = scr_to_impedance(cfg.scr);
    const double ts_ctrl = 1.0 / cfg.timing.f_control;
    const int sub = cfg.timing.plant_substeps;
    const double dt = ts_ctrl / sub;
    const double w0 = cfg.plant.omega0;
    const SpcParams& cp = cfg.spc;

    const LadderDiscretization lad_n = make_ladder(cfg.plant, cfg.plant.z_line, dt);
    const LadderDiscretization lad_f =
        make_ladder(cfg.plant, cfg.fault.fault_impedance, dt);
    auto in_fault = [&](double tt) {
        return cfg.fault.enabled && tt >= cfg.fault.t_on && tt < cfg.fault.t_clear;
    };

    // Start on the analytic steady-state trajectory so fault metrics are not
    // contaminated by a start-up transient.
    const Equilibrium eq = solve_equilibrium(cfg.plant, cfg.spc, cfg.setpoints);

    PlantState plant;
    plant.i_c = {eq.i_c.real(), eq.i_c.imag()};
    plant.v_cf = {eq.v_cf.real(), eq.v_cf.imag()};
    plant.i_g = {eq.i_g.real(), eq.i_g.imag()};
    plant.t = 0.0;

    SpcState spc;
    // The angle is primed one period back: each control step advances theta
    // before using it, so the first step lands exactly on the phasor angle.
    spc.theta = wrap_angle(std::arg(eq.e) - w0 * ts_ctrl);
    spc.omega = w0;
    spc.e_mag = std::abs(eq.e);
    spc.plc_integrator = cp.k_pp * eq.p;
    spc.rpc_z = cp.k_pq * eq.q / cp.k_iq;
    const std::complex<double> back = std::exp(std::complex<double>(0.0, -w0 * ts_ctrl));
    const std::complex<double> va_u0 = (eq.e - eq.v_pcc) * back;
    const std::complex<double> va_y0 = eq.i_c * back;
    spc.va_u = {va_u0.real(), va_u0.imag()};
    spc.va_y = {va_y0.real(), va_y0.imag()};
    // Resonator memories hold the steady controller output phasor (u for the
    // alpha axis, -j*u for the beta axis).
    const std::complex<double> upr = eq.v_conv - eq.v_pcc;
    spc.cc_alpha.s0 = upr.real();
    spc.cc_alpha.s1 = upr.imag();
    spc.cc_beta.s0 = upr.imag();
    spc.cc_beta.s1 = -upr.real();

    SequenceSeparatorState dsc(
        SequenceSeparatorState::delay_length(cfg.timing.f_control, w0 / (2.0 * kPi)));
    dsc.prime(
        [&](double tt) {
            const std::complex<double> v =
                eq.v_pcc * std::exp(std::complex<double>(0.0, w0 * tt));
            return AlphaBeta{v.real(), v.imag()};
        },
        ts_ctrl);

    FaultModeState fms;
    fms.r_dyn = cp.r_v;

    TimeSeries out;
    out.sample_dt = ts_ctrl * cfg.decimate;
    const long n = std::lround(cfg.duration / ts_ctrl);
    const std::size_t rows = static_cast<std::size_t>((n + cfg.decimate - 1) / cfg.decimate);
    auto reserve_all = [&](std::size_t m) {
        for (auto* col : {&out.t, &out.v_pcc_alpha, &out.v_pcc_beta, &out.v_pcc_a,
                          &out.v_pcc_b, &out.v_pcc_c, &out.i_g_alpha, &out.i_g_beta,
                          &out.i_g_d, &out.i_g_q, &out.i_c_alpha, &out.i_c_beta,
                          &out.i_c_d, &out.i_c_q, &out.i_ref_d_pre, &out.i_ref_q_pre,
                          &out.i_ref_d, &out.i_ref_q, &out.p, &out.q, &out.p_ref,
                          &out.q_ref, &out.omega, &out.theta, &out.e_mag, &out.r_v_dyn,
                          &out.limiter, &out.sf, &out.fm, &out.v_plus, &out.v_minus})
            col->reserve(m);
    };
    reserve_all(rows);

    for (long k = 0; k < n; ++k) {
        const double t = static_cast<double>(k) * ts_ctrl;
        plant.t = t;
        const PlantMeasurements meas = sample_measurements(plant, cfg.fault, cfg.plant);
        const SequenceResult seq = sequence_separate(dsc, meas.v_pcc);
        const auto [p, q] = pu_power(meas.v_pcc, meas.i_g);

        const auto droop = droop_references(cfg.setpoints.p_s, cfg.setpoints.q_s,
                                            cp.omega_star, spc.omega, cp.v_star,
                                            seq.mag_plus, cp.d_p, cp.d_q);
        const double s_new = apparent_power_new(seq.mag_plus, seq.mag_minus, 1.0);
        const double q_gc = grid_code_q_ref(seq.mag_plus, s_new, droop.second);
        const auto fault_refs = fault_active_power_ref(s_new, q_gc);

        const DetectorResult det = fault_detector_step(
            fms, seq.mag_plus, droop.first, fault_refs.first, cfg.faultmode, ts_ctrl);
        if (det.entered_fault || det.exited_fault) {
            // Bumpless transfer: re-seat the outer-loop integrators on the
            // measured operating point so the reference swap cannot shift the
            // virtual frequency or excitation rate, only the references.
            spc.plc_integrator = cp.k_pp * p;
            spc.rpc_z = cp.k_pq * q / cp.k_iq;
            out.events.push_back({t, det.fm});
        }
        const bool trigger = cfg.faultmode.trigger == DampingTrigger::voltage_restoration
                                 ? det.voltage_restored
                                 : det.exited_fault;
        const double r_v_dyn =
            dynamic_damping_step(fms, trigger, cp.r_v, cfg.faultmode, ts_ctrl);
        const auto [p_ref, q_ref] = select_references(det.fm, droop, fault_refs);

        AlphaBeta v_cmd;
        ControlTelemetry tel;
        try {
            std::tie(v_cmd, tel) =
                spc_control_step(spc, meas, p_ref, q_ref, r_v_dyn, cp, ts_ctrl);
        } catch (const std::exception& e) {
            out.diverged = true;
            out.diagnostic = std::string(e.what()) + " at t = " + std::to_string(t);
            break;
        }
        // Guarantee the recorded prefix is finite: overflow can hit the
        // control outputs one step before the plant state itself goes bad.
        if (!finite(v_cmd) || !finite(tel.i_ref_pre) || !std::isfinite(tel.p) ||
            !std::isfinite(tel.q) || !std::isfinite(tel.omega) ||
            !std::isfinite(tel.e_mag)) {
            out.diverged = true;
            out.diagnostic = "control output became non-finite at t = " + std::to_string(t);
            break;
        }

        if (k % cfg.decimate == 0) {
            const ThreePhase vabc = inverse_clarke(meas.v_pcc);
            const DQ ig_dq = park(meas.i_g, tel.theta);
            const DQ ic_dq = park(meas.i_c, tel.theta);
            const DQ ir_pre = park(tel.i_ref_pre, tel.theta);
            const DQ ir = park(tel.i_ref, tel.theta);
            out.t.push_back(t);
            out.v_pcc_alpha.push_back(meas.v_pcc.alpha);
            out.v_pcc_beta.push_back(meas.v_pcc.beta);
            out.v_pcc_a.push_back(vabc.a);
            out.v_pcc_b.push_back(vabc.b);
            out.v_pcc_c.push_back(vabc.c);
            out.i_g_alpha.push_back(meas.i_g.alpha);
            out.i_g_beta.push_back(meas.i_g.beta);
            out.i_g_d.push_back(ig_dq.d);
            out.i_g_q.push_back(ig_dq.q);
            out.i_c_alpha.push_back(meas.i_c.alpha);
            out.i_c_beta.push_back(meas.i_c.beta);
            out.i_c_d.push_back(ic_dq.d);
            out.i_c_q.push_back(ic_dq.q);
            out.i_ref_d_pre.push_back(ir_pre.d);
            out.i_ref_q_pre.push_back(ir_pre.q);
            out.i_ref_d.push_back(ir.d);
            out.i_ref_q.push_back(ir.q);
            out.p.push_back(tel.p);
            out.q.push_back(tel.q);
            out.p_ref.push_back(p_ref);
            out.q_ref.push_back(q_ref);
            out.omega.push_back(tel.omega);
            out.theta.push_back(tel.theta);
            out.e_mag.push_back(tel.e_mag);
            out.r_v_dyn.push_back(r_v_dyn);
            out.limiter.push_back(tel.limiter_active ? 1.0 : 0.0);
            out.sf.push_back(det.sf ? 1.0 : 0.0);
            out.fm.push_back(det.fm == Mode::Fault ? 1.0 : 0.0);
            out.v_plus.push_back(seq.mag_plus);
            out.v_minus.push_back(seq.mag_minus);
        }

        for (int m = 0; m < sub; ++m) {
            const double t0 = t + m * dt;
            const double t1 = t0 + dt;
            const LadderDiscretization& lad = in_fault(t0) ? lad_f : lad_n;
            const TheveninOutput s0 = thevenin_source(t0, cfg.fault, cfg.plant);
            const TheveninOutput s1 = thevenin_source(t1, cfg.fault, cfg.plant);
            ladder_substep(plant, lad, v_cmd, s0.e_grid, s1.e_grid);
        }
        plant.t = static_cast<double>(k + 1) * ts_ctrl;

        if (!finite(plant.i_c) || !finite(plant.v_cf) || !finite(plant.i_g)) {
            out.diverged = true;
            out.diagnostic = "plant state became non-finite at t = " + std::to_string(t);
            break;
        }
    }
    return out;
}

double overshoot(const std::vector<double>& t, const std::vector<double>& y,
                 double reference, double t0, double t1, double scale) {
    double peak = -1.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < t0 || t[i] > t1) continue;
        peak = std::max(peak, std::abs(y[i] - reference));
    }
    if (peak < 0.0) throw std::invalid_argument("overshoot: empty window");
    const double norm = (scale != 0.0) ? scale : std::abs(reference);
    return peak / norm;
}

std::optional<double> settling_time(const std::vector<double>& t,
                                    const std::vector<double>& y,
                                    double reference, double band, double scale) {
    if (t.empty()) return std::nullopt;
    const double half = band * ((scale != 0.0) ? scale : std::abs(reference));
    // Walk backward to find the last out-of-band sample.
    std::size_t i = t.size();
    while (i > 0 && std::abs(y[i - 1] - reference) <= half) --i;
    if (i == t.size()) return std::nullopt;  // never settles
    return t[i];
}

PeakCurrent peak_current(const std::vector<double>& t,
                         const std::vector<double>& i_alpha,
                         const std::vector<double>& i_beta) {
    if (t.empty()) throw std::invalid_argument("peak_current: empty series");
    PeakCurrent pk{0.0, t[0]};
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double n = std::hypot(i_alpha[i], i_beta[i]);
        if (n > pk.value) {
            pk.value = n;
            pk.t = t[i];
        }
    }
    return pk;
}

double detrended_peak_to_peak(const std::vector<double>& t,
                              const std::vector<double>& y, double t0, double t1) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    long m = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < t0 || t[i] > t1) continue;
        sx += t[i];
        sy += y[i];
        sxx += t[i] * t[i];
        sxy += t[i] * y[i];
        ++m;
    }
    if (m < 2) throw std::invalid_argument("detrended_peak_to_peak: window too small");
    const double det = m * sxx - sx * sx;
    const double slope = (m * sxy - sx * sy) / det;
    const double icept = (sy - slope * sx) / m;
    double lo = 0.0, hi = 0.0;
    bool first = true;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < t0 || t[i] > t1) continue;
        const double r = y[i] - (slope * t[i] + icept);
        if (first) {
            lo = hi = r;
            first = false;
        } else {
            lo = std::min(lo, r);
            hi = std::max(hi, r);
        }
    }
    return hi - lo;
}

ScenarioMetrics compute_metrics(const TimeSeries& ts, const ScenarioConfig& cfg) {
    ScenarioMetrics m;
    if (ts.size() == 0) return m;
    m.peak_i_c = peak_current(ts.t, ts.i_c_alpha, ts.i_c_beta);
    m.peak_i_g = peak_current(ts.t, ts.i_g_alpha, ts.i_g_beta);
    for (std::size_t i = 0; i < ts.size(); ++i) {
        m.peak_i_ref = std::max(m.peak_i_ref, std::hypot(ts.i_ref_d[i], ts.i_ref_q[i]));
        if (ts.limiter[i] > 0.5) {
            if (!m.limiter_engaged) {
                m.limiter_engaged = true;
                m.limiter_first_t = ts.t[i];
            }
            ++m.limiter_samples;
        }
    }
    m.fm_events = ts.events;
    const std::size_t last = ts.size() - 1;
    m.final_p = ts.p[last];
    m.final_q = ts.q[last];
    m.final_omega = ts.omega[last];
    m.final_e_mag = ts.e_mag[last];

    if (cfg.fault.enabled && cfg.fault.t_clear < cfg.duration && !ts.diverged) {
        m.p_recovery_error = std::abs(m.final_p - cfg.setpoints.p_s);
        const double w0 = cfg.fault.t_clear + 0.01;
        const double w1 = cfg.fault.t_clear + 0.08;
        if (ts.t[last] >= w1)
            m.recovery_iq_swing = detrended_peak_to_peak(ts.t, ts.i_g_q, w0, w1);
        const std::size_t b = window_begin(ts.t, cfg.fault.t_clear);
        if (b < ts.size()) {
            std::vector<double> tt(ts.t.begin() + b, ts.t.end());
            std::vector<double> pp(ts.p.begin() + b, ts.p.end());
            m.p_settling_time =
                settling_time(tt, pp, cfg.setpoints.p_s, 0.05,
                              std::max(std::abs(cfg.setpoints.p_s), 0.1));
        }
    }
    return m;
}

}  // namespace gfm
