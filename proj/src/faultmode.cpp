#include "gfm/faultmode.hpp"

#include <algorithm>
#include <cmath>

namespace gfm {

namespace {
// Timer comparisons tolerate one part in 1e12 of accumulation rounding so a
// nominal 10-step debounce fires on the 10th step, not the 11th.
constexpr double kTimerSlack = 1e-12;
}  // namespace

DetectorResult fault_detector_step(FaultModeState& s, double v_pu,
                                   double p_droop, double p_fm,
                                   const FaultModeParams& params, double dt) {
    DetectorResult r;
    const bool sf_now = v_pu < params.v_threshold;
    if (s.fm == Mode::Normal) {
        if (sf_now) {
            s.debounce_timer += dt;
            if (s.debounce_timer >= params.debounce - kTimerSlack) {
                s.fm = Mode::Fault;
                s.recovery_timer = 0.0;
                r.entered_fault = true;
            }
        } else {
            s.debounce_timer = 0.0;
        }
    } else {
        if (s.sf && !sf_now) r.voltage_restored = true;
        if (!sf_now) {
            s.recovery_timer += dt;
            if (s.recovery_timer >= params.recovery_hold - kTimerSlack &&
                std::abs(p_droop - p_fm) <= params.p_diff_threshold) {
                s.fm = Mode::Normal;
                s.debounce_timer = 0.0;
                r.exited_fault = true;
            }
        } else {
            s.recovery_timer = 0.0;
        }
    }
    s.sf = sf_now;
    r.sf = sf_now;
    r.fm = s.fm;
    return r;
}

double apparent_power_new(double v_plus, double v_minus, double s_n) {
    return std::max(0.0, v_plus - v_minus) * s_n;
}

double grid_code_q_ref(double v_pu, double s_new, double droop_q) {
    if (v_pu > 0.9) return droop_q;
    if (v_pu > 0.5) return 2.0 * s_new * (1.0 - v_pu);
    return s_new;
}

std::pair<double, double> fault_active_power_ref(double s_new, double q_ref) {
    if (std::abs(q_ref) >= s_new)
        return {0.0, std::copysign(s_new, q_ref)};
    return {std::sqrt(s_new * s_new - q_ref * q_ref), q_ref};
}

std::pair<double, double> select_references(Mode fm,
                                            std::pair<double, double> droop_refs,
                                            std::pair<double, double> fault_refs) {
    return fm == Mode::Normal ? droop_refs : fault_refs;
}

double dynamic_damping_step(FaultModeState& s, bool trigger, double r_v,
                            const FaultModeParams& params, double dt) {
    if (s.r_dyn < r_v) s.r_dyn = r_v;  // first call after default construction
    if (trigger && params.damping_x > 0.0) {
        s.latch = true;
        s.latch_timer = 0.0;
    }
    if (s.latch) {
        s.latch_timer += dt;
        const double top = r_v * (1.0 + params.damping_x);
        if (s.latch_timer <= params.t_d + kTimerSlack) {
            s.r_dyn = std::min(top, s.r_dyn + params.prl_slope * dt);
        } else {
            s.r_dyn = std::max(r_v, s.r_dyn - (params.damping_x * r_v / params.nrl_ramp_time) * dt);
            if (s.r_dyn <= r_v + 1e-15) s.latch = false;
        }
    }
    return s.r_dyn;
}

}  // namespace gfm
