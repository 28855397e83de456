#include "gfm/blocks.hpp"

#include <cmath>

namespace gfm {

double pi_step(PiState& s, double error, double k_p, double k_i, double dt) {
    const double cand = s.integrator + k_i * dt * 0.5 * (error + s.prev_error);
    s.prev_error = error;
    const double raw = k_p * error + cand;
    if (s.has_limits && raw > s.out_max) {
        // Clamped high: only accept integrator movement that unwinds.
        if (cand < s.integrator) s.integrator = cand;
        return s.out_max;
    }
    if (s.has_limits && raw < s.out_min) {
        if (cand > s.integrator) s.integrator = cand;
        return s.out_min;
    }
    s.integrator = cand;
    return raw;
}

double pr_step(PrState& s, double error, double dt) {
    const double th = s.omega0 * dt;
    const double c = s.omega0 / std::tan(0.5 * th);  // prewarp constant
    const double g = s.k_r * c / (c * c + s.omega0 * s.omega0);
    const double y = s.s0 + g * error;
    const double ct = std::cos(th);
    const double st = std::sin(th);
    const double n0 = ct * s.s0 - st * s.s1 + 2.0 * g * ct * error;
    const double n1 = st * s.s0 + ct * s.s1 + 2.0 * g * st * error;
    s.s0 = n0;
    s.s1 = n1;
    return s.k_p * error + y;
}

double rate_limit_step(RateLimiterState& s, double target, double dt) {
    const double delta = target - s.value;
    if (delta > 0.0) {
        const double step = s.up_slope * dt;
        s.value += (delta > step) ? step : delta;
    } else if (delta < 0.0) {
        const double step = s.down_slope * dt;
        s.value -= (-delta > step) ? step : -delta;
    }
    return s.value;
}

std::size_t SequenceSeparatorState::delay_length(double f_s, double f0) {
    return static_cast<std::size_t>(std::lround(f_s / (4.0 * f0)));
}

SequenceResult sequence_separate(SequenceSeparatorState& s, const AlphaBeta& v) {
    SequenceResult r;
    if (s.buf.empty()) {  // degenerate separator: everything is positive sequence
        r.v_plus = v;
        r.v_minus = {0.0, 0.0};
        r.mag_plus = v.norm();
        r.settled = true;
        return r;
    }
    const AlphaBeta delayed = s.buf[s.idx];
    // Settled only when the sample just read was real input, not reset fill.
    const bool was_full = s.filled >= s.buf.size();
    s.buf[s.idx] = v;
    s.idx = (s.idx + 1) % s.buf.size();
    if (s.filled < s.buf.size()) ++s.filled;

    // +90 degree rotation of the delayed sample: (alpha,beta) -> (-beta,alpha).
    r.v_plus = {0.5 * (v.alpha - delayed.beta), 0.5 * (v.beta + delayed.alpha)};
    r.v_minus = v - r.v_plus;
    r.mag_plus = r.v_plus.norm();
    r.mag_minus = r.v_minus.norm();
    r.settled = was_full;
    return r;
}

}  // namespace gfm
