// Reusable discrete-time control primitives: PI with anti-windup,
// proportional-resonant (PR) on a rotation-form resonator, asymmetric rate
// limiter, and quarter-period delayed-signal-cancellation sequence separation.
#pragma once

#include <cstddef>
#include <vector>

#include "gfm/framework.hpp"

namespace gfm {

// PI controller memory. When limits are enabled the output is clamped and the
// integrator only accepts updates that move the output back inside the limits
// (conditional integration anti-windup).
struct PiState {
    double integrator = 0.0;
    double prev_error = 0.0;
    bool has_limits = false;
    double out_min = 0.0;
    double out_max = 0.0;
};

// One PI update with trapezoidal integral accumulation.
// Returns k_p*error + integrator (clamped if limits are set).
double pi_step(PiState& s, double error, double k_p, double k_i, double dt);

// Proportional-resonant controller: k_p + k_r*s/(s^2 + omega0^2), with the
// resonator realized as a rotating two-state section whose poles sit exactly
// on the unit circle at angle omega0*dt (bilinear transform prewarped at
// omega0, so the infinite-gain frequency lands exactly on omega0).
struct PrState {
    double k_p = 0.0;
    double k_r = 0.0;
    double omega0 = 2.0 * kPi * 50.0;
    double s0 = 0.0;  // resonator memory (rotating phasor components)
    double s1 = 0.0;
};

double pr_step(PrState& s, double error, double dt);

// Asymmetric slew limiter; value moves toward the target clipped to
// up_slope*dt upward and down_slope*dt downward, landing exactly on the
// target once within one step's travel.
struct RateLimiterState {
    double value = 0.0;
    double up_slope = 0.0;    // units per second, >= 0
    double down_slope = 0.0;  // units per second, >= 0
};

double rate_limit_step(RateLimiterState& s, double target, double dt);

// Positive/negative sequence separation by quarter-period delayed signal
// cancellation:  v+ = (v(t) + J*v(t - T0/4)) / 2  with J the +90 degree
// rotation (alpha,beta) -> (-beta,alpha), and v- = v - v+. Settles one
// quarter fundamental period after a sequence change.
struct SequenceSeparatorState {
    std::vector<AlphaBeta> buf;  // ring buffer of length f_s/(4*f0) samples
    std::size_t idx = 0;
    std::size_t filled = 0;

    explicit SequenceSeparatorState(std::size_t delay_samples = 0)
        : buf(delay_samples) {}

    // Ring length for a control rate f_s and fundamental f0.
    static std::size_t delay_length(double f_s, double f0);

    // Pre-fill the delay line with historical samples; fn(t) must return the
    // signal at negative times t in [-n*dt, -dt].
    template <typename Fn>
    void prime(Fn&& fn, double dt) {
        const std::size_t n = buf.size();
        for (std::size_t k = 0; k < n; ++k)
            buf[k] = fn(-static_cast<double>(n - k) * dt);
        idx = 0;
        filled = n;
    }
};

struct SequenceResult {
    AlphaBeta v_plus;
    AlphaBeta v_minus;
    double mag_plus = 0.0;
    double mag_minus = 0.0;
    bool settled = false;  // false during the first quarter period after reset
};

SequenceResult sequence_separate(SequenceSeparatorState& s, const AlphaBeta& v);

}  // namespace gfm
