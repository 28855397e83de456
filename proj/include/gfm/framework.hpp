// Reference frames, per-unit bases, coordinate transforms and instantaneous
// power calculation shared by every other module. All functions here are pure.
#pragma once

#include <cmath>
#include <utility>

namespace gfm {

inline constexpr double kPi = 3.14159265358979323846;

// Three-wire instantaneous phase quantities (zero sequence is discarded on
// entry to the stationary frame and never reconstructed).
struct ThreePhase {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
};

// Stationary (alpha-beta) frame vector.
struct AlphaBeta {
    double alpha = 0.0;
    double beta = 0.0;

    AlphaBeta operator+(const AlphaBeta& o) const { return {alpha + o.alpha, beta + o.beta}; }
    AlphaBeta operator-(const AlphaBeta& o) const { return {alpha - o.alpha, beta - o.beta}; }
    AlphaBeta operator*(double k) const { return {alpha * k, beta * k}; }
    double norm() const { return std::hypot(alpha, beta); }
};

inline AlphaBeta operator*(double k, const AlphaBeta& v) { return v * k; }

// Rotating-frame vector; theta records the rotation angle used at sampling.
struct DQ {
    double d = 0.0;
    double q = 0.0;
    double theta = 0.0;
};

// Per-unit base system. v_base is the phase-peak voltage so that per-unit
// voltage/current magnitudes equal phasor amplitudes; the 3/2 of the
// three-phase power sum is absorbed into s_base (i_base = 2 s / (3 v)).
struct PerUnitBase {
    double s_base = 1.0;   // apparent power, VA
    double v_base = 1.0;   // phase-peak voltage, V
    double omega0 = 2.0 * kPi * 50.0;  // nominal angular frequency, rad/s

    double i_base() const { return 2.0 * s_base / (3.0 * v_base); }
    double z_base() const { return v_base / i_base(); }
};

// Amplitude-invariant Clarke transform (zero sequence dropped).
inline AlphaBeta clarke(const ThreePhase& x) {
    return {(2.0 / 3.0) * (x.a - 0.5 * x.b - 0.5 * x.c),
            (2.0 / 3.0) * (std::sqrt(3.0) / 2.0) * (x.b - x.c)};
}

// Exact right-inverse of clarke for zero-sequence-free signals.
inline ThreePhase inverse_clarke(const AlphaBeta& x) {
    const double s = std::sqrt(3.0) / 2.0;
    return {x.alpha, -0.5 * x.alpha + s * x.beta, -0.5 * x.alpha - s * x.beta};
}

// Rotation into a frame at angle theta (norm preserving).
inline DQ park(const AlphaBeta& x, double theta) {
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    return {x.alpha * c + x.beta * s, -x.alpha * s + x.beta * c, theta};
}

inline AlphaBeta inverse_park(const DQ& x, double theta) {
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    return {x.d * c - x.q * s, x.d * s + x.q * c};
}

// Instantaneous three-phase power from stationary-frame amplitude-invariant
// vectors, in the units of v*i (SI in, SI out). Positive P flows from the
// converter toward the grid; positive Q is inductive (over-excited) injection.
inline std::pair<double, double> instantaneous_pq(const AlphaBeta& v, const AlphaBeta& i) {
    return {1.5 * (v.alpha * i.alpha + v.beta * i.beta),
            1.5 * (v.beta * i.alpha - v.alpha * i.beta)};
}

// Per-unit power on a PerUnitBase: the base already carries the 3/2, so the
// per-unit form is the plain dot/cross product.
inline std::pair<double, double> pu_power(const AlphaBeta& v, const AlphaBeta& i) {
    return {v.alpha * i.alpha + v.beta * i.beta,
            v.beta * i.alpha - v.alpha * i.beta};
}

// Wrap an angle into [0, 2*pi).
inline double wrap_angle(double theta) {
    double w = std::fmod(theta, 2.0 * kPi);
    if (w < 0.0) w += 2.0 * kPi;
    return w;
}

}  // namespace gfm
