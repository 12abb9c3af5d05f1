#pragma once

// Frozen reference values. Each was computed once by an independent route
// and is only read here; see tests/oracles/ for the scripts.

namespace shearflame::fixtures {

// A1 for the cellular flow f = (cos 2 pi x1 + cos 2 pi x2 - 2) / 2,
// P = e3, d = 0.2, from a find_A1 run on a 128^2 grid (tol 0.005).
inline constexpr double kA1Cellular128 = 1.097102;
inline constexpr double kA1Cellular128Lo = 1.095862;
inline constexpr double kA1Cellular128Hi = 1.100362;

// Counterexample profile (amplitude 0.16, d = 0.2, n = 2): non-cutoff
// effective value at A = 1 from a long-time run (T = 32) on a 64^2 grid.
inline constexpr double kCounterexampleLongTime64 = -0.14082482;
// Required margin below zero, half the oracle magnitude.
inline constexpr double kDeltaCe = 0.0704;

}  // namespace shearflame::fixtures
