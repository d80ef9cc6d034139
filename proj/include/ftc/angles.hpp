#pragma once

#include <cmath>
#include <numbers>

namespace ftc {

inline constexpr double kPi = std::numbers::pi;

constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

// Wrap an angle to (-pi, pi].
inline double wrap_pi(double a) {
    a = std::fmod(a, 2.0 * kPi);
    if (a <= -kPi) a += 2.0 * kPi;
    if (a > kPi) a -= 2.0 * kPi;
    return a;
}

// Shortest signed difference a - b on the circle.
inline double angle_diff(double a, double b) { return wrap_pi(a - b); }

}  // namespace ftc
