#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "ftc/error.hpp"
#include "ftc/linalg.hpp"

// Thruster geometry and mixing for the standard symmetric 4-thruster
// horizontal layout, the thrust-loss fault model F_i = K_i W_i u_i, and
// control allocation through the estimated weights.

namespace ftc {

struct ThrusterGeometry {
    double orientation = 0.0;  // rad, thruster axis angle alpha in the body frame
    double lever = 0.0;        // m, distance l from center to the thrust line

    // a = l * sec(alpha); 0.267 m for the default alpha=45deg, l=0.1888m.
    double lever_secant() const {
        const double c = std::cos(orientation);
        if (std::abs(c) < 1e-9) throw config_error("thrusters: cos(alpha) must be nonzero");
        return lever / c;
    }
};

// Mixing matrix mapping per-thruster forces to the body wrench.
inline Mat34 build_tconf(const ThrusterGeometry& geom) {
    const double c = std::cos(geom.orientation);
    const double s = std::sin(geom.orientation);
    const double l = geom.lever;
    if (std::abs(c) < 1e-9) throw config_error("thrusters: degenerate orientation");
    return Mat34{{
        c, c, -c, -c,    //
        -s, s, -s, s,    //
        -l, l, l, -l     //
    }};
}

struct FaultEvent {
    double time = 0.0;  // s
    int thruster = 0;   // 0-based index
    double weight = 1.0;
};

// Weights may only decrease over a schedule (faults are thrust losses).
inline void validate_schedule(const std::vector<FaultEvent>& events) {
    Vec4 w = vec4(1.0, 1.0, 1.0, 1.0);
    double last_t = -1.0;
    for (const auto& e : events) {
        if (e.thruster < 0 || e.thruster > 3)
            throw config_error("fault schedule: thruster index out of range 1..4");
        if (e.time <= last_t)
            throw config_error("fault schedule: event times must be strictly increasing");
        if (e.weight < 0.0 || e.weight > 1.0)
            throw config_error("fault schedule: weight must lie in [0, 1]");
        if (e.weight > w[static_cast<std::size_t>(e.thruster)] + 1e-12)
            throw config_error(
                "fault schedule: weight increase not allowed (losses only reduce weights)");
        w[static_cast<std::size_t>(e.thruster)] = e.weight;
        last_t = e.time;
    }
}

struct ThrusterBank {
    Mat34 tconf;                      // mixing matrix
    Vec4 thrust_coeff;                // K diagonal, N per unit input
    Vec4 weights_true;                // W diagonal, actual thrust-loss weights
    Vec4 weights_est;                 // W-hat diagonal, allocator's estimate
    std::array<bool, 4> failed_est{}; // estimated total failures (column dropped)
    double max_thrust = 40.0;         // N per thruster; <=0 disables saturation
    double est_weight_floor = 0.05;   // floor on W-hat before inversion

    mutable std::uint64_t saturation_events = 0;

    static ThrusterBank make(const ThrusterGeometry& geom, const Vec4& k,
                             double max_thrust_n = 40.0) {
        ThrusterBank b;
        b.tconf = build_tconf(geom);
        b.thrust_coeff = k;
        b.weights_true = vec4(1.0, 1.0, 1.0, 1.0);
        b.weights_est = vec4(1.0, 1.0, 1.0, 1.0);
        b.max_thrust = max_thrust_n;
        for (int i = 0; i < 4; ++i)
            if (k[i] <= 0.0) throw config_error("thrusters: thrust coefficients must be positive");
        return b;
    }

    int active_count() const {
        int n = 0;
        for (bool f : failed_est)
            if (!f) ++n;
        return n;
    }
};

// Allocation u = W^-1 K^-1 Tconf^+ tau_c over the estimated weights. A
// thruster marked failed is dropped and the wrench is re-allocated over the
// remaining columns (exact inverse once only three are left).
inline Vec4 allocate(const Vec3& tau_c, const ThrusterBank& bank) {
    const int active = bank.active_count();
    if (active < 3) throw numeric_error("allocate: fewer than 3 thrusters remain");

    Vec4 u{};
    if (active == 4) {
        const Mat43 tpinv = pinv(bank.tconf);
        const Vec4 f_cmd = tpinv * tau_c;
        for (std::size_t i = 0; i < 4; ++i) {
            const double w = std::max(bank.weights_est[i], bank.est_weight_floor);
            u[i] = f_cmd[i] / (bank.thrust_coeff[i] * w);
        }
        return u;
    }

    // Reduced 3x3 bank: gather the surviving columns.
    Mat3 t_red{};
    std::array<std::size_t, 3> idx{};
    std::size_t k = 0;
    for (std::size_t i = 0; i < 4; ++i) {
        if (bank.failed_est[i]) continue;
        idx[k] = i;
        for (std::size_t r = 0; r < 3; ++r) t_red(r, k) = bank.tconf(r, i);
        ++k;
    }
    const Vec3 f_red = inverse3(t_red) * tau_c;
    for (std::size_t j = 0; j < 3; ++j) {
        const std::size_t i = idx[j];
        const double w = std::max(bank.weights_est[i], bank.est_weight_floor);
        u[i] = f_red[j] / (bank.thrust_coeff[i] * w);
    }
    return u;
}

// Physical actuation tau = Tconf K W u with per-thruster saturation.
inline Vec3 actuate(const Vec4& u, const ThrusterBank& bank) {
    Vec4 force{};
    for (std::size_t i = 0; i < 4; ++i) {
        double f = bank.thrust_coeff[i] * bank.weights_true[i] * u[i];
        if (bank.max_thrust > 0.0 && std::abs(f) > bank.max_thrust) {
            f = std::copysign(bank.max_thrust, f);
            ++bank.saturation_events;
        }
        force[i] = f;
    }
    return bank.tconf * force;
}

// Per-thruster forces as delivered (for logging).
inline Vec4 thrust_forces(const Vec4& u, const ThrusterBank& bank) {
    Vec4 force{};
    for (std::size_t i = 0; i < 4; ++i) {
        double f = bank.thrust_coeff[i] * bank.weights_true[i] * u[i];
        if (bank.max_thrust > 0.0 && std::abs(f) > bank.max_thrust)
            f = std::copysign(bank.max_thrust, f);
        force[i] = f;
    }
    return force;
}

// Apply every event with time <= t to the true weights. The estimate is
// only ever touched by the FDI supervisor.
inline void apply_fault_schedule(ThrusterBank& bank, const std::vector<FaultEvent>& events,
                                 double t) {
    for (const auto& e : events) {
        if (e.time <= t) bank.weights_true[static_cast<std::size_t>(e.thruster)] = e.weight;
    }
}

}  // namespace ftc
