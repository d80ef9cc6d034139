#pragma once

#include <array>
#include <cmath>
#include <limits>

#include "ftc/angles.hpp"
#include "ftc/error.hpp"
#include "ftc/linalg.hpp"
#include "ftc/plant.hpp"

// Two-step backstepping motion controller with adaptive disturbance-bound
// compensation. Step 1 shapes a virtual velocity alpha_nu from the pose
// error; step 2 produces the body wrench tau_c and adapts the bound
// estimate D_m-hat that feeds the smooth compensation term d-hat.

namespace ftc {

struct ControllerGains {
    Vec3 gamma1 = vec3(1.0, 1.0, 1500.0);  // pose weighting
    Vec3 gamma2 = vec3(1.0, 1.0, 0.6);     // adaptation weighting
    Vec3 a1 = vec3(1.5, 1.5, 5.0);         // pose gain
    Vec3 a2 = vec3(1.0, 1.0, 12.0);        // velocity gain
    double epsilon = 0.1;                  // compensation slack per channel
    double kappa = 0.2785;                 // smooth-function constant, kappa = e^-(kappa+1)

    // Body-frame limit on the virtual velocity command. Large setpoint
    // steps otherwise ask for velocities an order of magnitude beyond the
    // thrusters, and the model terms multiplying alpha_nu blow up while the
    // actuators saturate. Near the setpoint the clamp is inactive and the
    // control law is the pure backstepping form.
    Vec3 alpha_limit = vec3(6.0, 6.0, 1.0);

    void validate() const {
        for (int i = 0; i < 3; ++i) {
            if (gamma1[i] <= 0.0 || gamma2[i] <= 0.0 || a1[i] <= 0.0 || a2[i] <= 0.0)
                throw config_error("controller: gain diagonals must be strictly positive");
            if (alpha_limit[i] <= 0.0)
                throw config_error("controller: alpha limits must be positive");
        }
        if (epsilon <= 0.0) throw config_error("controller: epsilon must be positive");
        if (kappa <= 0.0) throw config_error("controller: kappa must be positive");
    }
};

// Rate scheduling around the adaptation integrator. The raw law grows the
// bound estimate at the velocity-error rate, which is glacial once errors
// are millimeter scale, while the initial pose step winds the estimate far
// past any real disturbance. Three guards keyed on a filtered |e_nu|:
//  - outside the quiet band the estimate additionally grows at a
//    proportional rate, so recovering a few newtons of new disturbance
//    takes seconds instead of the integrator's cube-root crawl,
//  - inside the quiet band it leaks slowly toward zero, trimming transient
//    wind-up until it hugs the level actually being compensated,
//  - a projection cap at 10x the configured per-channel disturbance bound
//    backstops the transient wind-up.
struct AdaptationOptions {
    double leak_rate = 0.05;        // 1/s, 0 disables the leak
    double growth_rate = 0.06;      // 1/s, 0 disables the loud-band boost
    double quiet_band = 0.002;      // m/s (rad/s on yaw) on the filtered |e_nu|
    double filter_time = 0.5;       // s, first-order filter on e_nu for the gate
    Vec3 disturbance_bound = vec3(3.0, 1.5, 0.2);  // N, N, N*m; cap = 10x this
    bool freeze_during_fault = false;  // hold the estimate while the FDI window is active

    Vec3 cap() const { return disturbance_bound * 10.0; }
};

struct Reference {
    Vec3 pose{};          // eta_d (x, y, psi)
    Vec3 velocity{};      // eta_d-dot, zero for dynamic positioning
    Vec3 acceleration{};  // eta_d-ddot

    static Reference setpoint(const Vec3& eta_d) { return Reference{eta_d, Vec3{}, Vec3{}}; }
};

struct TrackingErrors {
    Vec3 e_eta{};    // pose error in the navigation frame, heading wrapped
    Vec3 alpha_nu{}; // stabilization function (virtual velocity), clamped
    Vec3 e_nu{};     // velocity error alpha_nu - nu
    std::array<bool, 3> alpha_clamped{};
};

struct ControllerState {
    Vec3 dm_hat{};          // adaptive disturbance-bound estimate
    Vec3 e_nu_filtered{};   // low-pass of e_nu for the anti-windup gate
};

// Smooth odd compensation function phi(xi) = tanh(kappa*xi/eps) with
// |xi| <= xi*phi(xi) + eps for every xi.
inline double smooth_phi(double xi, double kappa, double eps) {
    if (eps <= 0.0) throw config_error("smooth_phi: eps must be positive");
    return std::tanh(kappa * xi / eps);
}

inline TrackingErrors tracking_errors(const Reference& ref, const Vec3& eta, const Vec3& nu,
                                      const ControllerGains& g) {
    TrackingErrors e;
    e.e_eta = vec3(ref.pose[0] - eta[0], ref.pose[1] - eta[1], angle_diff(ref.pose[2], eta[2]));
    const Mat3 jt = rotation(eta[2]).transposed();
    Vec3 shaped;
    for (int i = 0; i < 3; ++i) shaped[i] = ref.velocity[i] + (g.a1[i] / g.gamma1[i]) * e.e_eta[i];
    e.alpha_nu = jt * shaped;
    for (int i = 0; i < 3; ++i) {
        if (std::abs(e.alpha_nu[i]) > g.alpha_limit[i]) {
            e.alpha_nu[i] = std::copysign(g.alpha_limit[i], e.alpha_nu[i]);
            e.alpha_clamped[static_cast<std::size_t>(i)] = true;
        }
    }
    e.e_nu = e.alpha_nu - nu;
    return e;
}

// Analytic derivative of the stabilization function:
//   alpha_dot = J^T (eta_d-ddot + Gamma1^-1 A1 e_eta-dot) - S(r) alpha_nu
// with e_eta-dot = eta_d-dot - J nu and S(r) the planar angular-rate skew.
// Channels pinned at the velocity limit are constant, so their rate is zero.
inline Vec3 alpha_nu_dot(const Reference& ref, const Vec3& eta, const Vec3& nu,
                         const TrackingErrors& e, const ControllerGains& g) {
    const Mat3 j = rotation(eta[2]);
    const Vec3 e_eta_dot = ref.velocity - j * nu;
    Vec3 shaped;
    for (int i = 0; i < 3; ++i)
        shaped[i] = ref.acceleration[i] + (g.a1[i] / g.gamma1[i]) * e_eta_dot[i];
    const Vec3 jt_term = j.transposed() * shaped;
    const double r = nu[2];
    const Vec3 s_alpha = vec3(-r * e.alpha_nu[1], r * e.alpha_nu[0], 0.0);
    Vec3 adot = jt_term - s_alpha;
    for (int i = 0; i < 3; ++i)
        if (e.alpha_clamped[static_cast<std::size_t>(i)]) adot[i] = 0.0;
    return adot;
}

// Adaptive compensation d-hat with d_i = Dm_i * phi(Dm_i * e_nu_i).
inline Vec3 compensation(const Vec3& dm_hat, const Vec3& e_nu, const ControllerGains& g) {
    Vec3 d;
    for (int i = 0; i < 3; ++i)
        d[i] = dm_hat[i] * smooth_phi(dm_hat[i] * e_nu[i], g.kappa, g.epsilon);
    return d;
}

// Body-frame control wrench
//   tau_c = A2 e_nu + J^T Gamma1 e_eta + M alpha_dot + (C(nu)+D(nu)) alpha_nu
//           + g(eta) + d-hat.
// The pose-error term is rotated into the body frame (J^T), which is what the
// Lyapunov cross-term cancellation requires for the body-frame wrench.
inline Vec3 control_law(const TrackingErrors& e, const Vec3& alpha_dot, const Vec3& eta,
                        const Vec3& nu, const Vec3& dm_hat, const PlantParams& plant,
                        const ControllerGains& g) {
    const Mat3 jt = rotation(eta[2]).transposed();
    Vec3 gamma_e;
    for (int i = 0; i < 3; ++i) gamma_e[i] = g.gamma1[i] * e.e_eta[i];

    Vec3 tau = jt * gamma_e;
    for (int i = 0; i < 3; ++i) tau[i] += g.a2[i] * e.e_nu[i];
    tau += plant.mass * alpha_dot;
    tau += (coriolis(plant.mass, nu) + plant.damping_at(nu)) * e.alpha_nu;
    tau += plant.restoring;
    tau += compensation(dm_hat, e.e_nu, g);

    if (!tau.finite()) throw divergence_error("control_law: non-finite wrench");
    return tau;
}

// Euler step of the adaptation law Dm-hat-dot = Gamma2^-1 e_nu, followed by
// the leak/cap anti-windup.
inline void adapt(ControllerState& s, const Vec3& e_nu, const ControllerGains& g,
                  const AdaptationOptions& opt, double dt, bool fault_window_active = false) {
    if (dt <= 0.0) throw config_error("adapt: dt must be positive");

    const double lp = (opt.filter_time > 0.0) ? dt / (opt.filter_time + dt) : 1.0;
    for (int i = 0; i < 3; ++i) s.e_nu_filtered[i] += lp * (e_nu[i] - s.e_nu_filtered[i]);

    if (opt.freeze_during_fault && fault_window_active) return;

    const Vec3 cap = opt.cap();
    for (int i = 0; i < 3; ++i) {
        s.dm_hat[i] += e_nu[i] / g.gamma2[i] * dt;
        const bool quiet = std::abs(s.e_nu_filtered[i]) < opt.quiet_band;
        if (quiet && opt.leak_rate > 0.0)
            s.dm_hat[i] -= opt.leak_rate * s.dm_hat[i] * dt;
        else if (!quiet && opt.growth_rate > 0.0)
            s.dm_hat[i] *= 1.0 + opt.growth_rate * dt;
        if (s.dm_hat[i] > cap[i]) s.dm_hat[i] = cap[i];
        if (s.dm_hat[i] < -cap[i]) s.dm_hat[i] = -cap[i];
    }
}

}  // namespace ftc
