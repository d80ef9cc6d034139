#pragma once

#include <cmath>

#include "ftc/angles.hpp"
#include "ftc/error.hpp"
#include "ftc/linalg.hpp"
#include "ftc/rng.hpp"

// 3DOF horizontal rigid-body plant: kinematics eta_dot = J(psi) nu and
// dynamics M nu_dot + C(nu_r) nu_r + D(nu_r) nu_r + g(eta) = tau + d,
// with a sea current entering through the relative velocity nu_r and a
// bounded random disturbance on top.

namespace ftc {

struct VehiclePose {
    double x = 0.0;    // m, navigation frame
    double y = 0.0;    // m
    double psi = 0.0;  // rad, wrapped to (-pi, pi]

    Vec3 to_vec() const { return vec3(x, y, psi); }
    static VehiclePose from_vec(const Vec3& v) { return {v[0], v[1], wrap_pi(v[2])}; }
};

struct BodyVelocity {
    double u = 0.0;  // m/s surge
    double v = 0.0;  // m/s sway
    double r = 0.0;  // rad/s yaw rate

    Vec3 to_vec() const { return vec3(u, v, r); }
    static BodyVelocity from_vec(const Vec3& w) { return {w[0], w[1], w[2]}; }
};

// Body-to-navigation rotation about the vertical axis.
inline Mat3 rotation(double psi) {
    const double c = std::cos(psi), s = std::sin(psi);
    return Mat3{{c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0}};
}

// Skew-symmetric Coriolis/centripetal matrix derived from the mass matrix.
// With p = M*nu the nonzero entries are C(0,2) = -p_sway-ish combination;
// the construction enforces s^T C s = 0 for every s.
inline Mat3 coriolis(const Mat3& m, const Vec3& nu) {
    const double c13 = -(m(1, 0) * nu[0] + m(1, 1) * nu[1] + m(1, 2) * nu[2]);
    const double c23 = m(0, 0) * nu[0] + m(0, 1) * nu[1] + m(0, 2) * nu[2];
    Mat3 c{};
    c(0, 2) = c13;
    c(1, 2) = c23;
    c(2, 0) = -c13;
    c(2, 1) = -c23;
    return c;
}

struct PlantParams {
    Mat3 mass;            // kg / kg*m^2, includes added mass; symmetric positive definite
    Vec3 damping_linear;  // diagonal of D_l
    Vec3 damping_quad;    // diagonal of D_q; total D(nu) = D_l + D_q*diag(|nu|)
    Vec3 restoring;       // g(eta) hook, identically zero in the horizontal plane

    Mat3 damping_at(const Vec3& nu) const {
        Mat3 d{};
        for (int i = 0; i < 3; ++i)
            d(i, i) = damping_linear[i] + damping_quad[i] * std::abs(nu[i]);
        return d;
    }

    void validate() const {
        if (!mass.finite() || !damping_linear.finite() || !damping_quad.finite())
            throw config_error("plant: non-finite parameter");
        // P1: M symmetric positive definite
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                if (std::abs(mass(i, j) - mass(j, i)) > 1e-12)
                    throw config_error("plant: mass matrix must be symmetric");
        const auto ev = sym_eigenvalues<3>(mass);
        if (ev.back() <= 0.0) throw config_error("plant: mass matrix must be positive definite");
        // P3: D > 0 for all nu given nonnegative quadratic part
        for (int i = 0; i < 3; ++i) {
            if (damping_linear[i] <= 0.0)
                throw config_error("plant: linear damping diagonal must be positive");
            if (damping_quad[i] < 0.0)
                throw config_error("plant: quadratic damping must be nonnegative");
        }
    }
};

enum class CurrentMode {
    kRelativeVelocity,  // current enters damping/Coriolis through nu_r
    kConstantForce,     // current folded into a constant body-frame force
};

struct Environment {
    double current_speed = 0.0;    // m/s, >= 0
    double current_heading = 0.0;  // rad, direction the current flows toward (nav frame)
    Vec3 noise_amplitude{};        // N, N, N*m
    CurrentMode current_mode = CurrentMode::kRelativeVelocity;

    // Body-frame current velocity at heading psi.
    Vec3 current_body(double psi) const {
        const Vec3 vc_nav = vec3(current_speed * std::cos(current_heading),
                                 current_speed * std::sin(current_heading), 0.0);
        return rotation(psi).transposed() * vc_nav;
    }

    void validate() const {
        if (current_speed < 0.0) throw config_error("environment: current speed must be >= 0");
        for (int i = 0; i < 3; ++i)
            if (noise_amplitude[i] < 0.0)
                throw config_error("environment: noise amplitudes must be >= 0");
    }
};

// One draw of the random disturbance term. Surge/sway are symmetric
// (amp*(1-2*rand)), yaw is one-sided (amp*(1-rand)); components stay inside
// [-a1,a1] x [-a2,a2] x [0,a3], so the bound of Assumption-style analysis holds.
inline Vec3 sample_disturbance(const Environment& env, Rng& rng) {
    return vec3(env.noise_amplitude[0] * (1.0 - 2.0 * rng.uniform()),
                env.noise_amplitude[1] * (1.0 - 2.0 * rng.uniform()),
                env.noise_amplitude[2] * (1.0 - rng.uniform()));
}

struct PlantState {
    VehiclePose eta;
    BodyVelocity nu;
};

// Right-hand side of the ODE. `disturbance` is the already-sampled random
// term, held constant across one control period.
inline void dynamics_rhs(const Vec3& eta, const Vec3& nu, const Vec3& tau,
                         const Vec3& disturbance, const Environment& env,
                         const PlantParams& p, Vec3& eta_dot, Vec3& nu_dot) {
    const Mat3 j = rotation(eta[2]);
    eta_dot = j * nu;

    Vec3 nu_r = nu;
    Vec3 current_force{};
    if (env.current_mode == CurrentMode::kRelativeVelocity) {
        nu_r = nu - env.current_body(eta[2]);
    } else if (env.current_speed > 0.0) {
        // Drag the current would exert on the hull at rest, applied as a
        // constant body-frame force.
        const Vec3 vr0 = -env.current_body(eta[2]);
        current_force = -(coriolis(p.mass, vr0) * vr0) - (p.damping_at(vr0) * vr0);
    }

    const Vec3 rhs = tau + disturbance + current_force - coriolis(p.mass, nu_r) * nu_r -
                     p.damping_at(nu_r) * nu_r - p.restoring;
    nu_dot = inverse3(p.mass) * rhs;
}

// Classical RK4 step holding tau and the sampled disturbance constant.
// Heading is re-wrapped once at the end of the step.
inline PlantState step(const PlantState& s, const Vec3& tau, const Vec3& disturbance,
                       const Environment& env, const PlantParams& p, double dt) {
    if (dt <= 0.0) throw config_error("step: dt must be positive");

    const Vec3 eta0 = s.eta.to_vec();
    const Vec3 nu0 = s.nu.to_vec();

    Vec3 ke1, kn1, ke2, kn2, ke3, kn3, ke4, kn4;
    dynamics_rhs(eta0, nu0, tau, disturbance, env, p, ke1, kn1);
    dynamics_rhs(eta0 + ke1 * (dt / 2.0), nu0 + kn1 * (dt / 2.0), tau, disturbance, env, p, ke2,
                 kn2);
    dynamics_rhs(eta0 + ke2 * (dt / 2.0), nu0 + kn2 * (dt / 2.0), tau, disturbance, env, p, ke3,
                 kn3);
    dynamics_rhs(eta0 + ke3 * dt, nu0 + kn3 * dt, tau, disturbance, env, p, ke4, kn4);

    const Vec3 eta1 = eta0 + (ke1 + 2.0 * ke2 + 2.0 * ke3 + ke4) * (dt / 6.0);
    const Vec3 nu1 = nu0 + (kn1 + 2.0 * kn2 + 2.0 * kn3 + kn4) * (dt / 6.0);

    if (!eta1.finite() || !nu1.finite())
        throw divergence_error("step: integration produced non-finite state");

    return {VehiclePose::from_vec(eta1), BodyVelocity::from_vec(nu1)};
}

}  // namespace ftc
