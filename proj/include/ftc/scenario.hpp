#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ftc/angles.hpp"
#include "ftc/controller.hpp"
#include "ftc/error.hpp"
#include "ftc/fdi.hpp"
#include "ftc/plant.hpp"
#include "ftc/thrusters.hpp"

// Scenario files are plain JSON with units spelled out in the field names:
// angles are degrees in files and radians internally, forces in N, moments
// in N*m. Every field is optional; missing values fall back to the default
// dynamic-positioning study (10 m, 2 m, 70 deg setpoint in a 1 m/s current).

namespace ftc {

struct Scenario {
    std::string name = "default";

    double duration = 200.0;  // s
    double step = 0.01;       // s
    std::uint64_t seed = 1;

    Vec3 reference_pose = vec3(10.0, 2.0, deg2rad(70.0));
    VehiclePose initial_pose{};
    BodyVelocity initial_velocity{};

    PlantParams plant;
    Environment environment;
    ThrusterGeometry geometry{deg2rad(45.0), 0.1888};
    Vec4 thrust_coeff = vec4(40.0, 40.0, 40.0, 40.0);
    double max_thrust = 40.0;

    ControllerGains gains;
    AdaptationOptions adaptation;
    Vec3 dm_hat_initial{};

    FdiParams fdi;
    bool fdi_enabled = true;

    std::vector<FaultEvent> faults;

    std::string output_dir = "out";

    // Surrogate plant for a small work-class ROV: ~13.5 kg hull plus
    // near-isotropic horizontal added mass, mostly-linear surge drag and
    // quadratic-dominated sway drag. The published study uses a vehicle
    // model by citation only, so these are stand-in coefficients satisfying
    // the symmetric/positive-definite properties the control design
    // assumes; every value is configurable.
    static PlantParams default_plant() {
        PlantParams p;
        p.mass = diag(vec3(19.0, 19.0, 0.60));
        p.damping_linear = vec3(2.4, 0.1, 0.06);
        p.damping_quad = vec3(0.3, 6.0, 1.0);
        p.restoring = Vec3{};
        return p;
    }

    static Environment default_environment() {
        Environment env;
        env.current_speed = 1.0;
        env.current_heading = deg2rad(-120.0);
        env.noise_amplitude = vec3(1.0, 1.0, 0.03);
        env.current_mode = CurrentMode::kRelativeVelocity;
        return env;
    }

    static Scenario defaults() {
        Scenario s;
        s.plant = default_plant();
        s.environment = default_environment();
        return s;
    }

    void validate() const {
        if (step <= 0.0) throw config_error("scenario: step must be positive");
        if (duration <= 0.0) throw config_error("scenario: duration must be positive");
        plant.validate();
        environment.validate();
        gains.validate();
        fdi.validate();
        validate_schedule(faults);
        if (!faults.empty()) {
            const double last = faults.back().time;
            if (duration < last + fdi.t3 && fdi_enabled)
                throw config_error(
                    "scenario: duration must exceed the last fault time plus the re-arm delay T3");
        }
    }

    ThrusterBank make_bank() const { return ThrusterBank::make(geometry, thrust_coeff, max_thrust); }
};

namespace detail {

inline Vec3 parse_vec3(const nlohmann::json& j, const std::string& field) {
    if (!j.is_array() || j.size() != 3)
        throw config_error("scenario: field '" + field + "' must be an array of 3 numbers");
    return vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

inline Vec4 parse_vec4(const nlohmann::json& j, const std::string& field) {
    if (!j.is_array() || j.size() != 4)
        throw config_error("scenario: field '" + field + "' must be an array of 4 numbers");
    return vec4(j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
                j[3].get<double>());
}

template <typename T>
void assign_if(const nlohmann::json& j, const char* key, T& out) {
    if (auto it = j.find(key); it != j.end()) out = it->get<T>();
}

}  // namespace detail

inline Scenario scenario_from_json(const nlohmann::json& j) {
    using nlohmann::json;
    Scenario s = Scenario::defaults();
    if (j.is_null()) return s;
    if (!j.is_object()) throw config_error("scenario: top level must be a JSON object");

    detail::assign_if(j, "name", s.name);
    detail::assign_if(j, "duration_s", s.duration);
    detail::assign_if(j, "step_s", s.step);
    detail::assign_if(j, "seed", s.seed);
    detail::assign_if(j, "output_dir", s.output_dir);

    if (auto it = j.find("reference"); it != j.end()) {
        const json& r = *it;
        double x = s.reference_pose[0], y = s.reference_pose[1];
        double heading_deg = rad2deg(s.reference_pose[2]);
        detail::assign_if(r, "x_m", x);
        detail::assign_if(r, "y_m", y);
        detail::assign_if(r, "heading_deg", heading_deg);
        s.reference_pose = vec3(x, y, deg2rad(heading_deg));
    }

    if (auto it = j.find("initial"); it != j.end()) {
        const json& r = *it;
        double x = 0, y = 0, h = 0, u = 0, v = 0, rr = 0;
        detail::assign_if(r, "x_m", x);
        detail::assign_if(r, "y_m", y);
        detail::assign_if(r, "heading_deg", h);
        detail::assign_if(r, "u_mps", u);
        detail::assign_if(r, "v_mps", v);
        detail::assign_if(r, "r_radps", rr);
        s.initial_pose = {x, y, deg2rad(h)};
        s.initial_velocity = {u, v, rr};
    }

    if (auto it = j.find("plant"); it != j.end()) {
        const json& p = *it;
        if (auto m = p.find("mass_diag"); m != p.end())
            s.plant.mass = diag(detail::parse_vec3(*m, "plant.mass_diag"));
        if (auto m = p.find("mass_matrix"); m != p.end()) {
            if (!m->is_array() || m->size() != 9)
                throw config_error("scenario: plant.mass_matrix must have 9 entries (row major)");
            for (std::size_t i = 0; i < 9; ++i) s.plant.mass.a[i] = (*m)[i].get<double>();
        }
        if (auto d = p.find("damping_linear"); d != p.end())
            s.plant.damping_linear = detail::parse_vec3(*d, "plant.damping_linear");
        if (auto d = p.find("damping_quadratic"); d != p.end())
            s.plant.damping_quad = detail::parse_vec3(*d, "plant.damping_quadratic");
        if (auto d = p.find("restoring"); d != p.end())
            s.plant.restoring = detail::parse_vec3(*d, "plant.restoring");
    }

    if (auto it = j.find("environment"); it != j.end()) {
        const json& e = *it;
        detail::assign_if(e, "current_speed_mps", s.environment.current_speed);
        if (auto h = e.find("current_heading_deg"); h != e.end())
            s.environment.current_heading = deg2rad(h->get<double>());
        if (auto n = e.find("noise_amplitude"); n != e.end())
            s.environment.noise_amplitude = detail::parse_vec3(*n, "environment.noise_amplitude");
        if (auto m = e.find("current_mode"); m != e.end()) {
            const std::string mode = m->get<std::string>();
            if (mode == "relative_velocity")
                s.environment.current_mode = CurrentMode::kRelativeVelocity;
            else if (mode == "constant_force")
                s.environment.current_mode = CurrentMode::kConstantForce;
            else
                throw config_error("scenario: environment.current_mode must be "
                                   "'relative_velocity' or 'constant_force'");
        }
    }

    if (auto it = j.find("thrusters"); it != j.end()) {
        const json& t = *it;
        if (auto a = t.find("orientation_deg"); a != t.end())
            s.geometry.orientation = deg2rad(a->get<double>());
        detail::assign_if(t, "lever_m", s.geometry.lever);
        if (auto k = t.find("thrust_coefficient"); k != t.end())
            s.thrust_coeff = detail::parse_vec4(*k, "thrusters.thrust_coefficient");
        detail::assign_if(t, "max_thrust_n", s.max_thrust);
    }

    if (auto it = j.find("controller"); it != j.end()) {
        const json& c = *it;
        if (auto g = c.find("gamma1"); g != c.end())
            s.gains.gamma1 = detail::parse_vec3(*g, "controller.gamma1");
        if (auto g = c.find("gamma2"); g != c.end())
            s.gains.gamma2 = detail::parse_vec3(*g, "controller.gamma2");
        if (auto g = c.find("a1"); g != c.end()) s.gains.a1 = detail::parse_vec3(*g, "controller.a1");
        if (auto g = c.find("a2"); g != c.end()) s.gains.a2 = detail::parse_vec3(*g, "controller.a2");
        detail::assign_if(c, "epsilon", s.gains.epsilon);
        detail::assign_if(c, "kappa", s.gains.kappa);
        if (auto g = c.find("alpha_limit"); g != c.end())
            s.gains.alpha_limit = detail::parse_vec3(*g, "controller.alpha_limit");
        if (auto d = c.find("dm_hat_initial"); d != c.end())
            s.dm_hat_initial = detail::parse_vec3(*d, "controller.dm_hat_initial");
        if (auto a = c.find("adaptation"); a != c.end()) {
            detail::assign_if(*a, "leak_rate", s.adaptation.leak_rate);
            detail::assign_if(*a, "quiet_band", s.adaptation.quiet_band);
            detail::assign_if(*a, "filter_time_s", s.adaptation.filter_time);
            if (auto b = a->find("disturbance_bound"); b != a->end())
                s.adaptation.disturbance_bound =
                    detail::parse_vec3(*b, "controller.adaptation.disturbance_bound");
            detail::assign_if(*a, "freeze_during_fault", s.adaptation.freeze_during_fault);
        }
    }

    if (auto it = j.find("fdi"); it != j.end()) {
        const json& f = *it;
        detail::assign_if(f, "enabled", s.fdi_enabled);
        detail::assign_if(f, "c1", s.fdi.c1);
        detail::assign_if(f, "c2", s.fdi.c2);
        detail::assign_if(f, "c3", s.fdi.c3);
        detail::assign_if(f, "c4", s.fdi.c4);
        detail::assign_if(f, "t1_s", s.fdi.t1);
        detail::assign_if(f, "t2_s", s.fdi.t2);
        detail::assign_if(f, "t3_s", s.fdi.t3);
        detail::assign_if(f, "arm_time_s", s.fdi.arm_time);
        detail::assign_if(f, "baseline_window_s", s.fdi.baseline_window);
        detail::assign_if(f, "deviation_window_s", s.fdi.deviation_window);
        detail::assign_if(f, "reconfigure", s.fdi.reconfigure);
        detail::assign_if(f, "normalize_rmse", s.fdi.normalize_rmse);
        detail::assign_if(f, "failure_threshold", s.fdi.failure_threshold);
    }

    if (auto it = j.find("faults"); it != j.end()) {
        if (!it->is_array()) throw config_error("scenario: faults must be an array");
        for (const auto& e : *it) {
            FaultEvent ev;
            if (auto f = e.find("time_s"); f != e.end())
                ev.time = f->get<double>();
            else
                throw config_error("scenario: fault event missing time_s");
            if (auto f = e.find("thruster"); f != e.end())
                ev.thruster = f->get<int>() - 1;  // 1-based in files
            else
                throw config_error("scenario: fault event missing thruster");
            if (auto f = e.find("weight"); f != e.end())
                ev.weight = f->get<double>();
            else
                throw config_error("scenario: fault event missing weight");
            s.faults.push_back(ev);
        }
    }

    s.validate();
    return s;
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("scenario: cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();

    // An empty (or whitespace-only) file means "all defaults".
    if (text.find_first_not_of(" \t\r\n") == std::string::npos)
        return Scenario::defaults();

    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw config_error("scenario: JSON parse error in '" + path + "': " + e.what());
    }
    try {
        return scenario_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw config_error("scenario: invalid field in '" + path + "': " + e.what());
    }
}

}  // namespace ftc
