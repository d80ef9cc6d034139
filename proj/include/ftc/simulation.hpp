#pragma once

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "ftc/controller.hpp"
#include "ftc/error.hpp"
#include "ftc/fdi.hpp"
#include "ftc/plant.hpp"
#include "ftc/rng.hpp"
#include "ftc/scenario.hpp"
#include "ftc/thrusters.hpp"

// Closed-loop runner: plant -> controller -> allocation -> actuation -> FDI
// at a single fixed control rate, with per-step logging and a structured
// event stream. Deterministic for a given scenario and seed.

namespace ftc {

inline constexpr std::size_t kLogColumns = 36;

inline const std::array<const char*, kLogColumns>& log_column_names() {
    static const std::array<const char*, kLogColumns> names = {
        "t",        "x",        "y",        "psi",      "u",        "v",
        "r",        "ex",       "ey",       "epsi",     "R",        "tau_cx",
        "tau_cy",   "tau_cz",   "tau_x",    "tau_y",    "tau_z",    "u1",
        "u2",       "u3",       "u4",       "F1",       "F2",       "F3",
        "F4",       "W1",       "W2",       "W3",       "W4",       "What1",
        "What2",    "What3",    "What4",    "Dm1",      "Dm2",      "Dm3"};
    return names;
}

struct RunLog {
    std::vector<std::array<double, kLogColumns>> rows;
    std::vector<FdiEvent> events;
    std::uint64_t saturation_events = 0;

    VehiclePose final_pose;
    BodyVelocity final_velocity;
    Vec4 final_weights_true{};
    Vec4 final_weights_est{};
    Vec3 final_dm_hat{};
};

// Run the closed loop. Per step: sample the disturbance, evaluate the
// control law, advance the adaptation, allocate and actuate with the true
// weights, integrate the plant, then feed the supervisor with the new pose
// error. The logged tau at step k is exactly the wrench integrated over
// step k.
inline RunLog run(const Scenario& sc) {
    sc.validate();

    const double dt = sc.step;
    const std::size_t steps = static_cast<std::size_t>(sc.duration / dt + 0.5);

    Rng rng(sc.seed);
    ThrusterBank bank = sc.make_bank();
    PlantState state{sc.initial_pose, sc.initial_velocity};
    ControllerState ctrl;
    ctrl.dm_hat = sc.dm_hat_initial;
    const Reference ref = Reference::setpoint(sc.reference_pose);
    FdiSupervisor supervisor(sc.fdi, sc.geometry, dt);

    RunLog log;
    log.rows.reserve(steps);

    // Adaptation estimate latched at detection. Reconfiguration restores it:
    // the corrected allocation reinstates the pre-fault force balance, so the
    // extra compensation the estimate picked up while riding out the fault
    // would otherwise have to drain back out on the slow adaptation
    // timescale, keeping the residual elevated past the re-arm time.
    Vec3 dm_hat_latched = ctrl.dm_hat;

    for (std::size_t k = 0; k < steps; ++k) {
        const double t = static_cast<double>(k) * dt;

        apply_fault_schedule(bank, sc.faults, t);
        const Vec3 disturbance = sample_disturbance(sc.environment, rng);

        const Vec3 eta = state.eta.to_vec();
        const Vec3 nu = state.nu.to_vec();
        const TrackingErrors errs = tracking_errors(ref, eta, nu, sc.gains);
        const Vec3 adot = alpha_nu_dot(ref, eta, nu, errs, sc.gains);
        const Vec3 tau_c =
            control_law(errs, adot, eta, nu, ctrl.dm_hat, sc.plant, sc.gains);

        adapt(ctrl, errs.e_nu, sc.gains, sc.adaptation, dt,
              sc.fdi_enabled && supervisor.fault_window_active());

        const Vec4 u = allocate(tau_c, bank);
        const Vec4 forces = thrust_forces(u, bank);
        const Vec3 tau = actuate(u, bank);

        std::array<double, kLogColumns> row{};
        std::size_t c = 0;
        row[c++] = t;
        for (int i = 0; i < 3; ++i) row[c++] = eta[static_cast<std::size_t>(i)];
        for (int i = 0; i < 3; ++i) row[c++] = nu[static_cast<std::size_t>(i)];
        for (int i = 0; i < 3; ++i) row[c++] = errs.e_eta[static_cast<std::size_t>(i)];
        row[c++] = residual(errs.e_eta, sc.fdi.c1);
        for (int i = 0; i < 3; ++i) row[c++] = tau_c[static_cast<std::size_t>(i)];
        for (int i = 0; i < 3; ++i) row[c++] = tau[static_cast<std::size_t>(i)];
        for (int i = 0; i < 4; ++i) row[c++] = u[static_cast<std::size_t>(i)];
        for (int i = 0; i < 4; ++i) row[c++] = forces[static_cast<std::size_t>(i)];
        for (int i = 0; i < 4; ++i) row[c++] = bank.weights_true[static_cast<std::size_t>(i)];
        for (int i = 0; i < 4; ++i) row[c++] = bank.weights_est[static_cast<std::size_t>(i)];
        for (int i = 0; i < 3; ++i) row[c++] = ctrl.dm_hat[static_cast<std::size_t>(i)];
        log.rows.push_back(row);

        try {
            state = step(state, tau, disturbance, sc.environment, sc.plant, dt);
        } catch (const divergence_error& e) {
            throw divergence_error(std::string(e.what()) + " at t=" + std::to_string(t) +
                                   " (last pose " + std::to_string(state.eta.x) + ", " +
                                   std::to_string(state.eta.y) + ", " +
                                   std::to_string(state.eta.psi) + ")");
        }

        if (sc.fdi_enabled) {
            const TrackingErrors post =
                tracking_errors(ref, state.eta.to_vec(), state.nu.to_vec(), sc.gains);
            const std::size_t before = log.events.size();
            supervisor.update(t + dt, post.e_eta, tau_c, bank, log.events);
            for (std::size_t e = before; e < log.events.size(); ++e) {
                if (log.events[e].kind == FdiEventKind::kDetected)
                    dm_hat_latched = ctrl.dm_hat;
                else if (log.events[e].kind == FdiEventKind::kReconfigured)
                    ctrl.dm_hat = dm_hat_latched;
            }
        }
    }

    log.saturation_events = bank.saturation_events;
    log.final_pose = state.eta;
    log.final_velocity = state.nu;
    log.final_weights_true = bank.weights_true;
    log.final_weights_est = bank.weights_est;
    log.final_dm_hat = ctrl.dm_hat;
    return log;
}

// --- output emission ---------------------------------------------------

inline void write_timeseries_csv(const RunLog& log, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw config_error("cannot open output file '" + path + "'");
    const auto& names = log_column_names();
    for (std::size_t i = 0; i < names.size(); ++i)
        std::fprintf(f, "%s%s", names[i], i + 1 < names.size() ? "," : "\n");
    for (const auto& row : log.rows) {
        for (std::size_t i = 0; i < row.size(); ++i)
            std::fprintf(f, "%.9g%s", row[i], i + 1 < row.size() ? "," : "\n");
    }
    std::fclose(f);
}

inline void write_event_log(const RunLog& log, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw config_error("cannot open output file '" + path + "'");
    char buf[64];
    for (const auto& e : log.events) {
        std::snprintf(buf, sizeof buf, "%.3f", e.time);
        out << "{\"t\":" << buf << ",\"event\":\"" << to_string(e.kind) << "\",\"detail\":\""
            << e.detail << "\"}\n";
    }
}

// Generated analysis script over the time-series file; keeps the simulator
// itself headless.
inline void write_plot_script(const std::string& dir) {
    std::ofstream out(dir + "/plot.py", std::ios::binary);
    if (!out) throw config_error("cannot open output file '" + dir + "/plot.py'");
    out << R"PY(#!/usr/bin/env python3
"""Plot a simulation run: residual, wrench overlay, trajectory, weights."""
import csv
import os
import sys

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
path = sys.argv[1] if len(sys.argv) > 1 else os.path.join(here, "timeseries.csv")

cols = {}
with open(path) as f:
    reader = csv.reader(f)
    header = next(reader)
    data = [[float(v) for v in row] for row in reader]
for i, name in enumerate(header):
    cols[name] = [row[i] for row in data]

t = cols["t"]
fig, axes = plt.subplots(2, 2, figsize=(13, 9))

ax = axes[0][0]
ax.plot(t, cols["R"], lw=0.6)
ax.axhline(0.005, color="r", ls="--", label="c2")
ax.set_yscale("log")
ax.set_xlabel("t [s]"); ax.set_ylabel("R_detection"); ax.legend(); ax.set_title("Residual")

ax = axes[0][1]
for axis, color in (("x", "C0"), ("y", "C1"), ("z", "C2")):
    ax.plot(t, cols[f"tau_c{axis}"], color=color, lw=0.6, label=f"tau_c {axis}")
    ax.plot(t, cols[f"tau_{axis}"], color=color, lw=0.6, ls="--", label=f"tau {axis}")
ax.set_xlabel("t [s]"); ax.set_ylabel("wrench [N, N m]"); ax.legend(fontsize=7)
ax.set_title("Commanded vs delivered wrench")

ax = axes[1][0]
ax.plot(cols["x"], cols["y"], lw=0.8)
ax.plot(cols["x"][0], cols["y"][0], "go", label="start")
ax.plot(cols["x"][-1], cols["y"][-1], "rs", label="end")
ax.set_xlabel("x [m]"); ax.set_ylabel("y [m]"); ax.axis("equal"); ax.legend()
ax.set_title("Trajectory")

ax = axes[1][1]
for i in range(1, 5):
    ax.plot(t, cols[f"W{i}"], f"C{i-1}", lw=0.8, label=f"W{i}")
    ax.plot(t, cols[f"What{i}"], f"C{i-1}", lw=0.8, ls="--", label=f"What{i}")
ax.set_xlabel("t [s]"); ax.set_ylabel("thrust-loss weight"); ax.legend(fontsize=7, ncol=2)
ax.set_title("True vs estimated weights")

fig.tight_layout()
outpath = os.path.join(os.path.dirname(path), "run.png")
fig.savefig(outpath, dpi=130)
print(f"wrote {outpath}")
)PY";
}

inline void emit_outputs(const RunLog& log, const std::string& dir) {
    std::filesystem::create_directories(dir);
    write_timeseries_csv(log, dir + "/timeseries.csv");
    write_event_log(log, dir + "/events.jsonl");
    write_plot_script(dir);
}

// --- post-run queries ----------------------------------------------------

inline std::size_t column_index(const char* name) {
    const auto& names = log_column_names();
    for (std::size_t i = 0; i < names.size(); ++i)
        if (std::string(names[i]) == name) return i;
    throw config_error(std::string("unknown log column ") + name);
}

// Largest residual over [t0, t1].
inline double max_residual(const RunLog& log, double t0, double t1) {
    const std::size_t rc = column_index("R");
    double m = 0.0;
    for (const auto& row : log.rows)
        if (row[0] >= t0 && row[0] <= t1) m = std::max(m, row[rc]);
    return m;
}

inline std::optional<double> first_event_time(const RunLog& log, FdiEventKind kind,
                                              double after = 0.0) {
    for (const auto& e : log.events)
        if (e.kind == kind && e.time >= after) return e.time;
    return std::nullopt;
}

// --- batch sweeps ---------------------------------------------------------

struct BatchCase {
    double magnitude = 0.3;  // relative loss deltaW
    int thruster = 1;        // 1-based
    double time = 100.0;     // s
    std::uint64_t seed = 1;
};

struct BatchOutcome {
    BatchCase params;
    bool ok = false;           // run completed
    bool detected = false;
    double detect_time = 0.0;
    std::string identified;    // "single(n)", "double(i,j)" or ""
    double est = 0.0;          // estimated deltaW for the injected thruster
    double est_error = 0.0;
    bool reconfigured = false;
    double reconfigure_time = 0.0;
    bool success = false;      // detected, correct index, |error| <= 0.05
    std::string error;
};

struct BatchSpec {
    Scenario base;
    std::vector<double> magnitudes{0.3};
    std::vector<int> thrusters{1};
    std::vector<double> times{100.0};
    std::vector<std::uint64_t> seeds{1};
};

inline BatchSpec load_batch_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("batch: cannot open '" + path + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw config_error("batch: JSON parse error in '" + path + "': " + e.what());
    }

    BatchSpec spec;
    if (auto it = j.find("scenario_file"); it != j.end()) {
        spec.base = load_scenario(it->get<std::string>());
    } else if (auto jt = j.find("scenario"); jt != j.end()) {
        spec.base = scenario_from_json(*jt);
    } else {
        spec.base = Scenario::defaults();
    }
    if (auto it = j.find("magnitudes"); it != j.end())
        spec.magnitudes = it->get<std::vector<double>>();
    if (auto it = j.find("thrusters"); it != j.end())
        spec.thrusters = it->get<std::vector<int>>();
    if (auto it = j.find("times_s"); it != j.end()) spec.times = it->get<std::vector<double>>();
    if (auto it = j.find("seeds"); it != j.end())
        spec.seeds = it->get<std::vector<std::uint64_t>>();
    for (int th : spec.thrusters)
        if (th < 1 || th > 4) throw config_error("batch: thruster indices are 1..4");
    for (double m : spec.magnitudes)
        if (m <= 0.0 || m > 1.0) throw config_error("batch: magnitudes must lie in (0, 1]");
    return spec;
}

inline BatchOutcome run_batch_case(const Scenario& base, const BatchCase& c) {
    BatchOutcome out;
    out.params = c;

    Scenario sc = base;
    sc.seed = c.seed;
    sc.faults.clear();
    sc.faults.push_back({c.time, c.thruster - 1, 1.0 - c.magnitude});
    if (sc.duration < c.time + sc.fdi.t3 + 20.0) sc.duration = c.time + sc.fdi.t3 + 20.0;

    RunLog log;
    try {
        log = run(sc);
    } catch (const std::exception& e) {
        out.error = e.what();
        return out;
    }
    out.ok = true;

    if (auto td = first_event_time(log, FdiEventKind::kDetected, c.time)) {
        out.detected = true;
        out.detect_time = *td;
    }
    for (const auto& e : log.events) {
        if (e.time < c.time) continue;
        if (e.kind == FdiEventKind::kIdentifiedSingle) {
            const int n = std::stoi(e.detail.substr(e.detail.find('=') + 1));
            out.identified = "single(" + std::to_string(n) + ")";
            const auto dw_pos = e.detail.find("delta_w=");
            out.est = std::stod(e.detail.substr(dw_pos + 8));
            out.est_error = std::abs(out.est - c.magnitude);
            out.success = out.detected && n == c.thruster && out.est_error <= 0.05;
        } else if (e.kind == FdiEventKind::kIdentifiedDouble) {
            out.identified = "double";
        } else if (e.kind == FdiEventKind::kReconfigured && !out.reconfigured) {
            out.reconfigured = true;
            out.reconfigure_time = e.time;
        }
    }
    return out;
}

inline std::vector<BatchOutcome> run_batch(const BatchSpec& spec) {
    std::vector<BatchOutcome> results;
    for (double m : spec.magnitudes)
        for (int th : spec.thrusters)
            for (double tt : spec.times)
                for (std::uint64_t seed : spec.seeds)
                    results.push_back(run_batch_case(spec.base, {m, th, tt, seed}));
    return results;
}

inline void write_batch_summary(const std::vector<BatchOutcome>& results, std::FILE* f) {
    std::fprintf(f,
                 "magnitude,thruster,time_s,seed,ok,detected,detect_t,identified,est,est_error,"
                 "reconfig_t,success\n");
    std::size_t detected = 0, succeeded = 0, completed = 0;
    for (const auto& r : results) {
        std::fprintf(f, "%.4g,%d,%.4g,%llu,%d,%d,%.4g,%s,%.4g,%.4g,%.4g,%d\n",
                     r.params.magnitude, r.params.thruster, r.params.time,
                     static_cast<unsigned long long>(r.params.seed), r.ok ? 1 : 0,
                     r.detected ? 1 : 0, r.detect_time,
                     r.identified.empty() ? "-" : r.identified.c_str(), r.est, r.est_error,
                     r.reconfigure_time, r.success ? 1 : 0);
        completed += r.ok;
        detected += r.detected;
        succeeded += r.success;
    }
    if (!results.empty()) {
        std::fprintf(f, "# runs=%zu completed=%zu detected=%zu success=%zu detection_rate=%.3f "
                        "success_rate=%.3f\n",
                     results.size(), completed, detected, succeeded,
                     static_cast<double>(detected) / static_cast<double>(results.size()),
                     static_cast<double>(succeeded) / static_cast<double>(results.size()));
    }
}

}  // namespace ftc
