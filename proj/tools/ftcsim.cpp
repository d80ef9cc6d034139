// ftcsim: closed-loop fault-tolerant dynamic-positioning simulator.
//
//   ftcsim run <scenario.json> [--out DIR] [--seed N]
//   ftcsim batch <sweep.json> [--out FILE]
//   ftcsim validate <scenario.json>
//
// Exit codes: 0 success, 2 configuration error, 3 numeric/divergence error,
// 4 I/O or unexpected error.

#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "ftc/ftc.hpp"

namespace {

int cmd_run(const std::string& path, const std::string& out_dir_opt, long long seed_opt) {
    ftc::Scenario sc = ftc::load_scenario(path);
    if (seed_opt >= 0) sc.seed = static_cast<std::uint64_t>(seed_opt);
    const std::string out_dir = out_dir_opt.empty() ? sc.output_dir : out_dir_opt;

    const ftc::RunLog log = ftc::run(sc);
    ftc::emit_outputs(log, out_dir);

    std::printf("scenario '%s': %zu steps, %zu events, final residual %.3g\n", sc.name.c_str(),
                log.rows.size(), log.events.size(), log.rows.empty() ? 0.0 : log.rows.back()[10]);
    for (const auto& e : log.events)
        std::printf("  t=%9.2f  %-18s %s\n", e.time, ftc::to_string(e.kind), e.detail.c_str());
    if (log.saturation_events > 0)
        std::printf("  thrust saturation hit %llu times\n",
                    static_cast<unsigned long long>(log.saturation_events));
    std::printf("outputs written to %s/\n", out_dir.c_str());
    return 0;
}

int cmd_batch(const std::string& path, const std::string& out_file) {
    const ftc::BatchSpec spec = ftc::load_batch_spec(path);
    const auto results = ftc::run_batch(spec);
    if (out_file.empty()) {
        ftc::write_batch_summary(results, stdout);
    } else {
        std::FILE* f = std::fopen(out_file.c_str(), "wb");
        if (!f) throw ftc::config_error("cannot open '" + out_file + "'");
        ftc::write_batch_summary(results, f);
        std::fclose(f);
        std::printf("batch summary written to %s (%zu runs)\n", out_file.c_str(), results.size());
    }
    return 0;
}

int cmd_validate(const std::string& path) {
    const ftc::Scenario sc = ftc::load_scenario(path);
    std::printf("scenario '%s' is valid: duration %.6gs, step %.6gs, %zu fault event(s)\n",
                sc.name.c_str(), sc.duration, sc.step, sc.faults.size());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fault-tolerant dynamic-positioning simulator"};
    app.require_subcommand(1);

    std::string scenario_path, out_dir, batch_path, batch_out, validate_path;
    long long seed = -1;

    auto* run_cmd = app.add_subcommand("run", "Run a scenario and write logs");
    run_cmd->add_option("scenario", scenario_path, "Scenario JSON file")->required();
    run_cmd->add_option("--out", out_dir, "Output directory (default from scenario)");
    run_cmd->add_option("--seed", seed, "Override the scenario RNG seed");

    auto* batch_cmd = app.add_subcommand("batch", "Run a fault sweep and print a summary table");
    batch_cmd->add_option("sweep", batch_path, "Sweep JSON file")->required();
    batch_cmd->add_option("--out", batch_out, "Write the summary CSV here instead of stdout");

    auto* validate_cmd = app.add_subcommand("validate", "Check a scenario file");
    validate_cmd->add_option("scenario", validate_path, "Scenario JSON file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) return cmd_run(scenario_path, out_dir, seed);
        if (batch_cmd->parsed()) return cmd_batch(batch_path, batch_out);
        if (validate_cmd->parsed()) return cmd_validate(validate_path);
    } catch (const ftc::config_error& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return 2;
    } catch (const ftc::numeric_error& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return 3;
    } catch (const ftc::divergence_error& e) {
        std::fprintf(stderr, "divergence: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    }
    return 0;
}
