#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cvqkd/cli.hpp"
#include "cvqkd/errors.hpp"

namespace {

using namespace cvqkd;

void add_common_config(CLI::App* app, std::string& sink) {
    app->add_option("--config", sink,
                    "Flat key=value file mirroring the flags; explicit flags win");
}

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

// Expand `--config file` into flags appended to args. Keys already given
// explicitly are left alone, so command-line flags take precedence.
void inject_config(std::vector<std::string>& args) {
    std::string path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
    }
    if (path.empty()) return;
    std::ifstream in(path);
    if (!in) throw contract_violation("cannot read config file: " + path);
    std::string line;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw contract_violation("config line is not key=value: " + line);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw contract_violation("config line has an empty key: " + line);
        const std::string flag = "--" + key;
        const bool given = std::any_of(args.begin(), args.end(), [&](const std::string& a) {
            return a == flag || a.rfind(flag + "=", 0) == 0;
        });
        if (given) continue;
        args.push_back(flag);
        std::istringstream values(value);
        std::string token;
        while (values >> token) args.push_back(token);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Numerical laboratory for a high-dimensional discrete-modulated CV-QKD protocol"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(cli::kToolName) + " " + cli::kToolVersion);

    std::string config_file;
    cli::MetricsOptions metrics;
    auto* metrics_cmd = app.add_subcommand(
        "metrics", "Postselection efficiency and error rates over an (a, e0) grid (CSV)");
    metrics_cmd->add_option("--modes", metrics.modes, "Number of modes N (1..3)");
    metrics_cmd->add_option("--eta", metrics.eta, "Interception rate in [0,1]");
    metrics_cmd->add_option("--loss", metrics.loss, "Channel loss 1-T in [0,1)");
    metrics_cmd->add_option("--a-min", metrics.a_min, "Amplitude sweep start");
    metrics_cmd->add_option("--a-max", metrics.a_max, "Amplitude sweep end");
    metrics_cmd->add_option("--a-step", metrics.a_step, "Amplitude step (<=0: single value)");
    metrics_cmd->add_option("--e0-min", metrics.e0_min, "Threshold sweep start");
    metrics_cmd->add_option("--e0-max", metrics.e0_max, "Threshold sweep end");
    metrics_cmd->add_option("--e0-step", metrics.e0_step, "Threshold step (<=0: single value)");
    metrics_cmd->add_option("--workers", metrics.workers, "Worker threads");
    metrics_cmd->add_option("--out", metrics.out, "Output CSV path (default stdout)");
    add_common_config(metrics_cmd, config_file);

    cli::Table1Options table1;
    auto* table1_cmd = app.add_subcommand(
        "table1", "Secure key gain vs loss for N = 1..3 at the nominal operating point (CSV)");
    table1_cmd->add_option("--eta", table1.eta, "Interception rate");
    table1_cmd->add_option("--loss", table1.losses,
                           "Loss values (repeatable; default: the reference list)");
    table1_cmd->add_flag("--optimize", table1.optimize,
                         "Free (e0, a) grid optimization instead of the nominal point");
    table1_cmd->add_option("--e0", table1.e0, "Operating threshold when not optimizing");
    table1_cmd->add_option("--a", table1.a, "Operating launch amplitude when not optimizing");
    table1_cmd->add_option("--max-modes", table1.max_modes, "Highest mode count (1..3)");
    table1_cmd->add_option("--workers", table1.workers, "Worker threads");
    table1_cmd->add_option("--out", table1.out, "Output CSV path (default stdout)");
    add_common_config(table1_cmd, config_file);

    cli::SimulateOptions simulate;
    auto* simulate_cmd =
        app.add_subcommand("simulate", "Monte Carlo protocol session with analytic z-scores (JSON)");
    simulate_cmd->add_option("--modes", simulate.modes, "Number of modes N");
    simulate_cmd->add_option("--amplitude", simulate.amplitudes,
                             "Launch amplitude(s); one value or one per mode");
    simulate_cmd->add_option("--threshold", simulate.thresholds,
                             "Postselection threshold(s); one value or one per mode");
    simulate_cmd->add_option("--eta", simulate.eta, "Interception rate in [0,1]");
    simulate_cmd->add_option("--loss", simulate.loss, "Channel loss 1-T in [0,1)");
    simulate_cmd->add_option("--pulses", simulate.pulses, "Number of pulses");
    simulate_cmd->add_option("--seed", simulate.seed, "RNG seed (fixed default)");
    simulate_cmd->add_option("--workers", simulate.workers, "Worker threads");
    simulate_cmd->add_option("--trace-len", simulate.trace_len,
                             "Keep the last K pulse records (0 = off)");
    simulate_cmd->add_option("--trace-out", simulate.trace_out, "Per-pulse trace file (CSV)");
    simulate_cmd->add_option("--out", simulate.out, "Output JSON path (default stdout)");
    add_common_config(simulate_cmd, config_file);

    cli::DensityOptions density;
    auto* density_cmd = app.add_subcommand(
        "density", "Signal-ensemble probability grids over the outcome plane (CSV)");
    density_cmd->add_option("--modes", density.modes, "Number of modes (1 or 2)");
    density_cmd->add_option("--amplitude", density.amplitudes,
                            "Amplitude(s); one value or one per mode");
    density_cmd->add_option("--x-min", density.x_min, "Grid start per axis");
    density_cmd->add_option("--x-max", density.x_max, "Grid end per axis");
    density_cmd->add_option("--x-step", density.x_step, "Grid step");
    density_cmd->add_option("--out", density.out, "Output CSV path (default stdout)");
    add_common_config(density_cmd, config_file);

    cli::ProfileOptions profile;
    auto* profile_cmd = app.add_subcommand(
        "attack-profile", "Eve's outcome-probability table by quadrature and/or Monte Carlo (JSON)");
    profile_cmd->add_option("--modes", profile.modes, "Number of modes N");
    profile_cmd->add_option("--amplitude", profile.amplitudes,
                            "Amplitude(s) entering Eve's splitter (the launch value here)");
    profile_cmd->add_option("--loss", profile.loss,
                            "Recorded in the manifest; interception happens before the fiber");
    profile_cmd->add_option("--method", profile.method, "quadrature | mc")
        ->check(CLI::IsMember({"quadrature", "mc"}));
    profile_cmd->add_option("--samples", profile.samples, "Monte Carlo sample count");
    profile_cmd->add_option("--seed", profile.seed, "Monte Carlo seed");
    profile_cmd->add_option("--streams", profile.streams, "Monte Carlo stream count");
    profile_cmd->add_option("--workers", profile.workers, "Worker threads");
    profile_cmd->add_option("--quad-tol", profile.quad_tol,
                            "Absolute per-entry target for the quadrature method");
    profile_cmd->add_flag("--compare", profile.compare, "Also run the other method and z-score it");
    profile_cmd->add_option("--out", profile.out, "Output JSON path (default stdout)");
    add_common_config(profile_cmd, config_file);

    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        inject_config(args);
    } catch (const contract_violation& e) {
        std::cerr << "cvqkd: " << e.what() << "\n";
        return cli::kExitUsage;
    }
    // CLI11 consumes the vector form back to front.
    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return cli::kExitUsage;
    }

    try {
        if (metrics_cmd->parsed()) return cli::cmd_metrics(metrics);
        if (table1_cmd->parsed()) return cli::cmd_table1(table1);
        if (simulate_cmd->parsed()) return cli::cmd_simulate(simulate);
        if (density_cmd->parsed()) return cli::cmd_density(density);
        if (profile_cmd->parsed()) return cli::cmd_attack_profile(profile);
    } catch (const contract_violation& e) {
        std::cerr << "cvqkd: " << e.what() << "\n";
        return cli::kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "cvqkd: " << e.what() << "\n";
        return cli::kExitNumeric;
    }
    return cli::kExitUsage;
}
