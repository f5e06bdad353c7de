#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace cvqkd::cli {

inline constexpr const char* kToolName = "cvqkd";
inline constexpr const char* kToolVersion = "0.1.0";

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitNumeric = 2;

std::uint64_t fnv1a64(std::string_view bytes);

struct MetricsOptions {
    int modes = 1;
    double eta = 0.0;
    double loss = 0.0;
    double a_min = 0.05, a_max = 3.0, a_step = 0.05;
    double e0_min = 0.75, e0_max = 0.75, e0_step = 0.0;  // step <= 0: single value
    int workers = 1;
    std::string out;                                     // empty = stdout, no manifest
};

struct Table1Options {
    double eta = 0.6;
    std::vector<double> losses;  // empty = the reference loss list
    bool optimize = false;       // free grid search instead of the nominal point
    double e0 = 0.30, a = 1.20;  // nominal operating point
    int max_modes = 3;
    int workers = 1;
    std::string out;
};

struct SimulateOptions {
    int modes = 1;
    std::vector<double> amplitudes{1.0};  // broadcast to all modes when single
    std::vector<double> thresholds{0.75};
    double eta = 0.0;
    double loss = 0.0;
    std::uint64_t pulses = 1'000'000;
    std::uint64_t seed = 42;
    int workers = 1;
    std::uint64_t trace_len = 0;
    std::string trace_out;
    std::string out;
};

struct DensityOptions {
    int modes = 2;  // 1 or 2 (line or surface grid)
    std::vector<double> amplitudes{1.0};
    double x_min = -3.0, x_max = 3.0, x_step = 0.05;
    std::string out;
};

struct ProfileOptions {
    int modes = 1;
    std::vector<double> amplitudes{1.0};
    double loss = 0.0;  // recorded only; the profile is taken at the intercept point
    std::string method = "quadrature";  // quadrature | mc
    std::uint64_t samples = 10'000'000;
    std::uint64_t seed = 20260810;
    int streams = 1;
    int workers = 1;
    double quad_tol = 1e-9;  // absolute per-entry quadrature target
    bool compare = false;    // emit the other method side by side
    std::string out;
};

std::vector<double> reference_loss_list();

int cmd_metrics(const MetricsOptions& options);
int cmd_table1(const Table1Options& options);
int cmd_simulate(const SimulateOptions& options);
int cmd_attack_profile(const ProfileOptions& options);
int cmd_density(const DensityOptions& options);

}  // namespace cvqkd::cli
