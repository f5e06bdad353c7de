#include "cvqkd/cli.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "cvqkd/errors.hpp"
#include "cvqkd/keyrate.hpp"
#include "cvqkd/math.hpp"
#include "cvqkd/metrics.hpp"
#include "cvqkd/session.hpp"

namespace cvqkd::cli {

namespace {

using json = nlohmann::ordered_json;

std::string fmt(double v, const char* spec = "%.12g") {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// One manifest per sink; data files carry no timestamps so reruns with the
// same seed and version are byte-identical.
class OutputSink {
public:
    explicit OutputSink(std::string path) : path_(std::move(path)) {}

    void add_file(const std::string& path, const std::string& bytes) {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw contract_violation("cannot open output file: " + path);
        out << bytes;
        files_.push_back({path, bytes.size(), fnv1a64(bytes)});
    }

    // Write the primary payload (file + manifest, or stdout).
    void finish(const std::string& command, const json& parameters, const std::string& payload) {
        if (path_.empty()) {
            std::cout << payload;
            return;
        }
        add_file(path_, payload);
        json manifest;
        manifest["command"] = command;
        manifest["tool"] = kToolName;
        manifest["version"] = kToolVersion;
        manifest["created_utc"] = utc_now();
        manifest["parameters"] = parameters;
        manifest["outputs"] = json::array();
        for (const auto& f : files_) {
            char hex[17];
            std::snprintf(hex, sizeof(hex), "%016llx",
                          static_cast<unsigned long long>(f.checksum));
            manifest["outputs"].push_back(
                {{"path", f.path}, {"bytes", f.bytes}, {"fnv1a64", hex}});
        }
        std::ofstream out(path_ + ".manifest.json", std::ios::binary);
        out << manifest.dump(2) << '\n';
    }

private:
    struct FileEntry {
        std::string path;
        std::size_t bytes;
        std::uint64_t checksum;
    };
    std::string path_;
    std::vector<FileEntry> files_;
};

std::vector<double> broadcast(std::vector<double> values, int modes, const char* what) {
    if (values.size() == 1) values.assign(static_cast<std::size_t>(modes), values[0]);
    if (values.size() != static_cast<std::size_t>(modes))
        throw contract_violation(std::string(what) + " needs one value or one per mode");
    return values;
}

std::string pattern_string(std::size_t mask, int modes) {
    std::string s(static_cast<std::size_t>(modes), '+');
    for (int k = 0; k < modes; ++k)
        if ((mask >> k) & 1) s[static_cast<std::size_t>(k)] = '-';
    return s;
}

json profile_to_json(const AttackProfile& profile) {
    json entries = json::array();
    for (std::size_t mask = 0; mask < profile.correct.size(); ++mask)
        entries.push_back({{"pattern", pattern_string(mask, profile.modes)},
                           {"p", profile.correct[mask]},
                           {"stderr", profile.correct_se[mask]}});
    return json{{"entries", entries},
                {"wrong_per_state", profile.wrong_per_state},
                {"wrong_stderr", profile.wrong_se},
                {"normalization_residual", profile.norm_residual}};
}

json rate_to_json(const RateEstimate& rate) {
    return json{{"value", rate.value}, {"stderr", rate.stderror}, {"trials", rate.trials}};
}

double z_score(const RateEstimate& empirical, double analytic) {
    if (empirical.stderror <= 0.0) return 0.0;
    return (empirical.value - analytic) / empirical.stderror;
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::vector<double> reference_loss_list() {
    return {0.00, 0.10, 0.20, 0.30, 0.40, 0.50, 0.60, 0.65, 0.70, 0.75, 0.80, 0.81};
}

int cmd_metrics(const MetricsOptions& options) {
    if (options.modes < 1 || options.modes > 3)
        throw contract_violation("metrics supports 1..3 modes");
    if (!(options.eta >= 0.0) || options.eta > 1.0)
        throw contract_violation("eta must lie in [0, 1]");
    std::vector<double> a_grid, e0_grid;
    if (options.a_step > 0.0) {
        for (double a = options.a_min; a <= options.a_max + 1e-12; a += options.a_step)
            a_grid.push_back(a);
    } else {
        a_grid.push_back(options.a_min);
    }
    if (options.e0_step > 0.0) {
        for (double e0 = options.e0_min; e0 <= options.e0_max + 1e-12; e0 += options.e0_step)
            e0_grid.push_back(e0);
    } else {
        e0_grid.push_back(options.e0_min);
    }
    if (a_grid.empty() || e0_grid.empty()) throw contract_violation("empty parameter grid");

    const double transmittance = ChannelModel::from_loss(options.loss).transmittance;
    const int n = options.modes;
    std::ostringstream csv;
    csv << "N,a,e0,eta,T,pe,iqber,pe_attacked,qber_attacked\n";
    // Eve's table depends only on the launch amplitude; precompute the grid
    // in parallel, then write rows in order.
    std::map<double, AttackProfile> profiles;
    if (options.eta > 0.0) {
        for (double a : a_grid) profiles.emplace(a, AttackProfile{});
        std::vector<double> keys(a_grid);
        std::atomic<std::size_t> next{0};
        auto fill = [&] {
            for (std::size_t i = next.fetch_add(1); i < keys.size(); i = next.fetch_add(1))
                profiles.at(keys[i]) = attack_profile(std::vector<double>(n, keys[i]),
                                                      ProfileMethod::ReducedQuadrature, {});
        };
        const int pool_size =
            std::max(1, static_cast<int>(std::min<std::size_t>(options.workers, keys.size())));
        if (pool_size == 1) {
            fill();
        } else {
            std::vector<std::thread> pool;
            for (int t = 0; t < pool_size; ++t) pool.emplace_back(fill);
            for (auto& th : pool) th.join();
        }
    }
    for (double a : a_grid) {
        const AttackProfile* profile = options.eta > 0.0 ? &profiles.at(a) : nullptr;
        const std::vector<double> effective =
            apply_loss(std::vector<double>(static_cast<std::size_t>(n), a), transmittance);
        for (double e0 : e0_grid) {
            const std::vector<double> thresholds(static_cast<std::size_t>(n), e0);
            const double pe = postselection_efficiency(thresholds, effective);
            const double q = iqber(thresholds, effective);
            double pe_attacked = pe, qber_attacked = q;
            if (profile) {
                pe_attacked = pe_under_attack(thresholds, effective, *profile);
                qber_attacked = qber_under_attack(thresholds, effective, *profile);
            }
            csv << n << ',' << fmt(a) << ',' << fmt(e0) << ',' << fmt(options.eta) << ','
                << fmt(transmittance) << ',' << fmt(pe) << ',' << fmt(q) << ','
                << fmt(pe_attacked) << ',' << fmt(qber_attacked) << '\n';
        }
    }

    json params{{"modes", options.modes},       {"eta", options.eta},
                {"loss", options.loss},         {"a_min", options.a_min},
                {"a_max", options.a_max},       {"a_step", options.a_step},
                {"e0_min", options.e0_min},     {"e0_max", options.e0_max},
                {"e0_step", options.e0_step},   {"workers", options.workers}};
    OutputSink sink(options.out);
    sink.finish("metrics", params, csv.str());
    return kExitOk;
}

int cmd_table1(const Table1Options& options) {
    if (!(options.eta >= 0.0) || options.eta > 1.0)
        throw contract_violation("eta must lie in [0, 1]");
    const std::vector<double> losses =
        options.losses.empty() ? reference_loss_list() : options.losses;
    SearchSpec spec =
        options.optimize ? SearchSpec{} : SearchSpec::single_point(options.e0, options.a);
    // Parallelism goes across table cells; the per-cell search stays serial.
    spec.workers = 1;
    const auto rows =
        compute_gain_table(options.eta, losses, spec, options.max_modes, options.workers);

    std::ostringstream csv;
    csv << "loss,distance_km";
    for (int n = 1; n <= options.max_modes; ++n) csv << ",G" << n;
    for (int n = 1; n <= options.max_modes; ++n) csv << ",e0_" << n << ",a_" << n;
    csv << '\n';
    for (const auto& row : rows) {
        csv << fmt(row.loss, "%.2f") << ',' << fmt(row.distance_km, "%.2f");
        for (const auto& gain : row.gains) csv << ',' << fmt(gain.gain, "%.6f");
        for (const auto& gain : row.gains)
            csv << ',' << fmt(gain.thresholds[0], "%.4f") << ',' << fmt(gain.amplitudes[0], "%.4f");
        csv << '\n';
    }

    json params{{"eta", options.eta},         {"losses", losses},
                {"optimize", options.optimize}, {"e0", options.e0},
                {"a", options.a},             {"max_modes", options.max_modes},
                {"workers", options.workers}};
    OutputSink sink(options.out);
    sink.finish("table1", params, csv.str());
    return kExitOk;
}

int cmd_simulate(const SimulateOptions& options) {
    SessionConfig config;
    config.params.modes = options.modes;
    config.params.amplitudes = broadcast(options.amplitudes, options.modes, "--amplitude");
    config.params.thresholds = broadcast(options.thresholds, options.modes, "--threshold");
    config.params.eta = options.eta;
    config.params.transmittance = ChannelModel::from_loss(options.loss).transmittance;
    config.n_pulses = options.pulses;
    config.seed = options.seed;
    config.workers = options.workers;
    config.trace_capacity = options.trace_len;
    config.validate();

    const SessionReport report = run_session(config);

    // Analytic side of the comparison, at the same convention: Eve profiled
    // at the launch amplitudes, Bob at the attenuated ones.
    const AttackProfile profile =
        config.params.eta > 0.0 && config.params.modes <= 3
            ? attack_profile(config.params.amplitudes, ProfileMethod::ReducedQuadrature, {})
            : AttackProfile::trivial(config.params.modes);
    const std::vector<double> effective =
        apply_loss(config.params.amplitudes, config.params.transmittance);
    const MetricsReport analytic = evaluate_metrics(config.params.thresholds, effective, profile);
    const double eta = config.params.eta;
    const double pe_blend = eta * analytic.pe_attacked + (1.0 - eta) * analytic.pe;
    const double qber_blend =
        (eta * analytic.pe_attacked * analytic.qber_attacked +
         (1.0 - eta) * analytic.pe * analytic.iqber) /
        pe_blend;

    json doc;
    doc["config"] = {{"modes", config.params.modes},
                     {"amplitudes", config.params.amplitudes},
                     {"thresholds", config.params.thresholds},
                     {"eta", eta},
                     {"loss", options.loss},
                     {"transmittance", config.params.transmittance},
                     {"pulses", config.n_pulses},
                     {"seed", config.seed}};
    doc["counts"] = {{"total", report.total},
                     {"sifted", report.sifted},
                     {"postselected", report.postselected},
                     {"symbol_errors", report.symbol_errors},
                     {"mode_bit_errors", report.mode_bit_errors},
                     {"attacked", report.attacked},
                     {"sifted_attacked", report.sifted_attacked},
                     {"postselected_attacked", report.postselected_attacked},
                     {"symbol_errors_attacked", report.symbol_errors_attacked}};
    doc["rates"] = {{"sift_ratio", rate_to_json(report.sift_ratio)},
                    {"pe", rate_to_json(report.empirical_pe)},
                    {"qber", rate_to_json(report.empirical_qber)},
                    {"pe_attacked", rate_to_json(report.empirical_pe_attacked)},
                    {"qber_attacked", rate_to_json(report.empirical_qber_attacked)},
                    {"pe_clean", rate_to_json(report.empirical_pe_clean)},
                    {"qber_clean", rate_to_json(report.empirical_qber_clean)}};
    doc["eve"] = {{"pattern_counts", report.eve_pattern_counts},
                  {"wrong_basis", report.eve_wrong_basis}};
    doc["analytic"] = {{"pe", analytic.pe},
                       {"iqber", analytic.iqber},
                       {"pe_attacked", analytic.pe_attacked},
                       {"qber_attacked", analytic.qber_attacked},
                       {"pe_blend", pe_blend},
                       {"qber_blend", qber_blend}};
    doc["z_scores"] = {{"pe", z_score(report.empirical_pe, pe_blend)},
                       {"qber", z_score(report.empirical_qber, qber_blend)},
                       {"pe_attacked", z_score(report.empirical_pe_attacked, analytic.pe_attacked)},
                       {"qber_attacked",
                        z_score(report.empirical_qber_attacked, analytic.qber_attacked)},
                       {"pe_clean", z_score(report.empirical_pe_clean, analytic.pe)},
                       {"qber_clean", z_score(report.empirical_qber_clean, analytic.iqber)}};

    json params{{"modes", options.modes},   {"amplitudes", config.params.amplitudes},
                {"thresholds", config.params.thresholds}, {"eta", eta},
                {"loss", options.loss},     {"pulses", options.pulses},
                {"seed", options.seed},     {"workers", options.workers},
                {"trace_len", options.trace_len}};

    OutputSink sink(options.out);
    if (!options.trace_out.empty() && options.trace_len > 0) {
        std::ostringstream trace;
        trace << "index,alice_basis,alice_signs,eve,bob_basis";
        for (int k = 1; k <= options.modes; ++k) trace << ",outcome_" << k;
        trace << ",sifted,postselected,bob_bits\n";
        for (const auto& rec : report.trace) {
            std::string signs(rec.alice_signs.size(), '0');
            for (std::size_t k = 0; k < rec.alice_signs.size(); ++k)
                signs[k] = rec.alice_signs[k] ? '1' : '0';
            trace << rec.index << ',' << basis_letter(rec.alice_basis) << ',' << signs << ','
                  << (rec.eve_intercepted ? 1 : 0) << ',' << basis_letter(rec.bob_basis);
            for (double x : rec.bob_outcome) trace << ',' << fmt(x);
            std::string bits = "-";
            if (rec.bob_bits) {
                bits.assign(rec.bob_bits->size(), '0');
                for (std::size_t k = 0; k < rec.bob_bits->size(); ++k)
                    bits[k] = (*rec.bob_bits)[k] ? '1' : '0';
            }
            trace << ',' << (rec.sifted ? 1 : 0) << ',' << (rec.postselected ? 1 : 0) << ','
                  << bits << '\n';
        }
        sink.add_file(options.trace_out, trace.str());
    }
    sink.finish("simulate", params, doc.dump(2) + "\n");
    return kExitOk;
}

int cmd_density(const DensityOptions& options) {
    if (options.modes < 1 || options.modes > 2)
        throw contract_violation("density grids are emitted for 1 or 2 modes");
    if (!(options.x_step > 0.0) || !(options.x_min <= options.x_max))
        throw contract_violation("empty density grid");
    const std::vector<double> amplitudes =
        broadcast(options.amplitudes, options.modes, "--amplitude");

    std::vector<double> grid;
    for (double x = options.x_min; x <= options.x_max + 1e-12; x += options.x_step)
        grid.push_back(x);

    // Emits both views of the prepared ensemble: the 2^N-state mixture seen
    // in the matching basis and the centred Gaussian seen in the other one.
    std::ostringstream csv;
    if (options.modes == 1) {
        csv << "x1,same_basis,other_basis\n";
        for (double x : grid)
            csv << fmt(x) << ',' << fmt(ensemble_density(Basis::E, amplitudes, Basis::E, {x}))
                << ',' << fmt(ensemble_density(Basis::E, amplitudes, Basis::P, {x})) << '\n';
    } else {
        csv << "x1,x2,same_basis,other_basis\n";
        for (double x1 : grid)
            for (double x2 : grid)
                csv << fmt(x1) << ',' << fmt(x2) << ','
                    << fmt(ensemble_density(Basis::E, amplitudes, Basis::E, {x1, x2})) << ','
                    << fmt(ensemble_density(Basis::E, amplitudes, Basis::P, {x1, x2})) << '\n';
    }

    json params{{"modes", options.modes}, {"amplitudes", amplitudes},
                {"x_min", options.x_min}, {"x_max", options.x_max},
                {"x_step", options.x_step}};
    OutputSink sink(options.out);
    sink.finish("density", params, csv.str());
    return kExitOk;
}

int cmd_attack_profile(const ProfileOptions& options) {
    if (options.modes < 1) throw contract_violation("mode count must be positive");
    if (options.method != "quadrature" && options.method != "mc")
        throw contract_violation("method must be quadrature or mc");
    const std::vector<double> amplitudes =
        broadcast(options.amplitudes, options.modes, "--amplitude");

    ProfileAccuracy accuracy;
    accuracy.quad_abs_tol = options.quad_tol;
    accuracy.mc_samples = options.samples;
    accuracy.mc_seed = options.seed;
    accuracy.mc_streams = options.streams;
    accuracy.workers = options.workers;

    json params{{"modes", options.modes}, {"amplitudes", amplitudes},
                {"loss", options.loss},   {"method", options.method},
                {"samples", options.samples}, {"seed", options.seed},
                {"streams", options.streams}, {"quad_tol", options.quad_tol},
                {"compare", options.compare}};

    json doc;
    doc["modes"] = options.modes;
    doc["amplitudes"] = amplitudes;
    doc["method"] = options.method;
    OutputSink sink(options.out);
    try {
        const ProfileMethod method = options.method == "quadrature"
                                         ? ProfileMethod::ReducedQuadrature
                                         : ProfileMethod::MonteCarlo;
        const AttackProfile profile = attack_profile(amplitudes, method, accuracy);
        doc["profile"] = profile_to_json(profile);
        if (options.compare) {
            const ProfileMethod alt = method == ProfileMethod::ReducedQuadrature
                                          ? ProfileMethod::MonteCarlo
                                          : ProfileMethod::ReducedQuadrature;
            const AttackProfile against = attack_profile(amplitudes, alt, accuracy);
            json comparison = profile_to_json(against);
            comparison["method"] = alt == ProfileMethod::MonteCarlo ? "mc" : "quadrature";
            double max_z = 0.0;
            json zs = json::array();
            for (std::size_t m = 0; m < profile.correct.size(); ++m) {
                const double se = std::max(profile.correct_se[m], against.correct_se[m]);
                const double z =
                    se > 0.0 ? (profile.correct[m] - against.correct[m]) / se : 0.0;
                zs.push_back(z);
                max_z = std::max(max_z, std::abs(z));
            }
            const double wrong_se = std::max(profile.wrong_se, against.wrong_se);
            const double wrong_z =
                wrong_se > 0.0 ? (profile.wrong_per_state - against.wrong_per_state) / wrong_se
                               : 0.0;
            max_z = std::max(max_z, std::abs(wrong_z));
            comparison["z_scores"] = zs;
            comparison["wrong_z"] = wrong_z;
            comparison["max_abs_z"] = max_z;
            doc["comparison"] = comparison;
        }
    } catch (const accuracy_failure& failure) {
        doc["accuracy_failure"] = {{"message", failure.what()},
                                   {"achieved_estimate", failure.estimate},
                                   {"achieved_error", failure.error}};
        sink.finish("attack-profile", params, doc.dump(2) + "\n");
        std::cerr << "cvqkd: " << failure.what() << "\n";
        return kExitNumeric;
    }
    sink.finish("attack-profile", params, doc.dump(2) + "\n");
    return kExitOk;
}

}  // namespace cvqkd::cli
