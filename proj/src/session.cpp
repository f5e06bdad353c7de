#include "cvqkd/session.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "cvqkd/errors.hpp"
#include "cvqkd/math.hpp"

namespace cvqkd {

namespace {

// Fixed shard width so the shard layout, and therefore every random draw,
// is independent of the worker count.
constexpr std::uint64_t kShardPulses = 1u << 16;

struct ShardResult {
    std::uint64_t total = 0, sifted = 0, postselected = 0, symbol_errors = 0;
    std::uint64_t attacked = 0, sifted_attacked = 0, postselected_attacked = 0,
                  symbol_errors_attacked = 0;
    std::vector<std::uint64_t> mode_bit_errors;
    std::vector<std::uint64_t> eve_pattern_counts;
    std::uint64_t eve_wrong_basis = 0;
    std::vector<PulseRecord> trace;
};

ShardResult run_shard(const SessionConfig& config, std::uint64_t shard_index,
                      std::uint64_t first_pulse, std::uint64_t n_pulses,
                      std::uint64_t trace_from) {
    const ProtocolParams& params = config.params;
    const int n = params.modes;
    const double sqrt_t = std::sqrt(params.transmittance);
    const double inv_sqrt2 = 1.0 / math::kSqrt2;

    ShardResult result;
    result.mode_bit_errors.assign(n, 0);
    result.eve_pattern_counts.assign(std::size_t{1} << n, 0);

    Rng rng(config.seed, shard_index);
    SignBits alice_signs(n), channel_signs(n), bob_bits(n);
    QuadratureVector eve_e(n), eve_p(n), outcome(n);

    for (std::uint64_t i = 0; i < n_pulses; ++i) {
        const std::uint64_t pulse_index = first_pulse + i;
        const Basis alice_basis = rng.bit() ? Basis::P : Basis::E;
        for (int k = 0; k < n; ++k) alice_signs[k] = static_cast<std::uint8_t>(rng.bit());

        Basis channel_basis = alice_basis;
        channel_signs = alice_signs;
        const bool intercepted = params.eta > 0.0 && rng.uniform01() < params.eta;
        if (intercepted) {
            ++result.attacked;
            // Both split arms at the launch amplitude over sqrt(2), variance 1/4.
            double x2 = 0.0, y2 = 0.0;
            for (int k = 0; k < n; ++k) {
                const double displaced =
                    (alice_signs[k] ? -params.amplitudes[k] : params.amplitudes[k]) * inv_sqrt2;
                eve_e[k] = rng.gaussian(alice_basis == Basis::E ? displaced : 0.0, 0.5);
                x2 += eve_e[k] * eve_e[k];
            }
            for (int k = 0; k < n; ++k) {
                const double displaced =
                    (alice_signs[k] ? -params.amplitudes[k] : params.amplitudes[k]) * inv_sqrt2;
                eve_p[k] = rng.gaussian(alice_basis == Basis::P ? displaced : 0.0, 0.5);
                y2 += eve_p[k] * eve_p[k];
            }
            const bool first_wins = x2 >= y2;
            channel_basis = first_wins ? Basis::E : Basis::P;
            const QuadratureVector& winner = first_wins ? eve_e : eve_p;
            for (int k = 0; k < n; ++k) channel_signs[k] = winner[k] < 0.0 ? 1 : 0;
            if (channel_basis == alice_basis) {
                std::size_t mask = 0;
                for (int k = 0; k < n; ++k)
                    if (channel_signs[k] != alice_signs[k]) mask |= std::size_t{1} << k;
                ++result.eve_pattern_counts[mask];
            } else {
                ++result.eve_wrong_basis;
            }
        }

        const Basis bob_basis = rng.bit() ? Basis::P : Basis::E;
        const bool basis_match = channel_basis == bob_basis;
        for (int k = 0; k < n; ++k) {
            const double mean =
                basis_match ? (channel_signs[k] ? -params.amplitudes[k] : params.amplitudes[k]) *
                                  sqrt_t
                            : 0.0;
            outcome[k] = rng.gaussian(mean, 0.5);
        }

        const bool sifted = alice_basis == bob_basis;
        bool postselected = false;
        bool symbol_error = false;
        if (sifted) {
            ++result.sifted;
            if (intercepted) ++result.sifted_attacked;
            postselected = true;
            for (int k = 0; k < n; ++k) {
                if (outcome[k] >= params.thresholds[k]) {
                    bob_bits[k] = 1;
                } else if (outcome[k] <= -params.thresholds[k]) {
                    bob_bits[k] = 0;
                } else {
                    postselected = false;
                    break;
                }
            }
            if (postselected) {
                ++result.postselected;
                if (intercepted) ++result.postselected_attacked;
                for (int k = 0; k < n; ++k) {
                    // Alice's nu = 0 encodes the positive fringe; Bob's bit 1 does.
                    const bool mode_error = (bob_bits[k] == 1) != (alice_signs[k] == 0);
                    if (mode_error) {
                        ++result.mode_bit_errors[k];
                        symbol_error = true;
                    }
                }
                if (symbol_error) {
                    ++result.symbol_errors;
                    if (intercepted) ++result.symbol_errors_attacked;
                }
            }
        }
        ++result.total;

        if (pulse_index >= trace_from) {
            PulseRecord record;
            record.index = pulse_index;
            record.alice_basis = alice_basis;
            record.alice_signs = alice_signs;
            record.eve_intercepted = intercepted;
            if (intercepted)
                record.eve_resend = PreparedState{channel_basis, channel_signs, params.amplitudes};
            record.bob_basis = bob_basis;
            record.bob_outcome = outcome;
            record.sifted = sifted;
            record.postselected = postselected;
            if (postselected) record.bob_bits = bob_bits;
            result.trace.push_back(std::move(record));
        }
    }
    return result;
}

}  // namespace

void ProtocolParams::validate() const {
    if (modes < 1) throw contract_violation("mode count must be positive");
    if (amplitudes.size() != static_cast<std::size_t>(modes) ||
        thresholds.size() != static_cast<std::size_t>(modes))
        throw contract_violation("amplitudes and thresholds must have one entry per mode");
    for (double a : amplitudes)
        if (!(a >= 0.0)) throw contract_violation("amplitudes must be non-negative");
    for (double t : thresholds)
        if (!(t >= 0.0)) throw contract_violation("thresholds must be non-negative");
    if (!(eta >= 0.0) || eta > 1.0) throw contract_violation("eta must lie in [0, 1]");
    if (!(transmittance > 0.0) || transmittance > 1.0)
        throw contract_violation("transmittance must lie in (0, 1]");
}

void SessionConfig::validate() const {
    params.validate();
    if (n_pulses == 0) throw contract_violation("session needs at least one pulse");
}

std::optional<SignBits> bob_assign(const QuadratureVector& outcome,
                                   const std::vector<double>& thresholds) {
    if (outcome.size() != thresholds.size())
        throw contract_violation("outcome length differs from threshold count");
    SignBits bits(outcome.size());
    for (std::size_t k = 0; k < outcome.size(); ++k) {
        if (outcome[k] >= thresholds[k]) {
            bits[k] = 1;
        } else if (outcome[k] <= -thresholds[k]) {
            bits[k] = 0;
        } else {
            return std::nullopt;
        }
    }
    return bits;
}

RateEstimate RateEstimate::from_counts(std::uint64_t successes, std::uint64_t trials) {
    RateEstimate est;
    est.trials = trials;
    if (trials == 0) return est;
    est.value = static_cast<double>(successes) / static_cast<double>(trials);
    est.stderror = std::sqrt(std::max(est.value * (1.0 - est.value), 0.0) /
                             static_cast<double>(trials));
    return est;
}

SessionReport run_session(const SessionConfig& config) {
    config.validate();
    const std::uint64_t n_shards = (config.n_pulses + kShardPulses - 1) / kShardPulses;
    const std::uint64_t trace_from =
        config.trace_capacity >= config.n_pulses
            ? 0
            : config.n_pulses - static_cast<std::uint64_t>(config.trace_capacity);

    std::vector<ShardResult> partials(n_shards);
    auto run_one = [&](std::uint64_t s) {
        const std::uint64_t first = s * kShardPulses;
        const std::uint64_t count = std::min(kShardPulses, config.n_pulses - first);
        partials[s] = run_shard(config, s, first, count,
                                config.trace_capacity == 0 ? config.n_pulses : trace_from);
    };

    const int workers = std::max(1, config.workers);
    if (workers == 1 || n_shards == 1) {
        for (std::uint64_t s = 0; s < n_shards; ++s) run_one(s);
    } else {
        std::atomic<std::uint64_t> next{0};
        std::vector<std::thread> pool;
        const int pool_size = static_cast<int>(
            std::min<std::uint64_t>(static_cast<std::uint64_t>(workers), n_shards));
        for (int t = 0; t < pool_size; ++t)
            pool.emplace_back([&] {
                for (std::uint64_t s = next.fetch_add(1); s < n_shards; s = next.fetch_add(1))
                    run_one(s);
            });
        for (auto& th : pool) th.join();
    }

    SessionReport report;
    report.mode_bit_errors.assign(config.params.modes, 0);
    report.eve_pattern_counts.assign(std::size_t{1} << config.params.modes, 0);
    for (auto& part : partials) {
        report.total += part.total;
        report.sifted += part.sifted;
        report.postselected += part.postselected;
        report.symbol_errors += part.symbol_errors;
        report.attacked += part.attacked;
        report.sifted_attacked += part.sifted_attacked;
        report.postselected_attacked += part.postselected_attacked;
        report.symbol_errors_attacked += part.symbol_errors_attacked;
        for (std::size_t k = 0; k < report.mode_bit_errors.size(); ++k)
            report.mode_bit_errors[k] += part.mode_bit_errors[k];
        for (std::size_t m = 0; m < report.eve_pattern_counts.size(); ++m)
            report.eve_pattern_counts[m] += part.eve_pattern_counts[m];
        report.eve_wrong_basis += part.eve_wrong_basis;
        for (auto& rec : part.trace) report.trace.push_back(std::move(rec));
    }
    if (report.trace.size() > config.trace_capacity)
        report.trace.erase(report.trace.begin(),
                           report.trace.end() - static_cast<std::ptrdiff_t>(config.trace_capacity));

    report.sift_ratio = RateEstimate::from_counts(report.sifted, report.total);
    report.empirical_pe = RateEstimate::from_counts(report.postselected, report.sifted);
    report.empirical_qber = RateEstimate::from_counts(report.symbol_errors, report.postselected);
    report.empirical_pe_attacked =
        RateEstimate::from_counts(report.postselected_attacked, report.sifted_attacked);
    report.empirical_qber_attacked =
        RateEstimate::from_counts(report.symbol_errors_attacked, report.postselected_attacked);
    report.empirical_pe_clean = RateEstimate::from_counts(
        report.postselected - report.postselected_attacked, report.sifted - report.sifted_attacked);
    report.empirical_qber_clean =
        RateEstimate::from_counts(report.symbol_errors - report.symbol_errors_attacked,
                                  report.postselected - report.postselected_attacked);
    return report;
}

}  // namespace cvqkd
