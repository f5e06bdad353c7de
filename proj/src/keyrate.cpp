#include "cvqkd/keyrate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <string>
#include <thread>

#include "cvqkd/errors.hpp"
#include "cvqkd/math.hpp"

namespace cvqkd {

namespace {

double log2_safe(double x) { return std::log2(x); }

// Profiles depend only on the launch amplitude (Eve intercepts at the
// transmitter), so memoize per equal-amplitude value.
class ProfileCache {
public:
    ProfileCache(int modes, const ProfileAccuracy& accuracy) : modes_(modes), accuracy_(accuracy) {}

    const AttackProfile& at(double amplitude) {
        {
            std::lock_guard<std::mutex> lock(mutex_);
            auto it = cache_.find(amplitude);
            if (it != cache_.end()) return it->second;
        }
        // Compute outside the lock so parallel prefills actually overlap.
        const std::vector<double> amps(modes_, amplitude);
        AttackProfile profile = attack_profile(amps, ProfileMethod::ReducedQuadrature, accuracy_);
        std::lock_guard<std::mutex> lock(mutex_);
        return cache_.emplace(amplitude, std::move(profile)).first->second;
    }

private:
    int modes_;
    ProfileAccuracy accuracy_;
    std::mutex mutex_;
    std::map<double, AttackProfile> cache_;
};

GainPoint evaluate(int modes, double e0, double a, double transmittance, double eta,
                   ProfileCache& profiles) {
    const AttackProfile& profile = profiles.at(a);
    const std::vector<double> thresholds(modes, e0);
    const std::vector<double> launch(modes, a);
    GainPoint point = secure_key_gain(thresholds, apply_loss(launch, transmittance), eta, profile);
    point.amplitudes = launch;
    point.transmittance = transmittance;
    return point;
}

}  // namespace

ChannelModel ChannelModel::from_loss(double loss) {
    if (!(loss >= 0.0) || loss >= 1.0) throw contract_violation("loss must lie in [0, 1)");
    return ChannelModel{1.0 - loss};
}

double alphabet_entropy(double p, unsigned alphabet_size) {
    if (alphabet_size < 2) throw contract_violation("alphabet needs at least two symbols");
    const double limit = static_cast<double>(alphabet_size - 1) / alphabet_size;
    if (!(p >= 0.0) || p > limit + 1e-12)
        throw contract_violation("error rate outside [0, (N-1)/N]");
    p = std::min(p, limit);
    double h = log2_safe(static_cast<double>(alphabet_size));
    if (p > 0.0) h += p * log2_safe(p / (alphabet_size - 1));
    if (p < 1.0) h += (1.0 - p) * log2_safe(1.0 - p);
    return std::max(h, 0.0);
}

double mutual_info_ab(double q, double q_attacked, double eta, unsigned alphabet_size) {
    if (!(eta >= 0.0) || eta > 1.0) throw contract_violation("eta must lie in [0, 1]");
    return alphabet_entropy(eta * q_attacked + (1.0 - eta) * q, alphabet_size);
}

double mutual_info_ae_bound(const AttackProfile& profile) {
    const double sigma = profile.sigma();
    if (sigma <= 0.0)
        throw undefined_metric("Eve bound undefined: no correct-basis probability mass");
    double info = log2_safe(std::ldexp(1.0, profile.modes));
    for (double p : profile.correct) {
        const double renorm = p / sigma;
        if (renorm > 0.0) info += renorm * log2_safe(renorm);
    }
    return std::clamp(info, 0.0, log2_safe(std::ldexp(1.0, profile.modes)));
}

GainPoint secure_key_gain(const std::vector<double>& thresholds,
                          const std::vector<double>& amplitudes_effective, double eta,
                          const AttackProfile& profile) {
    if (!(eta >= 0.0) || eta > 1.0) throw contract_violation("eta must lie in [0, 1]");
    GainPoint point;
    point.thresholds = thresholds;
    point.amplitudes = amplitudes_effective;
    point.eta = eta;
    point.metrics = evaluate_metrics(thresholds, amplitudes_effective, profile);
    const unsigned alphabet = 1u << thresholds.size();
    point.i_ab = mutual_info_ab(point.metrics.iqber, point.metrics.qber_attacked, eta, alphabet);
    point.i_ae_bound = mutual_info_ae_bound(profile);
    point.gain_raw =
        0.5 * ((eta * point.metrics.pe_attacked + (1.0 - eta) * point.metrics.pe) * point.i_ab -
               eta * point.metrics.pe_attacked * point.i_ae_bound);
    point.gain = std::max(point.gain_raw, 0.0);
    return point;
}

std::vector<double> apply_loss(const std::vector<double>& amplitudes, double transmittance) {
    if (!(transmittance > 0.0) || transmittance > 1.0)
        throw contract_violation("transmittance must lie in (0, 1]");
    std::vector<double> out(amplitudes);
    const double scale = std::sqrt(transmittance);
    for (double& a : out) a *= scale;
    return out;
}

double loss_to_distance(double loss) {
    if (!(loss >= 0.0) || loss >= 1.0) throw contract_violation("loss must lie in [0, 1)");
    const double transmittance = 1.0 - loss;
    return -10.0 * std::log10(transmittance) / ChannelModel::kFiberAttenuationDbPerKm + 0.0;
}

SearchSpec SearchSpec::single_point(double e0, double a) {
    SearchSpec spec;
    spec.e0_min = spec.e0_max = e0;
    spec.a_min = spec.a_max = a;
    spec.e0_step = spec.a_step = 1.0;
    spec.refine_step = 1.0;  // nothing to refine
    return spec;
}

SearchSpec SearchSpec::nominal() { return single_point(0.30, 1.20); }

GainPoint optimize_gain(int modes, double transmittance, double eta, const SearchSpec& spec) {
    if (modes < 1 || modes > 3) throw contract_violation("optimizer supports 1..3 modes");
    if (!(spec.e0_step > 0.0) || !(spec.a_step > 0.0))
        throw contract_violation("grid steps must be positive");
    std::vector<double> e0_grid, a_grid;
    for (double e0 = spec.e0_min; e0 <= spec.e0_max + 1e-12; e0 += spec.e0_step)
        e0_grid.push_back(e0);
    for (double a = spec.a_min; a <= spec.a_max + 1e-12; a += spec.a_step) a_grid.push_back(a);
    if (e0_grid.empty() || a_grid.empty()) throw contract_violation("empty search grid");

    ProfileCache profiles(modes, spec.accuracy);

    // Precompute the per-amplitude profiles in parallel; grid scoring is then cheap.
    const int workers = std::max(1, spec.workers);
    if (workers > 1 && a_grid.size() > 1) {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        const int pool_size = static_cast<int>(std::min<std::size_t>(workers, a_grid.size()));
        for (int t = 0; t < pool_size; ++t)
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < a_grid.size(); i = next.fetch_add(1))
                    profiles.at(a_grid[i]);
            });
        for (auto& th : pool) th.join();
    }

    GainPoint best;
    bool have_best = false;
    for (double a : a_grid) {
        for (double e0 : e0_grid) {
            GainPoint point = evaluate(modes, e0, a, transmittance, eta, profiles);
            if (!have_best || point.gain_raw > best.gain_raw) {
                best = point;
                have_best = true;
            }
        }
    }

    // Compass refinement with step halving down to refine_step.
    double step = std::min(spec.e0_step, spec.a_step) * 0.5;
    double e0 = best.thresholds[0], a = best.amplitudes[0];
    int budget = 20000;
    while (step >= spec.refine_step && budget-- > 0) {
        bool improved = false;
        const double candidates[4][2] = {
            {e0 + step, a}, {e0 - step, a}, {e0, a + step}, {e0, a - step}};
        for (const auto& c : candidates) {
            const double ce0 = std::clamp(c[0], spec.e0_min, spec.e0_max);
            const double ca = std::clamp(c[1], spec.a_min, spec.a_max);
            GainPoint point = evaluate(modes, ce0, ca, transmittance, eta, profiles);
            if (point.gain_raw > best.gain_raw) {
                best = point;
                e0 = ce0;
                a = ca;
                improved = true;
            }
        }
        if (!improved) step *= 0.5;
    }
    return best;
}

std::vector<Table1Row> compute_gain_table(double eta, const std::vector<double>& losses,
                                          const SearchSpec& spec, int max_modes, int workers) {
    if (max_modes < 1 || max_modes > 3) throw contract_violation("table supports 1..3 modes");
    std::vector<Table1Row> rows(losses.size());
    struct Cell {
        std::size_t row;
        int modes;
    };
    std::vector<Cell> cells;
    for (std::size_t r = 0; r < losses.size(); ++r) {
        rows[r].loss = losses[r];
        rows[r].distance_km = loss_to_distance(losses[r]);
        rows[r].gains.resize(max_modes);
        for (int n = 1; n <= max_modes; ++n) cells.push_back({r, n});
    }
    auto run_cell = [&](const Cell& cell) {
        const double transmittance = 1.0 - losses[cell.row];
        rows[cell.row].gains[cell.modes - 1] = optimize_gain(cell.modes, transmittance, eta, spec);
    };
    if (workers <= 1) {
        for (const auto& cell : cells) run_cell(cell);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        const int pool_size = static_cast<int>(std::min<std::size_t>(workers, cells.size()));
        for (int t = 0; t < pool_size; ++t)
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < cells.size(); i = next.fetch_add(1))
                    run_cell(cells[i]);
            });
        for (auto& th : pool) th.join();
    }
    return rows;
}

}  // namespace cvqkd
