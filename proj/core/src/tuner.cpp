#include "augmix/tuner.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace augmix {

namespace {

double mean_dev(const F1Vector& f) {
    double s = 0.0;
    for (double v : f) s += std::abs(v - 0.5);
    return s / 4.0;
}

double max_dev(const F1Vector& f) {
    double m = 0.0;
    for (double v : f) m = std::max(m, std::abs(v - 0.5));
    return m;
}

bool in_window(const F1Vector& f) {
    return std::all_of(f.begin(), f.end(),
                       [](double v) { return v >= 0.35 && v <= 0.65; });
}

// In-window beats out-of-window regardless of deviation (so refinement
// cannot walk the best config outside [0.35, 0.65]); then the tie chain:
// mean deviation, max deviation, smaller alpha, fewer expected augs.
bool better(const EvaluatedConfig& a, const EvaluatedConfig& b) {
    bool wa = in_window(a.f1), wb = in_window(b.f1);
    if (wa != wb) return wa;
    if (std::abs(a.deviation - b.deviation) > 1e-12) return a.deviation < b.deviation;
    double ma = max_dev(a.f1), mb = max_dev(b.f1);
    if (std::abs(ma - mb) > 1e-12) return ma < mb;
    if (std::abs(a.config.alpha.alpha - b.config.alpha.alpha) > 1e-12)
        return a.config.alpha.alpha < b.config.alpha.alpha;
    return a.config.intensity.expected_count() < b.config.intensity.expected_count();
}

std::vector<double> renormalize(std::vector<double> w) {
    double s = 0.0;
    for (double& v : w) {
        v = std::min(std::max(v, 0.0), 1.0);
        s += v;
    }
    if (s <= 0.0) return {};
    for (double& v : w) v /= s;
    return w;
}

}  // namespace

SearchSpace SearchSpace::defaults() {
    SearchSpace s;
    s.alpha_grid = {0.5, 0.6, 0.7, 0.8, 0.9, 0.95};
    for (int a = 0; a <= 2; ++a)
        for (int step = 0; step <= 10; ++step) {
            double w0 = 1.0 - 0.1 * step;
            s.candidate_intensities.push_back({{a, a + 1}, {w0, 1.0 - w0}});
        }
    s.refinement_steps = 2;
    return s;
}

TunerResult search_defense_params(
    const SearchSpace& space,
    const std::function<F1Vector(const DefenseConfig&)>& evaluate) {
    if (space.alpha_grid.empty() || space.candidate_intensities.empty())
        throw std::invalid_argument("search_defense_params: empty search space");

    TunerResult result;
    auto run = [&](const DefenseConfig& cfg) {
        EvaluatedConfig ec;
        ec.config = cfg;
        ec.f1 = evaluate(cfg);
        ec.deviation = mean_dev(ec.f1);
        result.evaluated.push_back(ec);
        return ec;
    };

    // Phase 1: full grid. better() ranks every in-window config ahead of
    // every out-of-window one, so this yields the best in-window config
    // when one exists and the global deviation minimizer otherwise.
    bool have_any = false;
    EvaluatedConfig best;
    for (double alpha : space.alpha_grid)
        for (const AugIntensity& intensity : space.candidate_intensities) {
            DefenseConfig cfg{intensity, FusionWeight{alpha}, true};
            EvaluatedConfig ec = run(cfg);
            if (!have_any || better(ec, best)) {
                best = ec;
                have_any = true;
            }
        }

    // Phase 2: local refinement, keeping any improvement.
    double half_step = space.alpha_grid.size() > 1
                           ? (space.alpha_grid[1] - space.alpha_grid[0]) / 2.0
                           : 0.05;
    for (int step = 0; step < space.refinement_steps; ++step) {
        std::vector<DefenseConfig> neighbors;
        for (double da : {-half_step, half_step}) {
            double a = std::min(std::max(best.config.alpha.alpha + da, 0.0), 1.0);
            DefenseConfig c = best.config;
            c.alpha.alpha = a;
            neighbors.push_back(c);
        }
        const std::vector<double>& w = best.config.intensity.w;
        for (size_t i = 0; i < w.size(); ++i)
            for (double dw : {-0.1, 0.1}) {
                std::vector<double> wp = w;
                wp[i] += dw;
                wp = renormalize(std::move(wp));
                if (wp.empty()) continue;
                DefenseConfig c = best.config;
                c.intensity.w = wp;
                neighbors.push_back(c);
            }
        bool improved = false;
        for (const DefenseConfig& c : neighbors) {
            EvaluatedConfig ec = run(c);
            if (better(ec, best)) {
                best = ec;
                improved = true;
            }
        }
        if (!improved) break;
    }

    result.best = best.config;
    result.deviation = best.deviation;
    result.f1_vector = best.f1;
    result.in_range = in_window(best.f1);
    return result;
}

}  // namespace augmix
