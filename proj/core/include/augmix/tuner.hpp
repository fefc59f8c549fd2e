#pragma once

#include <array>
#include <functional>
#include <vector>

#include "augmix/defense.hpp"

namespace augmix {

struct SearchSpace {
    std::vector<double> alpha_grid;  // ascending, in [0,1]
    std::vector<AugIntensity> candidate_intensities;
    int refinement_steps = 2;

    /// Table-derived defaults: alpha in {0.5..0.9}, n = [a, a+1] for
    /// a in {0,1,2} with weights stepping from [1,0] to [0,1] by 0.1.
    static SearchSpace defaults();
};

using F1Vector = std::array<double, 4>;  // binary, m1, m2, m3

struct EvaluatedConfig {
    DefenseConfig config;
    F1Vector f1;
    double deviation = 0.0;
};

struct TunerResult {
    DefenseConfig best;
    double deviation = 0.0;  // mean |F1 - 0.5|
    F1Vector f1_vector{};
    bool in_range = false;  // all four F1 in [0.35, 0.65]
    std::vector<EvaluatedConfig> evaluated;  // every call, in order
};

/// Grid search over (alpha, intensity), keeping configs whose four F1 values
/// fall in [0.35, 0.65] and minimizing mean deviation from 0.5, then a local
/// refinement around the best config. Falls back to the global minimizer
/// (in_range = false) when no config lands in the window.
TunerResult search_defense_params(
    const SearchSpace& space,
    const std::function<F1Vector(const DefenseConfig&)>& evaluate);

}  // namespace augmix
