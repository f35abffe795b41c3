#pragma once

#include "domlab/model.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace domlab {

/// Discounted scalar Riccati fixed point and the resulting gain, u*(s) = -gain * s.
struct LqrClosedForm {
    double p = 0.0;
    double gain = 0.0;
    double residual = 0.0;  // fixed-point residual of p
    long iterations = 0;
};

/// A named MDP bundled with its conditional-mean model and, for LQR, the
/// closed-form reference solution.
struct ScenarioBundle {
    std::string name;
    Mdp mdp;
    DeterministicModel nominal_model;  // conditional mean of the dynamics, clamped
    std::optional<LqrClosedForm> closed_form;
    /// State interval of interest for agreement metrics (defaults to the full grid).
    std::pair<double, double> report_range;
};

/// Gaussian density evaluated at `nodes` evenly spaced offsets spanning
/// [-trunc, trunc], renormalized to sum 1. nodes must be odd.
std::vector<std::pair<double, double>> truncated_gaussian_pmf(double sigma, double trunc,
                                                              int nodes);

/// Kernel rows built by pushing mean(s, a) + noise offsets through the grid.
/// Each offset's mass is clamped into the domain and split linearly between
/// the two bracketing grid points, so rows are exactly stochastic, supports
/// are contiguous intervals and interior row means are exact. (Rounding every
/// offset to its single nearest point instead leaves zero-probability holes
/// inside the support whenever the noise step is incommensurate with the
/// grid, which breaks the connected-support premise of model synthesis.)
TransitionKernel build_drift_kernel(const StateGrid& states, const ActionGrid& actions,
                                    const std::function<double(double, double)>& mean,
                                    const std::vector<std::pair<double, double>>& noise_pmf);

/**
 * Energy-storage problem with asymmetric buy/sell prices: dynamics
 * s+ = s + a + w, reward -a for a <= 0 and -2a for a > 0, boundary penalty
 * -100 * dist(s, [0,1]), gamma 0.99, noise sigma 0.05 truncated to
 * [-0.05, 0.05]. States span [-0.35, 1.35].
 */
ScenarioBundle battery_case1(int states = 201, int actions = 51, int noise_nodes = 33);

/**
 * Energy-storage problem with the non-smooth reward -|s - 1/2| - |a| and the
 * same boundary penalty; noise sigma 0.1 truncated to [-0.25, 0.25]. States
 * span [-0.55, 1.55]. Its optimal value function has a kink at s = 0.5.
 */
ScenarioBundle battery_case2(int states = 201, int actions = 51, int noise_nodes = 33);

struct LqrParams {
    double a_coef = 1.0;
    double b_coef = 1.0;
    double q = 1.0;
    double r_cost = 1.0;
    double sigma = 0.05;
    double noise_trunc = 0.15;
    double gamma = 0.99;
    double state_lo = -1.0;
    double state_hi = 1.0;
    double action_lo = -0.5;
    double action_hi = 0.5;
    int states = 401;
    int actions = 51;
    int noise_nodes = 33;
};

/// Linear dynamics s+ = a_coef*s + b_coef*u + w with reward -q*s^2 - r_cost*u^2.
/// closed_form carries the discounted Riccati solution; throws SolveError if
/// the Riccati iteration does not converge.
ScenarioBundle lqr_scenario(const LqrParams& params = {});

/// Seed-reproducible MDP with flat-simplex kernel rows, rewards uniform in
/// [-1, 0] and gamma 0.9. Bounded to at most 12 states and 5 actions.
Mdp random_mdp(std::uint64_t seed, int n_states = 8, int n_actions = 3);

struct ScenarioOverrides {
    std::optional<int> states;
    std::optional<int> actions;
    std::optional<int> noise_nodes;
};

/// Builds "battery1", "battery2", "lqr" or "random:<seed>".
/// Throws std::invalid_argument for unknown names.
ScenarioBundle make_scenario(const std::string& name, const ScenarioOverrides& overrides = {});

/// Ratio of the central second difference of v at `center` to the median
/// second difference over grid states inside [win_lo, win_hi] (excluding a
/// neighborhood of center). Large values flag a kink.
double kink_ratio(const StateGrid& grid, std::span<const double> v, double center,
                  double win_lo, double win_hi);

} // namespace domlab
