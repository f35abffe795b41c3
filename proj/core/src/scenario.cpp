#include "domlab/scenario.hpp"

#include "domlab/solve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace domlab {

namespace {

double boundary_distance(double s, double lo, double hi) {
    if (s < lo) return lo - s;
    if (s > hi) return s - hi;
    return 0.0;
}

DeterministicModel clamped_mean_model(const StateGrid& states, const ActionGrid& actions,
                                      const std::function<double(double, double)>& mean) {
    auto model = DeterministicModel::make(states.size(), actions.size());
    for (int s = 0; s < states.size(); ++s)
        for (int a = 0; a < actions.size(); ++a)
            model.f(s, a) = states.clamp(mean(states[s], actions[a]));
    return model;
}

ScenarioBundle battery_scenario(const std::string& name, double domain_lo, double domain_hi,
                                double sigma, double trunc,
                                const std::function<double(double, double)>& reward_fn,
                                int states, int actions, int noise_nodes) {
    if (states < 3 || actions < 3) throw std::invalid_argument(name + ": counts must be >= 3");
    ScenarioBundle bundle;
    bundle.name = name;
    bundle.report_range = {0.0, 1.0};

    const auto grid = StateGrid::uniform(domain_lo, domain_hi, states);
    const auto acts = ActionGrid::uniform(-0.25, 0.25, actions);
    const auto pmf = truncated_gaussian_pmf(sigma, trunc, noise_nodes);
    const auto mean = [](double s, double a) { return s + a; };

    constexpr double kPenalty = 100.0;
    RewardTable reward;
    reward.penalty_coeff = kPenalty;
    reward.values = Table(states, actions);
    for (int i = 0; i < states; ++i)
        for (int j = 0; j < actions; ++j)
            reward.values(i, j) =
                reward_fn(grid[i], acts[j]) - kPenalty * boundary_distance(grid[i], 0.0, 1.0);

    bundle.mdp = Mdp{grid, acts, build_drift_kernel(grid, acts, mean, pmf), reward, 0.99};
    bundle.nominal_model = clamped_mean_model(grid, acts, mean);
    return bundle;
}

} // namespace

std::vector<std::pair<double, double>> truncated_gaussian_pmf(double sigma, double trunc,
                                                              int nodes) {
    if (nodes < 1 || nodes % 2 == 0)
        throw std::invalid_argument("truncated_gaussian_pmf: nodes must be odd and positive");
    if (!(sigma > 0.0) || !(trunc > 0.0))
        throw std::invalid_argument("truncated_gaussian_pmf: sigma and trunc must be > 0");
    std::vector<std::pair<double, double>> pmf(nodes);
    const double step = nodes == 1 ? 0.0 : 2.0 * trunc / (nodes - 1);
    double total = 0.0;
    for (int k = 0; k < nodes; ++k) {
        const double w = -trunc + k * step;
        const double density = std::exp(-0.5 * (w / sigma) * (w / sigma));
        pmf[k] = {w, density};
        total += density;
    }
    for (auto& [w, p] : pmf) p /= total;
    return pmf;
}

TransitionKernel build_drift_kernel(const StateGrid& states, const ActionGrid& actions,
                                    const std::function<double(double, double)>& mean,
                                    const std::vector<std::pair<double, double>>& noise_pmf) {
    TransitionKernel kernel(states.size(), actions.size());
    std::vector<double> acc(states.size());
    for (int s = 0; s < states.size(); ++s) {
        for (int a = 0; a < actions.size(); ++a) {
            std::fill(acc.begin(), acc.end(), 0.0);
            const double base = mean(states[s], actions[a]);
            for (const auto& [w, p] : noise_pmf) {
                const double x = states.clamp(base + w);
                int cell = static_cast<int>(std::floor((x - states.lo()) / states.spacing()));
                cell = std::min(std::max(cell, 0), states.size() - 2);
                const double t = (x - states[cell]) / (states[cell + 1] - states[cell]);
                acc[cell] += p * (1.0 - t);
                acc[cell + 1] += p * t;
            }
            double total = 0.0;
            for (double p : acc) total += p;
            std::vector<KernelEntry> entries;
            for (int next = 0; next < states.size(); ++next)
                if (acc[next] > 0.0) entries.push_back({next, acc[next] / total});
            kernel.set_row(s, a, std::move(entries));
        }
    }
    return kernel;
}

ScenarioBundle battery_case1(int states, int actions, int noise_nodes) {
    return battery_scenario(
        "battery1", -0.35, 1.35, 0.05, 0.05,
        [](double, double a) { return a <= 0.0 ? -a : -2.0 * a; }, states, actions, noise_nodes);
}

ScenarioBundle battery_case2(int states, int actions, int noise_nodes) {
    return battery_scenario(
        "battery2", -0.55, 1.55, 0.1, 0.25,
        [](double s, double a) { return -std::abs(s - 0.5) - std::abs(a); }, states, actions,
        noise_nodes);
}

ScenarioBundle lqr_scenario(const LqrParams& params) {
    if (!(params.r_cost > 0.0) || params.q < 0.0)
        throw std::invalid_argument("lqr_scenario: need q >= 0 and r_cost > 0");
    if (!(params.gamma > 0.0 && params.gamma < 1.0))
        throw std::invalid_argument("lqr_scenario: gamma must lie in (0, 1)");

    // discounted scalar Riccati fixed point
    LqrClosedForm cf;
    const double g = params.gamma, A = params.a_coef, B = params.b_coef;
    double p = params.q;
    constexpr long kMaxIter = 100000;
    constexpr double kTol = 1e-14;
    for (cf.iterations = 1; cf.iterations <= kMaxIter; ++cf.iterations) {
        const double gain_num = g * A * B * p;
        const double denom = params.r_cost + g * B * B * p;
        const double next = params.q + g * A * A * p - gain_num * gain_num / denom;
        cf.residual = std::abs(next - p);
        p = next;
        if (cf.residual <= kTol) break;
    }
    if (cf.residual > kTol)
        throw SolveError("lqr_scenario: Riccati iteration did not converge", cf.residual,
                         cf.iterations);
    cf.p = p;
    cf.gain = g * A * B * p / (params.r_cost + g * B * B * p);

    ScenarioBundle bundle;
    bundle.name = "lqr";
    bundle.closed_form = cf;
    const double span = params.state_hi - params.state_lo;
    bundle.report_range = {params.state_lo + 0.2 * span, params.state_hi - 0.2 * span};

    const auto grid = StateGrid::uniform(params.state_lo, params.state_hi, params.states);
    const auto acts = ActionGrid::uniform(params.action_lo, params.action_hi, params.actions);
    const auto pmf = truncated_gaussian_pmf(params.sigma, params.noise_trunc, params.noise_nodes);
    const auto mean = [A, B](double s, double u) { return A * s + B * u; };

    RewardTable reward;
    reward.values = Table(params.states, params.actions);
    for (int i = 0; i < params.states; ++i)
        for (int j = 0; j < params.actions; ++j)
            reward.values(i, j) =
                -params.q * grid[i] * grid[i] - params.r_cost * acts[j] * acts[j];

    bundle.mdp = Mdp{grid, acts, build_drift_kernel(grid, acts, mean, pmf), reward,
                     params.gamma};
    bundle.nominal_model = clamped_mean_model(grid, acts, mean);
    return bundle;
}

Mdp random_mdp(std::uint64_t seed, int n_states, int n_actions) {
    // the state-grid invariant demands at least 2 points
    if (n_states < 2 || n_actions < 1)
        throw std::invalid_argument("random_mdp: need >= 2 states and >= 1 action");
    if (n_states > 12 || n_actions > 5)
        throw std::invalid_argument("random_mdp: at most 12 states and 5 actions");
    std::mt19937_64 rng(seed);
    const auto uniform01 = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };

    TransitionKernel kernel(n_states, n_actions);
    std::vector<KernelEntry> entries(n_states);
    for (int s = 0; s < n_states; ++s) {
        for (int a = 0; a < n_actions; ++a) {
            // exponential draws normalized to the simplex
            double total = 0.0;
            for (int next = 0; next < n_states; ++next) {
                const double e = -std::log(1.0 - uniform01());
                entries[next] = {next, e};
                total += e;
            }
            std::vector<KernelEntry> row(entries);
            for (auto& e : row) e.prob /= total;
            kernel.set_row(s, a, std::move(row));
        }
    }
    RewardTable reward;
    reward.values = Table(n_states, n_actions);
    for (int s = 0; s < n_states; ++s)
        for (int a = 0; a < n_actions; ++a) reward.values(s, a) = -uniform01();

    // states live on a unit grid; values are placeholders for index-based use
    const auto grid = StateGrid::uniform(0.0, 1.0, n_states);
    std::vector<double> action_points(n_actions);
    for (int a = 0; a < n_actions; ++a) action_points[a] = a;
    return Mdp{grid, ActionGrid::from_points(std::move(action_points)), std::move(kernel),
               std::move(reward), 0.9};
}

ScenarioBundle make_scenario(const std::string& name, const ScenarioOverrides& overrides) {
    const auto states = [&](int fallback) { return overrides.states.value_or(fallback); };
    const auto actions = [&](int fallback) { return overrides.actions.value_or(fallback); };
    const auto nodes = [&](int fallback) { return overrides.noise_nodes.value_or(fallback); };

    if (name == "battery1") return battery_case1(states(201), actions(51), nodes(33));
    if (name == "battery2") return battery_case2(states(201), actions(51), nodes(33));
    if (name == "lqr") {
        LqrParams params;
        params.states = states(params.states);
        params.actions = actions(params.actions);
        params.noise_nodes = nodes(params.noise_nodes);
        return lqr_scenario(params);
    }
    if (name.rfind("random:", 0) == 0) {
        const std::string seed_str = name.substr(7);
        std::uint64_t seed = 0;
        try {
            seed = std::stoull(seed_str);
        } catch (const std::exception&) {
            throw std::invalid_argument("make_scenario: bad seed in '" + name + "'");
        }
        ScenarioBundle bundle;
        bundle.name = name;
        bundle.mdp = random_mdp(seed, states(8), actions(3));
        bundle.nominal_model = fit_expected_value(bundle.mdp);
        bundle.report_range = {bundle.mdp.states.lo(), bundle.mdp.states.hi()};
        return bundle;
    }
    throw std::invalid_argument("make_scenario: unknown scenario '" + name + "'");
}

double kink_ratio(const StateGrid& grid, std::span<const double> v, double center,
                  double win_lo, double win_hi) {
    if (static_cast<int>(v.size()) != grid.size())
        throw std::invalid_argument("kink_ratio: size mismatch");
    const int c = grid.nearest_index(center);
    if (c < 1 || c > grid.size() - 2)
        throw std::invalid_argument("kink_ratio: center too close to the boundary");
    const auto second_diff = [&](int i) { return std::abs(v[i + 1] - 2.0 * v[i] + v[i - 1]); };
    const double at_center = second_diff(c);
    std::vector<double> others;
    for (int i = 1; i < grid.size() - 1; ++i) {
        if (std::abs(i - c) <= 1) continue;
        if (grid[i] < win_lo || grid[i] > win_hi) continue;
        others.push_back(second_diff(i));
    }
    if (others.empty()) throw std::invalid_argument("kink_ratio: empty window");
    std::nth_element(others.begin(), others.begin() + others.size() / 2, others.end());
    const double median = others[others.size() / 2];
    return median > 0.0 ? at_center / median
                        : std::numeric_limits<double>::infinity();
}

} // namespace domlab
