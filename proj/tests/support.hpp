#pragma once

#include "domlab/scenario.hpp"
#include "domlab/solve.hpp"

#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace domlab::testing {

/// Every state absorbing with the same reward; V* = r/(1-gamma) at each state.
inline Mdp absorbing_mdp(double reward, double gamma, int n_states = 2, int n_actions = 1) {
    TransitionKernel kernel(n_states, n_actions);
    for (int s = 0; s < n_states; ++s)
        for (int a = 0; a < n_actions; ++a) kernel.set_row(s, a, {{s, 1.0}});
    RewardTable r;
    r.values = Table(n_states, n_actions, reward);
    return Mdp{StateGrid::uniform(0.0, 1.0, n_states), ActionGrid::uniform(0.0, 1.0, n_actions),
               std::move(kernel), std::move(r), gamma};
}

/// Deterministic two-state chain 0 -> 1 -> 1 with zero reward everywhere.
inline Mdp zero_chain_mdp() {
    TransitionKernel kernel(2, 1);
    kernel.set_row(0, 0, {{1, 1.0}});
    kernel.set_row(1, 0, {{1, 1.0}});
    RewardTable r;
    r.values = Table(2, 1, 0.0);
    return Mdp{StateGrid::uniform(0.0, 1.0, 2), ActionGrid::uniform(0.0, 1.0, 1),
               std::move(kernel), std::move(r), 0.9};
}

/// Dynamics frozen at the current state regardless of action.
inline Mdp frozen_dynamics_mdp(int n_states = 11, int n_actions = 3, double gamma = 0.9) {
    TransitionKernel kernel(n_states, n_actions);
    for (int s = 0; s < n_states; ++s)
        for (int a = 0; a < n_actions; ++a) kernel.set_row(s, a, {{s, 1.0}});
    const auto grid = StateGrid::uniform(0.0, 1.0, n_states);
    RewardTable r;
    r.values = Table(n_states, n_actions);
    for (int s = 0; s < n_states; ++s)
        for (int a = 0; a < n_actions; ++a)
            r.values(s, a) = -(grid[s] - 0.3) * (grid[s] - 0.3);
    return Mdp{grid, ActionGrid::uniform(-0.1, 0.1, n_actions), std::move(kernel), std::move(r),
               gamma};
}

/// Kernel rows multiplied by exp(magnitude * normal noise) and renormalized.
inline Mdp perturb_kernel(const Mdp& mdp, std::uint64_t seed, double magnitude) {
    std::mt19937_64 rng(seed);
    const auto uniform01 = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
    const auto gauss = [&] {
        // Box-Muller on explicit uniforms keeps draws implementation-independent
        const double u1 = std::max(uniform01(), 1e-300);
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    };
    Mdp out = mdp;
    TransitionKernel kernel(mdp.n_states(), mdp.n_actions());
    for (int s = 0; s < mdp.n_states(); ++s) {
        for (int a = 0; a < mdp.n_actions(); ++a) {
            std::vector<KernelEntry> row;
            double total = 0.0;
            for (const auto& e : mdp.kernel.row(s, a)) {
                const double p = e.prob * std::exp(magnitude * gauss());
                row.push_back({e.next, p});
                total += p;
            }
            for (auto& e : row) e.prob /= total;
            kernel.set_row(s, a, std::move(row));
        }
    }
    out.kernel = std::move(kernel);
    return out;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

} // namespace domlab::testing
