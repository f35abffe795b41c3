#pragma once

#include "domlab/grid.hpp"
#include "domlab/table.hpp"

#include <span>
#include <utility>
#include <vector>

namespace domlab {

struct KernelEntry {
    int next;
    double prob;
};

/**
 * Transition probabilities indexed by [state, action, next state].
 * Rows are stored compressed (only entries with positive probability),
 * sorted by next-state index; expectations accumulate in that fixed order,
 * which keeps results bitwise reproducible.
 */
class TransitionKernel {
  public:
    TransitionKernel() = default;
    TransitionKernel(int n_states, int n_actions);

    int n_states() const { return n_states_; }
    int n_actions() const { return n_actions_; }

    /// Entries must be sorted by next index, unique, with prob >= 0.
    /// Zero-probability entries are dropped.
    void set_row(int s, int a, std::vector<KernelEntry> entries);
    std::span<const KernelEntry> row(int s, int a) const;

    /// Probability of a specific next state (0 when absent from the row).
    double prob(int s, int a, int next) const;
    /// Conditional mean of the next-state value under the row distribution.
    double mean_next(const StateGrid& grid, int s, int a) const;
    /// First and last next-state index carrying positive probability.
    std::pair<int, int> support_bounds(int s, int a) const;

    /// Checks: all probabilities >= 0, every row sums to 1 within 1e-9.
    void validate() const;

  private:
    std::size_t row_index(int s, int a) const;
    int n_states_ = 0;
    int n_actions_ = 0;
    std::vector<std::vector<KernelEntry>> rows_;
};

struct RewardTable {
    Table values;                // [state, action]
    double penalty_coeff = 0.0;  // out-of-bounds penalty used by scenario builders

    double operator()(int s, int a) const { return values(s, a); }
    /// All entries must be finite.
    void validate() const;
};

/// Discretized stochastic decision process (states, actions, kernel, reward, discount).
struct Mdp {
    StateGrid states;
    ActionGrid actions;
    TransitionKernel kernel;
    RewardTable reward;
    double gamma = 0.0;

    int n_states() const { return states.size(); }
    int n_actions() const { return actions.size(); }
    /// Checks 0 < gamma < 1 and mutually consistent table dimensions.
    void validate() const;
};

/// Exact solution of an Mdp as produced by solve_mdp.
struct Solution {
    std::vector<double> v_star;    // per state
    Table q_star;                  // [state, action]
    std::vector<int> policy;       // per state, lowest argmax index
    Table advantage;               // q_star - v_star, row max is 0
    long iterations = 0;
    double residual = 0.0;         // final sup-norm Bellman residual
};

} // namespace domlab
