#pragma once

#include "domlab/mdp.hpp"

#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace domlab {

/// Thrown when an iterative solve exhausts its iteration budget.
class SolveError : public std::runtime_error {
  public:
    SolveError(const std::string& what, double last_residual, long iterations)
        : std::runtime_error(what), last_residual(last_residual), iterations(iterations) {}
    double last_residual;
    long iterations;
};

struct SolveOptions {
    double tol = 1e-10;
    long max_iter = 200000;
    /// Worker count for the per-state Bellman sweep. Results are bitwise
    /// identical for any value; 0 picks a small automatic count.
    int threads = 1;
    /// Initial value function; empty means all zeros.
    std::vector<double> v0;
    /// Called after every sweep with (iteration, residual, current values).
    std::function<void(long, double, const std::vector<double>&)> observer;
};

/**
 * Plain value iteration to sup-norm residual <= tol.
 *
 * Ties in the greedy policy break toward the lowest action index, and
 * v_star[s] equals max_a q_star[s,a] exactly by construction, so the
 * advantage row maximum is exactly zero at the policy action.
 */
Solution solve_mdp(const Mdp& mdp, const SolveOptions& options = {});

/// Fixed-point evaluation of a deterministic policy to residual <= tol.
std::vector<double> evaluate_policy(const Mdp& mdp, std::span<const int> policy,
                                    double tol = 1e-10, long max_iter = 200000);

/// Sum over next states of prob * values[next], accumulated in row order.
double expected_next_value(const TransitionKernel& kernel, std::span<const double> values,
                           int s, int a);

/// Mean of values over grid points with grid value inside [lo, hi].
double mean_over_range(const StateGrid& grid, std::span<const double> values,
                       double lo, double hi);

} // namespace domlab
