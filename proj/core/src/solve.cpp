#include "domlab/solve.hpp"

#include "parallel_for.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace domlab {

double expected_next_value(const TransitionKernel& kernel, std::span<const double> values,
                           int s, int a) {
    double acc = 0.0;
    for (const auto& e : kernel.row(s, a)) acc += e.prob * values[e.next];
    return acc;
}

Solution solve_mdp(const Mdp& mdp, const SolveOptions& options) {
    mdp.validate();
    if (!(options.tol > 0.0)) throw std::invalid_argument("solve_mdp: tol must be > 0");

    const int ns = mdp.n_states();
    const int na = mdp.n_actions();
    const int threads = detail::resolve_threads(options.threads, ns);

    std::vector<double> v(ns, 0.0);
    if (!options.v0.empty()) {
        if (static_cast<int>(options.v0.size()) != ns)
            throw std::invalid_argument("solve_mdp: v0 size mismatch");
        v = options.v0;
    }
    std::vector<double> v_next(ns, 0.0);
    Table q(ns, na);
    std::vector<int> policy(ns, 0);

    double residual = 0.0;
    long iter = 0;
    bool converged = false;
    while (iter < options.max_iter) {
        ++iter;
        detail::parallel_for(ns, threads, [&](int s) {
            double best = -std::numeric_limits<double>::infinity();
            int best_a = 0;
            for (int a = 0; a < na; ++a) {
                const double qa = mdp.reward(s, a) +
                                  mdp.gamma * expected_next_value(mdp.kernel, v, s, a);
                q(s, a) = qa;
                if (qa > best) {
                    best = qa;
                    best_a = a;
                }
            }
            v_next[s] = best;
            policy[s] = best_a;
        });
        residual = 0.0;
        for (int s = 0; s < ns; ++s) residual = std::max(residual, std::abs(v_next[s] - v[s]));
        v.swap(v_next);
        if (options.observer) options.observer(iter, residual, v);
        if (residual <= options.tol) {
            converged = true;
            break;
        }
    }
    if (!converged)
        throw SolveError("solve_mdp: no convergence after " + std::to_string(iter) +
                             " iterations (residual " + std::to_string(residual) + ")",
                         residual, iter);

    // v currently holds max_a q(s,a) from the final sweep, so the Solution
    // invariants v[s] == max_a q[s,a] and advantage row max == 0 hold exactly.
    Solution sol;
    sol.v_star = std::move(v);
    sol.policy = std::move(policy);
    sol.advantage = Table(ns, na);
    for (int s = 0; s < ns; ++s)
        for (int a = 0; a < na; ++a) sol.advantage(s, a) = q(s, a) - sol.v_star[s];
    sol.q_star = std::move(q);
    sol.iterations = iter;
    sol.residual = residual;
    return sol;
}

std::vector<double> evaluate_policy(const Mdp& mdp, std::span<const int> policy,
                                    double tol, long max_iter) {
    if (static_cast<int>(policy.size()) != mdp.n_states())
        throw std::invalid_argument("evaluate_policy: policy size mismatch");
    for (int a : policy)
        if (a < 0 || a >= mdp.n_actions())
            throw std::invalid_argument("evaluate_policy: action index out of range");

    const int ns = mdp.n_states();
    std::vector<double> v(ns, 0.0), v_next(ns, 0.0);
    double residual = 0.0;
    for (long iter = 1; iter <= max_iter; ++iter) {
        residual = 0.0;
        for (int s = 0; s < ns; ++s) {
            const int a = policy[s];
            v_next[s] = mdp.reward(s, a) + mdp.gamma * expected_next_value(mdp.kernel, v, s, a);
            residual = std::max(residual, std::abs(v_next[s] - v[s]));
        }
        v.swap(v_next);
        if (residual <= tol) return v;
    }
    throw SolveError("evaluate_policy: no convergence (residual " + std::to_string(residual) + ")",
                     residual, max_iter);
}

double mean_over_range(const StateGrid& grid, std::span<const double> values,
                       double lo, double hi) {
    double acc = 0.0;
    long count = 0;
    for (int s = 0; s < grid.size(); ++s) {
        if (grid[s] >= lo && grid[s] <= hi) {
            acc += values[s];
            ++count;
        }
    }
    if (count == 0) throw std::invalid_argument("mean_over_range: empty range");
    return acc / count;
}

} // namespace domlab
