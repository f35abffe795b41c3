#include "domlab/mdp.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace domlab {

TransitionKernel::TransitionKernel(int n_states, int n_actions)
    : n_states_(n_states), n_actions_(n_actions),
      rows_(static_cast<std::size_t>(n_states) * n_actions) {
    if (n_states < 1 || n_actions < 1)
        throw std::invalid_argument("TransitionKernel: empty shape");
}

std::size_t TransitionKernel::row_index(int s, int a) const {
    if (s < 0 || s >= n_states_ || a < 0 || a >= n_actions_)
        throw std::out_of_range("TransitionKernel: row index out of range");
    return static_cast<std::size_t>(s) * n_actions_ + a;
}

void TransitionKernel::set_row(int s, int a, std::vector<KernelEntry> entries) {
    std::vector<KernelEntry> kept;
    kept.reserve(entries.size());
    int last = -1;
    for (const auto& e : entries) {
        if (e.next < 0 || e.next >= n_states_)
            throw std::out_of_range("TransitionKernel: next-state index out of range");
        if (e.next <= last)
            throw std::invalid_argument("TransitionKernel: row entries must be sorted and unique");
        if (e.prob < 0.0)
            throw std::invalid_argument("TransitionKernel: negative probability");
        last = e.next;
        if (e.prob > 0.0) kept.push_back(e);
    }
    rows_[row_index(s, a)] = std::move(kept);
}

std::span<const KernelEntry> TransitionKernel::row(int s, int a) const {
    return rows_[row_index(s, a)];
}

double TransitionKernel::prob(int s, int a, int next) const {
    for (const auto& e : rows_[row_index(s, a)])
        if (e.next == next) return e.prob;
    return 0.0;
}

double TransitionKernel::mean_next(const StateGrid& grid, int s, int a) const {
    double acc = 0.0;
    for (const auto& e : rows_[row_index(s, a)]) acc += e.prob * grid[e.next];
    return acc;
}

std::pair<int, int> TransitionKernel::support_bounds(int s, int a) const {
    const auto& r = rows_[row_index(s, a)];
    if (r.empty()) throw std::invalid_argument("TransitionKernel: empty row");
    return {r.front().next, r.back().next};
}

void TransitionKernel::validate() const {
    for (int s = 0; s < n_states_; ++s) {
        for (int a = 0; a < n_actions_; ++a) {
            double sum = 0.0;
            for (const auto& e : rows_[row_index(s, a)]) {
                if (!(e.prob >= 0.0))
                    throw std::invalid_argument("TransitionKernel: negative probability");
                sum += e.prob;
            }
            if (std::abs(sum - 1.0) > 1e-9)
                throw std::invalid_argument(
                    "TransitionKernel: row (" + std::to_string(s) + "," + std::to_string(a) +
                    ") sums to " + std::to_string(sum));
        }
    }
}

void RewardTable::validate() const {
    for (double v : values.data())
        if (!std::isfinite(v)) throw std::invalid_argument("RewardTable: non-finite entry");
    if (!(penalty_coeff >= 0.0))
        throw std::invalid_argument("RewardTable: penalty_coeff must be >= 0");
}

void Mdp::validate() const {
    if (!(gamma > 0.0 && gamma < 1.0))
        throw std::invalid_argument("Mdp: gamma must lie in (0, 1)");
    if (kernel.n_states() != states.size() || kernel.n_actions() != actions.size())
        throw std::invalid_argument("Mdp: kernel shape does not match grids");
    if (reward.values.rows() != states.size() || reward.values.cols() != actions.size())
        throw std::invalid_argument("Mdp: reward shape does not match grids");
    reward.validate();
    kernel.validate();
}

} // namespace domlab
