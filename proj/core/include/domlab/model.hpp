#pragma once

#include "domlab/mdp.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace domlab {

/**
 * Deterministic predictive map f(s, a) -> next-state value, possibly partial.
 * Fitted models are defined everywhere; synthesized models may leave pairs
 * undefined when the target equation has no root inside the support.
 */
struct DeterministicModel {
    Table f;                    // predicted next-state values (state units)
    std::vector<char> defined;  // row-major [state, action] mask

    bool is_defined(int s, int a) const {
        return defined[static_cast<std::size_t>(s) * f.cols() + a] != 0;
    }
    void set_defined(int s, int a, bool value) {
        defined[static_cast<std::size_t>(s) * f.cols() + a] = value ? 1 : 0;
    }
    bool fully_defined() const;
    std::vector<std::pair<int, int>> undefined_pairs() const;
    /// Defined entries must lie inside [grid.lo(), grid.hi()].
    void validate(const StateGrid& grid) const;

    static DeterministicModel make(int n_states, int n_actions);
};

/// Stochastic predictive model: a full transition kernel over the same grids.
struct StochasticModel {
    TransitionKernel kernel;
};

using PredictiveModel = std::variant<DeterministicModel, StochasticModel>;

struct TransitionRecord {
    int s;
    int a;
    int s_next;
};

struct TransitionDataset {
    std::vector<TransitionRecord> records;
    std::uint64_t seed = 0;
};

/// Thrown by fitting operations, e.g. when a dataset misses (s, a) pairs.
class FitError : public std::runtime_error {
  public:
    FitError(const std::string& what, std::vector<std::pair<int, int>> pairs)
        : std::runtime_error(what), pairs(std::move(pairs)) {}
    std::vector<std::pair<int, int>> pairs;
};

/**
 * Draws per_pair next states for every (state, action) from the kernel rows.
 * Reproducible: the same seed yields the same dataset.
 */
TransitionDataset sample_transitions(const Mdp& mdp, int per_pair, std::uint64_t seed);

/// Conditional-mean fit from the exact kernel; defined everywhere, clamped to grid bounds.
DeterministicModel fit_expected_value(const Mdp& mdp);
/// Sample-mean fit; grids/shape come from mdp, the kernel is not consulted.
/// Throws FitError listing the missing pairs when the dataset lacks coverage.
DeterministicModel fit_expected_value(const Mdp& mdp, const TransitionDataset& data);

struct MleFit {
    StochasticModel distribution;  // unconstrained tabular maximum-likelihood kernel
    DeterministicModel mode_map;   // per-row argmax probability point, low-index ties
};

MleFit fit_mle(const Mdp& mdp);
MleFit fit_mle(const Mdp& mdp, const TransitionDataset& data);

/**
 * Model-based MDP sharing the reference MDP's grids, reward and discount.
 * Deterministic models become Dirac kernels at the nearest grid point;
 * stochastic models pass their kernel through. Throws FitError naming the
 * undefined pairs of a partial deterministic model.
 */
Mdp induced_mdp(const DeterministicModel& model, const Mdp& reference);
Mdp induced_mdp(const StochasticModel& model, const Mdp& reference);
Mdp induced_mdp(const PredictiveModel& model, const Mdp& reference);

/**
 * Position-preserving variant: each prediction becomes a two-node row over
 * the grid cell bracketing f(s, a), weighted so the row mean equals f
 * exactly. Expectations of grid functions under such rows coincide with
 * their linear interpolation at f, so a model synthesized against the
 * interpolated value function keeps its residual intact after induction.
 * Nearest-point rounding instead injects up to half a cell of position
 * error, which the greedy fixed point can amplify into genuine policy
 * suboptimality.
 */
Mdp induced_mdp_interp(const DeterministicModel& model, const Mdp& reference);

} // namespace domlab
