#pragma once

#include "domlab/model.hpp"
#include "domlab/solve.hpp"

#include <limits>
#include <span>
#include <vector>

namespace domlab {

/**
 * Per-state storage offset lambda and its per-pair discounted difference
 * Lambda(s,a) = lambda(s) - gamma * E_model[lambda(next) | s,a].
 * Adding lambda to a model's values never changes its greedy policy.
 */
struct StorageField {
    std::vector<double> lambda;  // per state
    Table big_lambda;            // [state, action]
};

/**
 * Storage field matching the model's values to the true ones:
 * lambda = V* - V_model*, so the modified model value function equals V*.
 */
StorageField storage_matching(const Solution& true_solution, const Mdp& model_mdp,
                              const Solution& model_solution);

/// Model MDP with reward shifted by Lambda; its optimal values are the
/// model's shifted by lambda while policy and advantage stay unchanged.
Mdp storage_modified_mdp(const Mdp& model_mdp, const StorageField& storage);

/// Sup-norm residual of the modified Bellman identity
/// Q_model*(s,a) + lambda(s) = r(s,a) + Lambda(s,a) + gamma E_model[(V_model*+lambda)(next)].
double bellman_identity_residual(const Mdp& model_mdp, const Solution& model_solution,
                                 const StorageField& storage);

/**
 * Residual of the constant-shift sufficient condition:
 * E_true[V*(next)|s,a] - E_model[V*(next)|s,a]. For deterministic models the
 * second term is V* linearly interpolated at f(s,a). A constant residual
 * field means the model's greedy policy is optimal for the true MDP.
 */
Table delta_residual(const Mdp& true_mdp, const Solution& true_solution,
                     const StochasticModel& model);
/// Throws FitError when the model has undefined entries.
Table delta_residual(const Mdp& true_mdp, const Solution& true_solution,
                     const DeterministicModel& model);
Table delta_residual(const Mdp& true_mdp, const Solution& true_solution,
                     const PredictiveModel& model);
/// Partial variant: NaN at undefined pairs instead of failing.
Table delta_residual_partial(const Mdp& true_mdp, const Solution& true_solution,
                             const DeterministicModel& model);

/// max - min over defined (non-NaN) entries.
double field_spread(const Table& field);

/**
 * Nondecreasing function tabulated at the sorted distinct arguments of the
 * construction below, extended linearly with unit slope beyond the last
 * breakpoint. feasible means value > 0 at every tabulated x > 0.
 */
struct TabulatedK {
    std::vector<double> x;
    std::vector<double> value;
    bool feasible = false;

    double operator()(double arg) const;
};

/**
 * Constructive lower bound for the disadvantage comparison:
 * alpha0(x) = min { d_model[s,a] : d_true[s,a] >= x } tabulated at the sorted
 * distinct values of d_true. Inputs use the disadvantage convention
 * d = -advantage (entrywise >= 0, per-state minimum 0). feasible is
 * equivalent to per-state argmin-set inclusion of d_model into d_true.
 * zero_tol widens what counts as zero on both sides.
 */
TabulatedK alpha0_construct(const Table& d_true, const Table& d_model, double zero_tol = 0.0);

struct SandwichResult {
    TabulatedK alpha_side;  // bounds model disadvantage from below via true one
    TabulatedK beta_side;   // reversed roles
    bool sandwich_holds = false;
};

/**
 * Two-sided class-K sandwich between the true and model advantage tables.
 * sandwich_holds is true exactly when the per-state argmax sets of the two
 * advantage functions coincide.
 */
SandwichResult check_sandwich(const Solution& true_solution, const Solution& model_solution,
                              double zero_tol = 0.0);

/// Actions within tie_tol of the row maximum of q at state s, ascending.
std::vector<int> argmax_set(const Table& q, int s, double tie_tol = 0.0);

/// Per-state flag: the two solutions have equal argmax sets (ties within
/// tie_tol on each side). This is the exact policy-set comparison used by
/// the class-K sandwich equivalence.
std::vector<char> argmax_sets_equal(const Solution& true_solution,
                                    const Solution& model_solution, double tie_tol = 0.0);

/**
 * Per-state flag: every greedy action of the model solution is within
 * tie_tol of the true optimum (model argmax set contained in the tie_tol-
 * widened true argmax set). With tie_tol 0 this is exact subset inclusion;
 * a tolerance of about gamma * Lip(V*) * spacing absorbs the value noise a
 * nearest-grid Dirac conversion injects into otherwise-optimal models.
 */
std::vector<char> argmax_agreement(const Solution& true_solution,
                                   const Solution& model_solution, double tie_tol = 0.0);

/// Discretization-calibrated agreement tolerance:
/// gamma * max adjacent |dV*/ds| * spacing, with the slope taken over grid
/// states inside [lo, hi] (NaN bounds mean the full grid).
double rounding_tie_tol(const Mdp& mdp, const Solution& solution,
                        double lo = std::numeric_limits<double>::quiet_NaN(),
                        double hi = std::numeric_limits<double>::quiet_NaN());

double agreement_fraction(std::span<const char> agreement);
/// Fraction restricted to grid states with value in [lo, hi].
double agreement_fraction(std::span<const char> agreement, const StateGrid& grid, double lo,
                          double hi);

/**
 * States from which every k-step model rollout expectation of |v_hat| stays
 * <= bound for k < horizon, following the given policy. An all-false result
 * is legal and reported, not an error.
 */
std::vector<char> omega_check(const Mdp& model_mdp, std::span<const int> policy,
                              std::span<const double> v_hat, long horizon, double bound);
/// Convenience overload that solves the model MDP for v_hat internally.
std::vector<char> omega_check(const Mdp& model_mdp, std::span<const int> policy, long horizon,
                              double bound);

/// Outcome of auditing one predictive model against a solved true MDP.
struct ConditionReport {
    Table delta_field;
    double delta_spread = 0.0;
    std::vector<char> agreement;    // per-state argmax-set equality
    double agreement_frac = 0.0;
    TabulatedK alpha0;              // alpha side of the sandwich
    bool sandwich_holds = false;
    double value_gap = 0.0;         // sup |V of storage-modified model MDP - V*|
};

struct AuditOptions {
    SolveOptions solve;
    /// Agreement tolerance; NaN picks rounding_tie_tol over the range.
    double tie_tol = std::numeric_limits<double>::quiet_NaN();
    /// State range for agreement_frac; NaN bounds mean the full grid.
    double range_lo = std::numeric_limits<double>::quiet_NaN();
    double range_hi = std::numeric_limits<double>::quiet_NaN();
};

/// Full condition audit: solves the induced model MDP, evaluates the
/// sufficient-condition residual, argmax agreement, the class-K sandwich
/// and the storage-matched value gap.
ConditionReport audit_model(const Mdp& true_mdp, const Solution& true_solution,
                            const PredictiveModel& model, const AuditOptions& options = {});

} // namespace domlab
