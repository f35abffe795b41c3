#pragma once

#include "domlab/optimality.hpp"

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace domlab {

struct SynthesisDiagnostics {
    std::vector<std::pair<int, int>> undefined_pairs;  // over the whole grid
    int undefined_in_range = 0;   // restricted to the metrics state range
    std::vector<double> max_jump_per_action;  // over adjacent defined states in range
    double max_jump = 0.0;
    bool continuous = false;      // defined on the range and max_jump <= jump_tol
    int support_violations = 0;   // entries whose nearest grid point has zero probability
    double jump_tol = 0.0;
};

struct SynthesizedModel {
    DeterministicModel model;
    SynthesisDiagnostics diagnostics;

    /// Copy with the no-root pairs force-marked defined; their f already
    /// holds the best-achievable support point, so a partial model can still
    /// induce an MDP when its holes lie outside the region of interest.
    DeterministicModel completed() const;
};

struct SynthesisOptions {
    /// Continuity threshold for adjacent-state jumps; <= 0 picks 4.25 grid
    /// cells, between the steepest smooth transition observed at the fold
    /// (about 4.0 cells per cell) and the smallest genuine branch flip.
    double jump_tol = -1.0;
    double root_tol = 1e-10;
    int threads = 1;
    /// State range for the definedness/continuity metrics (NaN = full grid).
    /// The model itself is always synthesized over the whole grid.
    double metrics_lo = std::numeric_limits<double>::quiet_NaN();
    double metrics_hi = std::numeric_limits<double>::quiet_NaN();
};

/**
 * Deterministic model solving the constant-shift sufficient condition inside
 * the true-dynamics support: for each (s, a) finds f with
 * V*_interp(f) = E_true[V*(next)|s,a] - delta over the support interval.
 * Among multiple roots the one closest to the kernel mean wins (ties toward
 * the lower value). Pairs with no root stay undefined and are reported in the
 * diagnostics; a partial model is a legal outcome, not an error. Negative
 * delta values push predictions toward higher-value states; the gap/jump/
 * continuous regimes appear on that side for the battery scenarios.
 */
SynthesizedModel synthesize_model(const Mdp& true_mdp, const Solution& true_solution,
                                  double delta, const SynthesisOptions& options = {});

struct SweepRow {
    double delta = 0.0;
    int undefined_count = 0;
    double max_jump = 0.0;
    bool continuous = false;
    double agreement_fraction = 0.0;  // NaN when the model is partial
};

struct SweepOptions {
    SynthesisOptions synthesis;
    SolveOptions solve;
    /// Agreement tolerance; NaN picks rounding_tie_tol over the range.
    double tie_tol = std::numeric_limits<double>::quiet_NaN();
    /// State range for the metrics and agreement columns; NaN bounds mean the
    /// full grid.
    double range_lo = std::numeric_limits<double>::quiet_NaN();
    double range_hi = std::numeric_limits<double>::quiet_NaN();
};

/// Synthesizes one model per delta and summarizes diagnostics plus the
/// induced-policy agreement against the true solution.
std::vector<SweepRow> sweep_delta(const Mdp& true_mdp, const Solution& true_solution,
                                  std::span<const double> deltas,
                                  const SweepOptions& options = {});

enum class ModelFamily {
    affine,     // f = theta0*s + theta1*a + theta2
    pw_affine,  // one slope breakpoint in s:
                // f = theta4 + theta2*a + theta0*min(s-theta3,0) + theta1*max(s-theta3,0)
};

int family_dim(ModelFamily family);
std::string family_name(ModelFamily family);
ModelFamily family_from_name(const std::string& name);

struct ParametricModel {
    ModelFamily family = ModelFamily::affine;
    std::vector<double> theta;

    double eval(double s, double a) const;
};

/// Tabulates the family on the grids, clamped to the state bounds.
DeterministicModel to_deterministic(const ParametricModel& model, const StateGrid& states,
                                    const ActionGrid& actions);

/// Least-squares affine fit of a fully defined model field (closed form).
ParametricModel affine_least_squares(const DeterministicModel& field, const StateGrid& states,
                                     const ActionGrid& actions);

/// Embeds affine parameters into a family (identity for affine; for
/// pw_affine both slopes start equal with the breakpoint at mid-domain).
ParametricModel embed_affine(ModelFamily family, const ParametricModel& affine,
                             const StateGrid& states);

struct ConstrainedFitReport {
    double data_loss = 0.0;     // mean squared prediction error on the dataset
    double penalty_loss = 0.0;  // mean squared residual deviation from delta_bar
    double delta_bar = 0.0;
    long evaluations = 0;
};

struct ConstrainedFitOptions {
    long cycles = 80;
    double init_step = 0.25;
};

/**
 * Penalty-form constrained fit: minimizes
 *   data_loss(theta) + penalty_weight * mean_(s,a) (residual(theta; s,a) - delta_bar)^2
 * by deterministic coordinate descent with a fixed cycle budget, where
 * residual is the sufficient-condition field of the parametric model and
 * delta_bar is its mean when delta_free, otherwise 0.
 */
std::pair<ParametricModel, ConstrainedFitReport> constrained_fit(
    const TransitionDataset& data, const Mdp& true_mdp, const Solution& true_solution,
    ModelFamily family, double penalty_weight, bool delta_free,
    const ConstrainedFitOptions& options = {});

enum class TuneObjective {
    closed_loop_return,  // J of the model-induced policy on the true MDP
    q_matching,          // negative mean squared error between Q* and the model's Q
};

struct TunePoint {
    long sweep = 0;
    std::vector<double> theta;
    double objective = 0.0;
};

struct FineTuneResult {
    ParametricModel model;
    std::vector<TunePoint> trace;  // accepted iterates, objective non-decreasing
    double initial_objective = 0.0;
    double final_objective = 0.0;
};

struct FineTuneOptions {
    TuneObjective objective = TuneObjective::closed_loop_return;
    double init_step = 0.1;
    double min_step = 1e-6;
    /// Initial-state interval for the closed-loop average (uniform over grid points).
    double init_lo = 0.0;
    double init_hi = 1.0;
    SolveOptions solve;
};

/**
 * Derivative-free pattern search over theta: each budget unit evaluates the
 * +/- step perturbations of every coordinate and moves to the best strictly
 * improving neighbor, halving the step when none improves. The trace records
 * theta0 and every accepted iterate.
 */
FineTuneResult fine_tune(ModelFamily family, std::vector<double> theta0, const Mdp& true_mdp,
                         long budget, const FineTuneOptions& options = {});

} // namespace domlab
