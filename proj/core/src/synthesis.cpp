#include "domlab/synthesis.hpp"

#include "parallel_for.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

namespace domlab {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

/// Root of V*_interp(x) = target inside the cell [x_lo, x_hi] bracketed by
/// g_lo = V*(x_lo) - target and g_hi of opposite sign; bisection to width tol.
double bisect_cell(const StateGrid& grid, std::span<const double> v, double target,
                   double x_lo, double x_hi, double g_lo, double tol) {
    while (x_hi - x_lo > tol) {
        const double mid = 0.5 * (x_lo + x_hi);
        const double g_mid = grid.interpolate(v, mid) - target;
        if (g_mid == 0.0) return mid;
        if ((g_lo < 0.0) == (g_mid < 0.0)) {
            x_lo = mid;
            g_lo = g_mid;
        } else {
            x_hi = mid;
        }
    }
    return 0.5 * (x_lo + x_hi);
}

struct PairRoot {
    bool found = false;
    double value = 0.0;     // exact root, or the best-achievable fallback
};

/// Roots of V*_interp = target whose nearest grid node carries positive
/// probability; scanning runs over the support span, the admissibility
/// filter drops roots that would land in interior holes of a sparse row.
PairRoot select_root(const Mdp& mdp, std::span<const double> v, int s, int a, double target,
                     double tol) {
    const StateGrid& grid = mdp.states;
    const auto [support_lo, support_hi] = mdp.kernel.support_bounds(s, a);
    const double mean = mdp.kernel.mean_next(grid, s, a);
    const auto admissible = [&](double x) {
        return mdp.kernel.prob(s, a, grid.nearest_index(x)) > 0.0;
    };

    std::vector<double> roots;
    for (int i = support_lo; i <= support_hi; ++i) {
        const double gi = v[i] - target;
        if (gi == 0.0) {
            if (i < support_hi && v[i + 1] - target == 0.0) {
                // the whole cell solves the equation; the point nearest the
                // mean is as good as any
                roots.push_back(std::clamp(mean, grid[i], grid[i + 1]));
            } else {
                roots.push_back(grid[i]);
            }
            continue;
        }
        if (i == support_hi) break;
        const double gn = v[i + 1] - target;
        if (gn == 0.0) continue;  // handled as a node root on the next step
        if ((gi < 0.0) != (gn < 0.0))
            roots.push_back(bisect_cell(grid, v, target, grid[i], grid[i + 1], gi, tol));
    }
    std::erase_if(roots, [&](double r) { return !admissible(r); });
    if (roots.empty()) {
        // no admissible root: fall back to the support node whose value
        // comes closest (ties toward the mean, then the lower point)
        bool have = false;
        double best = 0.0;
        double best_err = 0.0;
        for (int i = support_lo; i <= support_hi; ++i) {
            if (mdp.kernel.prob(s, a, i) <= 0.0) continue;
            const double err = std::abs(v[i] - target);
            if (!have || err < best_err ||
                (err == best_err && std::abs(grid[i] - mean) < std::abs(best - mean))) {
                have = true;
                best = grid[i];
                best_err = err;
            }
        }
        return {false, best};
    }
    double best = roots.front();
    for (double r : roots) {
        const double d = std::abs(r - mean);
        const double d_best = std::abs(best - mean);
        if (d < d_best || (d == d_best && r < best)) best = r;
    }
    return {true, best};
}

} // namespace

SynthesizedModel synthesize_model(const Mdp& true_mdp, const Solution& true_solution,
                                  double delta, const SynthesisOptions& options) {
    const int ns = true_mdp.n_states();
    const int na = true_mdp.n_actions();
    if (static_cast<int>(true_solution.v_star.size()) != ns)
        throw std::invalid_argument("synthesize_model: solution size mismatch");

    SynthesizedModel out;
    out.model = DeterministicModel::make(ns, na);
    const double jump_tol =
        options.jump_tol > 0.0 ? options.jump_tol : 4.25 * true_mdp.states.spacing();
    const double metrics_lo =
        std::isnan(options.metrics_lo) ? true_mdp.states.lo() : options.metrics_lo;
    const double metrics_hi =
        std::isnan(options.metrics_hi) ? true_mdp.states.hi() : options.metrics_hi;
    const auto in_range = [&](int s) {
        return true_mdp.states[s] >= metrics_lo && true_mdp.states[s] <= metrics_hi;
    };

    const int threads = detail::resolve_threads(options.threads, ns);
    detail::parallel_for(ns, threads, [&](int s) {
        for (int a = 0; a < na; ++a) {
            const double target =
                expected_next_value(true_mdp.kernel, true_solution.v_star, s, a) - delta;
            const PairRoot root =
                select_root(true_mdp, true_solution.v_star, s, a, target, options.root_tol);
            out.model.f(s, a) = root.value;
            if (!root.found) out.model.set_defined(s, a, false);
        }
    });

    auto& diag = out.diagnostics;
    diag.jump_tol = jump_tol;
    diag.undefined_pairs = out.model.undefined_pairs();
    for (const auto& [s, a] : diag.undefined_pairs)
        if (in_range(s)) ++diag.undefined_in_range;
    diag.max_jump_per_action.assign(na, 0.0);
    for (int a = 0; a < na; ++a) {
        for (int s = 0; s + 1 < ns; ++s) {
            if (!in_range(s) || !in_range(s + 1)) continue;
            if (!out.model.is_defined(s, a) || !out.model.is_defined(s + 1, a)) continue;
            diag.max_jump_per_action[a] = std::max(
                diag.max_jump_per_action[a], std::abs(out.model.f(s + 1, a) - out.model.f(s, a)));
        }
        diag.max_jump = std::max(diag.max_jump, diag.max_jump_per_action[a]);
    }
    diag.support_violations = 0;
    for (int s = 0; s < ns; ++s)
        for (int a = 0; a < na; ++a)
            if (out.model.is_defined(s, a) &&
                true_mdp.kernel.prob(s, a, true_mdp.states.nearest_index(out.model.f(s, a))) <= 0.0)
                ++diag.support_violations;
    diag.continuous = diag.undefined_in_range == 0 && diag.max_jump <= jump_tol;
    return out;
}

DeterministicModel SynthesizedModel::completed() const {
    DeterministicModel out = model;
    for (const auto& [s, a] : diagnostics.undefined_pairs) out.set_defined(s, a, true);
    return out;
}

std::vector<SweepRow> sweep_delta(const Mdp& true_mdp, const Solution& true_solution,
                                  std::span<const double> deltas, const SweepOptions& options) {
    if (deltas.empty()) throw std::invalid_argument("sweep_delta: no deltas");
    std::vector<SweepRow> rows;
    rows.reserve(deltas.size());
    SynthesisOptions synthesis = options.synthesis;
    synthesis.metrics_lo = options.range_lo;
    synthesis.metrics_hi = options.range_hi;
    const double tie_tol =
        std::isnan(options.tie_tol)
            ? rounding_tie_tol(true_mdp, true_solution, options.range_lo, options.range_hi)
            : options.tie_tol;
    for (double delta : deltas) {
        const SynthesizedModel synth = synthesize_model(true_mdp, true_solution, delta, synthesis);
        SweepRow row;
        row.delta = delta;
        row.undefined_count = synth.diagnostics.undefined_in_range;
        row.max_jump = synth.diagnostics.max_jump;
        row.continuous = synth.diagnostics.continuous;
        if (row.undefined_count == 0) {
            // holes outside the metrics range carry the best-achievable
            // support point; they are unreachable from the range of interest
            const Solution model_solution =
                solve_mdp(induced_mdp_interp(synth.completed(), true_mdp), options.solve);
            const auto agree = argmax_agreement(true_solution, model_solution, tie_tol);
            if (std::isnan(options.range_lo) || std::isnan(options.range_hi))
                row.agreement_fraction = agreement_fraction(agree);
            else
                row.agreement_fraction = agreement_fraction(agree, true_mdp.states,
                                                            options.range_lo, options.range_hi);
        } else {
            row.agreement_fraction = kNan;
        }
        rows.push_back(row);
    }
    return rows;
}

int family_dim(ModelFamily family) {
    switch (family) {
        case ModelFamily::affine: return 3;
        case ModelFamily::pw_affine: return 5;
    }
    throw std::invalid_argument("family_dim: unknown family");
}

std::string family_name(ModelFamily family) {
    switch (family) {
        case ModelFamily::affine: return "affine";
        case ModelFamily::pw_affine: return "pw_affine";
    }
    throw std::invalid_argument("family_name: unknown family");
}

ModelFamily family_from_name(const std::string& name) {
    if (name == "affine") return ModelFamily::affine;
    if (name == "pw_affine") return ModelFamily::pw_affine;
    throw std::invalid_argument("family_from_name: unknown family '" + name + "'");
}

double ParametricModel::eval(double s, double a) const {
    if (static_cast<int>(theta.size()) != family_dim(family))
        throw std::invalid_argument("ParametricModel: theta size mismatch");
    switch (family) {
        case ModelFamily::affine:
            return theta[0] * s + theta[1] * a + theta[2];
        case ModelFamily::pw_affine:
            return theta[4] + theta[2] * a + theta[0] * std::min(s - theta[3], 0.0) +
                   theta[1] * std::max(s - theta[3], 0.0);
    }
    throw std::invalid_argument("ParametricModel: unknown family");
}

DeterministicModel to_deterministic(const ParametricModel& model, const StateGrid& states,
                                    const ActionGrid& actions) {
    auto out = DeterministicModel::make(states.size(), actions.size());
    for (int s = 0; s < states.size(); ++s)
        for (int a = 0; a < actions.size(); ++a)
            out.f(s, a) = states.clamp(model.eval(states[s], actions[a]));
    return out;
}

namespace {

/// Solves the 3x3 system in place (Gaussian elimination, partial pivoting).
std::vector<double> solve3(double m[3][3], double b[3], const char* who) {
    int perm[3] = {0, 1, 2};
    for (int col = 0; col < 3; ++col) {
        int pivot = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::abs(m[perm[r]][col]) > std::abs(m[perm[pivot]][col])) pivot = r;
        std::swap(perm[col], perm[pivot]);
        const double diag = m[perm[col]][col];
        if (std::abs(diag) < 1e-12)
            throw std::runtime_error(std::string(who) + ": singular normal equations");
        for (int r = col + 1; r < 3; ++r) {
            const double factor = m[perm[r]][col] / diag;
            for (int c = col; c < 3; ++c) m[perm[r]][c] -= factor * m[perm[col]][c];
            b[perm[r]] -= factor * b[perm[col]];
        }
    }
    std::vector<double> x(3, 0.0);
    for (int col = 2; col >= 0; --col) {
        double acc = b[perm[col]];
        for (int c = col + 1; c < 3; ++c) acc -= m[perm[col]][c] * x[c];
        x[col] = acc / m[perm[col]][col];
    }
    return x;
}

} // namespace

ParametricModel affine_least_squares(const DeterministicModel& field, const StateGrid& states,
                                     const ActionGrid& actions) {
    if (!field.fully_defined())
        throw std::invalid_argument("affine_least_squares: field must be fully defined");
    // normal equations over basis (s, a, 1)
    double m[3][3] = {};
    double b[3] = {};
    for (int i = 0; i < states.size(); ++i) {
        for (int j = 0; j < actions.size(); ++j) {
            const double x[3] = {states[i], actions[j], 1.0};
            const double y = field.f(i, j);
            for (int r = 0; r < 3; ++r) {
                for (int c = 0; c < 3; ++c) m[r][c] += x[r] * x[c];
                b[r] += x[r] * y;
            }
        }
    }
    ParametricModel out;
    out.family = ModelFamily::affine;
    out.theta = solve3(m, b, "affine_least_squares");
    return out;
}

ParametricModel embed_affine(ModelFamily family, const ParametricModel& affine,
                             const StateGrid& states) {
    if (affine.family != ModelFamily::affine)
        throw std::invalid_argument("embed_affine: source must be affine");
    if (family == ModelFamily::affine) return affine;
    const double breakpoint = 0.5 * (states.lo() + states.hi());
    ParametricModel out;
    out.family = ModelFamily::pw_affine;
    out.theta = {affine.theta[0], affine.theta[0], affine.theta[1], breakpoint,
                 affine.theta[0] * breakpoint + affine.theta[2]};
    return out;
}

namespace {

struct PenaltyContext {
    const Mdp& true_mdp;
    const Solution& true_solution;
    Table expected_v;  // E_true[V*(next)|s,a], precomputed

    explicit PenaltyContext(const Mdp& mdp, const Solution& sol)
        : true_mdp(mdp), true_solution(sol), expected_v(mdp.n_states(), mdp.n_actions()) {
        for (int s = 0; s < mdp.n_states(); ++s)
            for (int a = 0; a < mdp.n_actions(); ++a)
                expected_v(s, a) = expected_next_value(mdp.kernel, sol.v_star, s, a);
    }

    /// (mean, mean squared deviation from delta_bar) of the residual field
    std::pair<double, double> penalty(const ParametricModel& model, bool delta_free) const {
        const int ns = true_mdp.n_states();
        const int na = true_mdp.n_actions();
        std::vector<double> resid(static_cast<std::size_t>(ns) * na);
        std::size_t k = 0;
        for (int s = 0; s < ns; ++s) {
            for (int a = 0; a < na; ++a) {
                const double f =
                    true_mdp.states.clamp(model.eval(true_mdp.states[s], true_mdp.actions[a]));
                resid[k++] = expected_v(s, a) -
                             true_mdp.states.interpolate(true_solution.v_star, f);
            }
        }
        double mean = 0.0;
        if (delta_free) {
            for (double r : resid) mean += r;
            mean /= static_cast<double>(resid.size());
        }
        double loss = 0.0;
        for (double r : resid) loss += (r - mean) * (r - mean);
        return {mean, loss / static_cast<double>(resid.size())};
    }
};

double dataset_loss(const ParametricModel& model, const TransitionDataset& data,
                    const Mdp& mdp) {
    double loss = 0.0;
    for (const auto& rec : data.records) {
        const double pred = model.eval(mdp.states[rec.s], mdp.actions[rec.a]);
        const double err = pred - mdp.states[rec.s_next];
        loss += err * err;
    }
    return loss / static_cast<double>(data.records.size());
}

/// Affine least squares over raw records; no grid-coverage requirement.
ParametricModel affine_ls_records(const TransitionDataset& data, const Mdp& mdp) {
    double m[3][3] = {};
    double b[3] = {};
    for (const auto& rec : data.records) {
        const double x[3] = {mdp.states[rec.s], mdp.actions[rec.a], 1.0};
        const double y = mdp.states[rec.s_next];
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) m[r][c] += x[r] * x[c];
            b[r] += x[r] * y;
        }
    }
    ParametricModel out;
    out.family = ModelFamily::affine;
    out.theta = solve3(m, b, "constrained_fit");
    return out;
}

} // namespace

std::pair<ParametricModel, ConstrainedFitReport> constrained_fit(
    const TransitionDataset& data, const Mdp& true_mdp, const Solution& true_solution,
    ModelFamily family, double penalty_weight, bool delta_free,
    const ConstrainedFitOptions& options) {
    if (data.records.empty()) throw std::invalid_argument("constrained_fit: empty dataset");
    if (penalty_weight < 0.0)
        throw std::invalid_argument("constrained_fit: penalty_weight must be >= 0");

    const PenaltyContext ctx(true_mdp, true_solution);
    ConstrainedFitReport report;
    const auto total_loss = [&](const ParametricModel& model) {
        ++report.evaluations;
        double loss = dataset_loss(model, data, true_mdp);
        if (penalty_weight > 0.0) loss += penalty_weight * ctx.penalty(model, delta_free).second;
        if (!std::isfinite(loss)) throw std::runtime_error("constrained_fit: non-finite loss");
        return loss;
    };

    // start from the plain least-squares fit of the dataset
    ParametricModel theta =
        embed_affine(family, affine_ls_records(data, true_mdp), true_mdp.states);

    double best = total_loss(theta);
    double step = options.init_step;
    for (long cycle = 0; cycle < options.cycles && step > 1e-9; ++cycle) {
        bool improved = false;
        for (int i = 0; i < family_dim(family); ++i) {
            for (double dir : {+1.0, -1.0}) {
                ParametricModel candidate = theta;
                candidate.theta[i] += dir * step;
                const double loss = total_loss(candidate);
                if (loss < best) {
                    best = loss;
                    theta = std::move(candidate);
                    improved = true;
                }
            }
        }
        if (!improved) step *= 0.5;
    }

    report.data_loss = dataset_loss(theta, data, true_mdp);
    const auto [delta_bar, penalty] = ctx.penalty(theta, delta_free);
    report.delta_bar = delta_bar;
    report.penalty_loss = penalty;
    return {theta, report};
}

namespace {

/// Policy evaluation with a warm start; used inside the tuning loop where
/// consecutive policies differ little.
std::vector<double> evaluate_policy_from(const Mdp& mdp, std::span<const int> policy,
                                         std::vector<double> v, double tol, long max_iter) {
    const int ns = mdp.n_states();
    if (static_cast<int>(v.size()) != ns) v.assign(ns, 0.0);
    std::vector<double> v_next(ns, 0.0);
    for (long iter = 1; iter <= max_iter; ++iter) {
        double residual = 0.0;
        for (int s = 0; s < ns; ++s) {
            v_next[s] = mdp.reward(s, policy[s]) +
                        mdp.gamma * expected_next_value(mdp.kernel, v, s, policy[s]);
            residual = std::max(residual, std::abs(v_next[s] - v[s]));
        }
        v.swap(v_next);
        if (residual <= tol) return v;
    }
    throw SolveError("fine_tune: policy evaluation did not converge", 0.0, max_iter);
}

} // namespace

FineTuneResult fine_tune(ModelFamily family, std::vector<double> theta0, const Mdp& true_mdp,
                         long budget, const FineTuneOptions& options) {
    if (budget < 1) throw std::invalid_argument("fine_tune: budget must be >= 1");
    if (static_cast<int>(theta0.size()) != family_dim(family))
        throw std::invalid_argument("fine_tune: theta0 size mismatch");

    std::optional<Solution> true_solution;
    if (options.objective == TuneObjective::q_matching)
        true_solution = solve_mdp(true_mdp, options.solve);

    // warm starts: value functions move slowly along the search path
    std::vector<double> model_v_seed;
    std::vector<double> policy_v_seed;

    const auto evaluate = [&](const ParametricModel& model) {
        SolveOptions solve_options = options.solve;
        solve_options.v0 = model_v_seed;
        const Mdp model_mdp =
            induced_mdp(to_deterministic(model, true_mdp.states, true_mdp.actions), true_mdp);
        const Solution model_solution = solve_mdp(model_mdp, solve_options);
        if (options.objective == TuneObjective::q_matching) {
            double mse = 0.0;
            const auto& q_true = true_solution->q_star.data();
            const auto& q_model = model_solution.q_star.data();
            for (std::size_t i = 0; i < q_true.size(); ++i) {
                const double d = q_true[i] - q_model[i];
                mse += d * d;
            }
            return std::pair(-mse / static_cast<double>(q_true.size()), model_solution);
        }
        const auto v_pi =
            evaluate_policy_from(true_mdp, model_solution.policy, policy_v_seed,
                                 solve_options.tol, solve_options.max_iter);
        const double j = mean_over_range(true_mdp.states, v_pi, options.init_lo, options.init_hi);
        return std::pair(j, model_solution);
    };

    ParametricModel current{family, std::move(theta0)};
    auto [current_j, current_solution] = evaluate(current);
    model_v_seed = current_solution.v_star;
    if (options.objective == TuneObjective::closed_loop_return)
        policy_v_seed = evaluate_policy_from(true_mdp, current_solution.policy, {},
                                             options.solve.tol, options.solve.max_iter);

    FineTuneResult result;
    result.initial_objective = current_j;
    result.trace.push_back({0, current.theta, current_j});

    const int dim = family_dim(family);
    double step = options.init_step;
    for (long sweep = 1; sweep <= budget && step >= options.min_step; ++sweep) {
        double best_j = current_j;
        ParametricModel best = current;
        std::optional<Solution> best_solution;
        for (int i = 0; i < dim; ++i) {
            for (double dir : {+1.0, -1.0}) {
                ParametricModel candidate = current;
                candidate.theta[i] += dir * step;
                auto [j, sol] = evaluate(candidate);
                if (j > best_j) {
                    best_j = j;
                    best = std::move(candidate);
                    best_solution = std::move(sol);
                }
            }
        }
        if (best_solution) {
            current = std::move(best);
            current_j = best_j;
            model_v_seed = best_solution->v_star;
            if (options.objective == TuneObjective::closed_loop_return)
                policy_v_seed =
                    evaluate_policy_from(true_mdp, best_solution->policy, policy_v_seed,
                                         options.solve.tol, options.solve.max_iter);
            result.trace.push_back({sweep, current.theta, current_j});
        } else {
            step *= 0.5;
        }
    }
    result.model = current;
    result.final_objective = current_j;
    return result;
}

} // namespace domlab
