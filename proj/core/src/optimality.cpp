#include "domlab/optimality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace domlab {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

Table disadvantage(const Solution& sol) {
    Table d = sol.advantage;
    for (double& v : d.data()) v = -v;
    return d;
}

} // namespace

StorageField storage_matching(const Solution& true_solution, const Mdp& model_mdp,
                              const Solution& model_solution) {
    const int ns = model_mdp.n_states();
    const int na = model_mdp.n_actions();
    if (static_cast<int>(true_solution.v_star.size()) != ns)
        throw std::invalid_argument("storage_matching: solution size mismatch");
    StorageField storage;
    storage.lambda.resize(ns);
    for (int s = 0; s < ns; ++s)
        storage.lambda[s] = true_solution.v_star[s] - model_solution.v_star[s];
    storage.big_lambda = Table(ns, na);
    for (int s = 0; s < ns; ++s)
        for (int a = 0; a < na; ++a)
            storage.big_lambda(s, a) =
                storage.lambda[s] -
                model_mdp.gamma * expected_next_value(model_mdp.kernel, storage.lambda, s, a);
    return storage;
}

Mdp storage_modified_mdp(const Mdp& model_mdp, const StorageField& storage) {
    if (storage.big_lambda.rows() != model_mdp.n_states() ||
        storage.big_lambda.cols() != model_mdp.n_actions())
        throw std::invalid_argument("storage_modified_mdp: shape mismatch");
    Mdp out = model_mdp;
    for (int s = 0; s < out.n_states(); ++s)
        for (int a = 0; a < out.n_actions(); ++a)
            out.reward.values(s, a) += storage.big_lambda(s, a);
    return out;
}

double bellman_identity_residual(const Mdp& model_mdp, const Solution& model_solution,
                                 const StorageField& storage) {
    const int ns = model_mdp.n_states();
    const int na = model_mdp.n_actions();
    std::vector<double> shifted(ns);
    for (int s = 0; s < ns; ++s) shifted[s] = model_solution.v_star[s] + storage.lambda[s];
    double residual = 0.0;
    for (int s = 0; s < ns; ++s) {
        for (int a = 0; a < na; ++a) {
            const double lhs = model_solution.q_star(s, a) + storage.lambda[s];
            const double rhs =
                model_mdp.reward(s, a) + storage.big_lambda(s, a) +
                model_mdp.gamma * expected_next_value(model_mdp.kernel, shifted, s, a);
            residual = std::max(residual, std::abs(lhs - rhs));
        }
    }
    return residual;
}

Table delta_residual(const Mdp& true_mdp, const Solution& true_solution,
                     const StochasticModel& model) {
    const int ns = true_mdp.n_states();
    const int na = true_mdp.n_actions();
    if (model.kernel.n_states() != ns || model.kernel.n_actions() != na)
        throw std::invalid_argument("delta_residual: kernel shape mismatch");
    Table out(ns, na);
    for (int s = 0; s < ns; ++s)
        for (int a = 0; a < na; ++a)
            out(s, a) = expected_next_value(true_mdp.kernel, true_solution.v_star, s, a) -
                        expected_next_value(model.kernel, true_solution.v_star, s, a);
    return out;
}

Table delta_residual_partial(const Mdp& true_mdp, const Solution& true_solution,
                             const DeterministicModel& model) {
    const int ns = true_mdp.n_states();
    const int na = true_mdp.n_actions();
    if (model.f.rows() != ns || model.f.cols() != na)
        throw std::invalid_argument("delta_residual: model shape mismatch");
    Table out(ns, na);
    for (int s = 0; s < ns; ++s) {
        for (int a = 0; a < na; ++a) {
            if (!model.is_defined(s, a)) {
                out(s, a) = kNan;
                continue;
            }
            out(s, a) = expected_next_value(true_mdp.kernel, true_solution.v_star, s, a) -
                        true_mdp.states.interpolate(true_solution.v_star, model.f(s, a));
        }
    }
    return out;
}

Table delta_residual(const Mdp& true_mdp, const Solution& true_solution,
                     const DeterministicModel& model) {
    if (!model.fully_defined()) {
        auto pairs = model.undefined_pairs();
        throw FitError("delta_residual: model undefined at " + std::to_string(pairs.size()) +
                           " pairs",
                       std::move(pairs));
    }
    return delta_residual_partial(true_mdp, true_solution, model);
}

Table delta_residual(const Mdp& true_mdp, const Solution& true_solution,
                     const PredictiveModel& model) {
    return std::visit(
        [&](const auto& m) { return delta_residual(true_mdp, true_solution, m); }, model);
}

double field_spread(const Table& field) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (double v : field.data()) {
        if (std::isnan(v)) continue;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (!(lo <= hi)) throw std::invalid_argument("field_spread: no defined entries");
    return hi - lo;
}

double TabulatedK::operator()(double arg) const {
    if (x.empty()) return 0.0;
    if (arg >= x.back()) return value.back() + (arg - x.back());
    auto it = std::upper_bound(x.begin(), x.end(), arg);
    if (it == x.begin()) return value.front();
    return value[static_cast<std::size_t>(it - x.begin()) - 1];
}

TabulatedK alpha0_construct(const Table& d_true, const Table& d_model, double zero_tol) {
    if (!d_true.same_shape(d_model))
        throw std::invalid_argument("alpha0_construct: shape mismatch");
    const std::size_t n = d_true.data().size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        return d_true.data()[i] < d_true.data()[j];
    });

    TabulatedK out;
    out.x.reserve(n);
    out.value.reserve(n);
    // scan d_true descending, keeping a running min of d_model over the
    // suffix { pairs with d_true >= x }
    double running = std::numeric_limits<double>::infinity();
    std::size_t i = n;
    while (i > 0) {
        const double x = d_true.data()[order[i - 1]];
        while (i > 0 && d_true.data()[order[i - 1]] == x) {
            running = std::min(running, d_model.data()[order[i - 1]]);
            --i;
        }
        out.x.push_back(x);
        out.value.push_back(running);
    }
    std::reverse(out.x.begin(), out.x.end());
    std::reverse(out.value.begin(), out.value.end());

    out.feasible = true;
    for (std::size_t k = 0; k < out.x.size(); ++k)
        if (out.x[k] > zero_tol && !(out.value[k] > zero_tol)) out.feasible = false;
    return out;
}

SandwichResult check_sandwich(const Solution& true_solution, const Solution& model_solution,
                              double zero_tol) {
    const Table d_true = disadvantage(true_solution);
    const Table d_model = disadvantage(model_solution);
    SandwichResult result;
    result.alpha_side = alpha0_construct(d_true, d_model, zero_tol);
    result.beta_side = alpha0_construct(d_model, d_true, zero_tol);
    result.sandwich_holds = result.alpha_side.feasible && result.beta_side.feasible;
    return result;
}

std::vector<int> argmax_set(const Table& q, int s, double tie_tol) {
    double best = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < q.cols(); ++a) best = std::max(best, q(s, a));
    std::vector<int> set;
    for (int a = 0; a < q.cols(); ++a)
        if (q(s, a) >= best - tie_tol) set.push_back(a);
    return set;
}

std::vector<char> argmax_sets_equal(const Solution& true_solution,
                                    const Solution& model_solution, double tie_tol) {
    if (!true_solution.q_star.same_shape(model_solution.q_star))
        throw std::invalid_argument("argmax_sets_equal: shape mismatch");
    const int ns = true_solution.q_star.rows();
    std::vector<char> equal(ns, 0);
    for (int s = 0; s < ns; ++s)
        equal[s] = argmax_set(true_solution.q_star, s, tie_tol) ==
                           argmax_set(model_solution.q_star, s, tie_tol)
                       ? 1
                       : 0;
    return equal;
}

std::vector<char> argmax_agreement(const Solution& true_solution,
                                   const Solution& model_solution, double tie_tol) {
    if (!true_solution.q_star.same_shape(model_solution.q_star))
        throw std::invalid_argument("argmax_agreement: shape mismatch");
    const int ns = true_solution.q_star.rows();
    std::vector<char> agree(ns, 0);
    for (int s = 0; s < ns; ++s) {
        bool ok = true;
        for (int a : argmax_set(model_solution.q_star, s))
            if (true_solution.q_star(s, a) < true_solution.v_star[s] - tie_tol) ok = false;
        agree[s] = ok ? 1 : 0;
    }
    return agree;
}

double rounding_tie_tol(const Mdp& mdp, const Solution& solution, double lo, double hi) {
    const double range_lo = std::isnan(lo) ? mdp.states.lo() : lo;
    const double range_hi = std::isnan(hi) ? mdp.states.hi() : hi;
    double lip = 0.0;
    for (int s = 0; s + 1 < mdp.n_states(); ++s) {
        if (mdp.states[s] < range_lo || mdp.states[s + 1] > range_hi) continue;
        lip = std::max(lip, std::abs(solution.v_star[s + 1] - solution.v_star[s]));
    }
    return mdp.gamma * lip;  // lip already carries one factor of spacing
}

double agreement_fraction(std::span<const char> agreement) {
    if (agreement.empty()) throw std::invalid_argument("agreement_fraction: empty");
    long count = 0;
    for (char c : agreement) count += c != 0;
    return static_cast<double>(count) / static_cast<double>(agreement.size());
}

double agreement_fraction(std::span<const char> agreement, const StateGrid& grid, double lo,
                          double hi) {
    if (static_cast<int>(agreement.size()) != grid.size())
        throw std::invalid_argument("agreement_fraction: size mismatch");
    long count = 0, total = 0;
    for (int s = 0; s < grid.size(); ++s) {
        if (grid[s] < lo || grid[s] > hi) continue;
        ++total;
        count += agreement[s] != 0;
    }
    if (total == 0) throw std::invalid_argument("agreement_fraction: empty range");
    return static_cast<double>(count) / static_cast<double>(total);
}

std::vector<char> omega_check(const Mdp& model_mdp, std::span<const int> policy,
                              std::span<const double> v_hat, long horizon, double bound) {
    if (horizon < 1) throw std::invalid_argument("omega_check: horizon must be >= 1");
    const int ns = model_mdp.n_states();
    if (static_cast<int>(policy.size()) != ns || static_cast<int>(v_hat.size()) != ns)
        throw std::invalid_argument("omega_check: size mismatch");
    std::vector<double> w(ns);
    for (int s = 0; s < ns; ++s) w[s] = std::abs(v_hat[s]);
    std::vector<char> marked(ns, 1);
    std::vector<double> w_next(ns);
    for (long k = 0; k < horizon; ++k) {
        for (int s = 0; s < ns; ++s)
            if (w[s] > bound) marked[s] = 0;
        if (k + 1 == horizon) break;
        for (int s = 0; s < ns; ++s)
            w_next[s] = expected_next_value(model_mdp.kernel, w, s, policy[s]);
        w.swap(w_next);
    }
    return marked;
}

std::vector<char> omega_check(const Mdp& model_mdp, std::span<const int> policy, long horizon,
                              double bound) {
    const Solution sol = solve_mdp(model_mdp);
    return omega_check(model_mdp, policy, sol.v_star, horizon, bound);
}

ConditionReport audit_model(const Mdp& true_mdp, const Solution& true_solution,
                            const PredictiveModel& model, const AuditOptions& options) {
    const Mdp model_mdp = induced_mdp(model, true_mdp);
    const Solution model_solution = solve_mdp(model_mdp, options.solve);

    const double tie_tol =
        std::isnan(options.tie_tol)
            ? rounding_tie_tol(true_mdp, true_solution, options.range_lo, options.range_hi)
            : options.tie_tol;

    ConditionReport report;
    report.delta_field = delta_residual(true_mdp, true_solution, model);
    report.delta_spread = field_spread(report.delta_field);
    report.agreement = argmax_agreement(true_solution, model_solution, tie_tol);
    if (std::isnan(options.range_lo) || std::isnan(options.range_hi))
        report.agreement_frac = agreement_fraction(report.agreement);
    else
        report.agreement_frac = agreement_fraction(report.agreement, true_mdp.states,
                                                   options.range_lo, options.range_hi);
    const SandwichResult sandwich = check_sandwich(true_solution, model_solution, 1e-9);
    report.alpha0 = sandwich.alpha_side;
    report.sandwich_holds = sandwich.sandwich_holds;

    const StorageField storage = storage_matching(true_solution, model_mdp, model_solution);
    const Solution modified = solve_mdp(storage_modified_mdp(model_mdp, storage), options.solve);
    double gap = 0.0;
    for (int s = 0; s < true_mdp.n_states(); ++s)
        gap = std::max(gap, std::abs(modified.v_star[s] - true_solution.v_star[s]));
    report.value_gap = gap;
    return report;
}

} // namespace domlab
