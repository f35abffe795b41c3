// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Runs the full-size scenarios (201/51/33 grids, tol 1e-10).

#include "domlab/artifacts.hpp"
#include "domlab/optimality.hpp"
#include "domlab/scenario.hpp"
#include "domlab/synthesis.hpp"

#include "support.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <sys/wait.h>
#include <vector>

using namespace domlab;
namespace fs = std::filesystem;

namespace {

// frozen from the solver oracle at defaults (see criterion 1)
constexpr double kGoldenBattery1Gap = 60.399387018832;

struct Criterion {
    int id;
    std::string name;
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& why) {
        if (!ok) {
            pass = false;
            detail += (detail.empty() ? "" : "; ") + why;
        }
    }
    void note(const std::string& info) {
        detail += (detail.empty() ? "" : "; ") + info;
    }
};

double elapsed_s(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(double v) { return format_double(v); }

double closed_loop_return(const Mdp& mdp, std::span<const int> policy) {
    const auto v = evaluate_policy(mdp, policy);
    return mean_over_range(mdp.states, v, 0.0, 1.0);
}

/// Exact disagreement: the model's action is not in the exact true argmax set.
double exact_disagreement(const ScenarioBundle& bundle, const Solution& true_sol,
                          const Solution& model_sol) {
    long disagree = 0, total = 0;
    for (int s = 0; s < bundle.mdp.n_states(); ++s) {
        if (bundle.mdp.states[s] < 0.0 || bundle.mdp.states[s] > 1.0) continue;
        ++total;
        bool in = false;
        for (int a : argmax_set(true_sol.q_star, s))
            if (a == model_sol.policy[s]) in = true;
        if (!in) ++disagree;
    }
    return static_cast<double>(disagree) / static_cast<double>(total);
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(DOMLAB_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

bool dirs_byte_identical(const fs::path& a, const fs::path& b) {
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(a)) names.push_back(entry.path().filename());
    std::sort(names.begin(), names.end());
    std::size_t other = 0;
    for ([[maybe_unused]] const auto& entry : fs::directory_iterator(b)) ++other;
    if (other != names.size()) return false;
    for (const auto& name : names) {
        if (!fs::exists(b / name)) return false;
        if (domlab::testing::read_file(a / name) != domlab::testing::read_file(b / name))
            return false;
    }
    return true;
}

} // namespace

int main() {
    std::vector<Criterion> results;

    // shared heavyweight solves
    const auto battery1 = battery_case1();
    const auto battery2 = battery_case2();
    const Solution true1 = solve_mdp(battery1.mdp);
    const Solution true2 = solve_mdp(battery2.mdp);

    { // 1. best-fit model is suboptimal on the asymmetric-price case
        Criterion c{1, "battery1 best-fit suboptimality"};
        const auto start = std::chrono::steady_clock::now();

        const Mdp model_mdp = induced_mdp(battery1.nominal_model, battery1.mdp);
        const Solution model_sol = solve_mdp(model_mdp);
        const double disagree = exact_disagreement(battery1, true1, model_sol);
        c.require(disagree >= 0.10, "policy disagreement " + fmt(disagree) + " < 0.10");

        const Mdp perfect_mdp = induced_mdp(StochasticModel{battery1.mdp.kernel}, battery1.mdp);
        const Solution perfect_sol = solve_mdp(perfect_mdp);
        const double j_star = closed_loop_return(battery1.mdp, true1.policy);
        const double j_model = closed_loop_return(battery1.mdp, model_sol.policy);
        const double j_perfect = closed_loop_return(battery1.mdp, perfect_sol.policy);
        const double gap = j_star - j_model;
        const double floor = j_star - j_perfect;
        c.require(gap > 10.0 * floor, "gap " + fmt(gap) + " not above 10x floor " + fmt(floor));
        c.require(gap > 0.0, "gap not positive");
        c.require(std::abs(gap - kGoldenBattery1Gap) <= 1e-6 * kGoldenBattery1Gap,
                  "gap " + fmt(gap) + " drifted from golden " + fmt(kGoldenBattery1Gap));
        const double secs = elapsed_s(start);
        c.require(secs <= 60.0, "runtime " + fmt(secs) + "s exceeds 60s");
        c.note("disagreement " + fmt(disagree) + ", gap " + fmt(gap));
        results.push_back(c);
    }

    { // 2. non-smooth value function of the second case
        Criterion c{2, "battery2 non-smooth V*"};
        const auto start = std::chrono::steady_clock::now();
        const auto& g = battery2.mdp.states;
        int argmax = 0;
        for (int s = 0; s < g.size(); ++s)
            if (true2.v_star[s] > true2.v_star[argmax]) argmax = s;
        c.require(std::abs(g[argmax] - 0.5) <= g.spacing() + 1e-12,
                  "V* argmax at " + fmt(g[argmax]));
        const double ratio = kink_ratio(g, true2.v_star, 0.5, 0.2, 0.8);
        c.require(ratio > 10.0, "kink ratio " + fmt(ratio) + " <= 10");
        const double secs = elapsed_s(start);
        c.require(secs <= 60.0, "runtime " + fmt(secs) + "s exceeds 60s");
        c.note("kink ratio " + fmt(ratio) + ", argmax s=" + fmt(g[argmax]));
        results.push_back(c);
    }

    // criteria 3-5 share the synthesized-model sweeps; the offsets run
    // negative because the residual convention is true-minus-model and the
    // gap/jump/continuous regimes sit on the higher-value side
    SweepOptions sweep_options;
    sweep_options.range_lo = 0.0;
    sweep_options.range_hi = 1.0;
    const std::vector<double> trichotomy{-0.10, -0.11, -0.15};
    const auto trichotomy_rows = sweep_delta(battery2.mdp, true2, trichotomy, sweep_options);
    std::vector<double> dense;
    for (double m = 0.095; m <= 0.1251; m += 0.005) dense.push_back(-m);
    const auto dense_rows = sweep_delta(battery2.mdp, true2, dense, sweep_options);

    double continuous_delta = 0.0;
    { // 3. delta trichotomy
        Criterion c{3, "delta trichotomy"};
        const auto& gap_row = trichotomy_rows[2];   // |delta| = 0.15
        const auto& jump_row = trichotomy_rows[0];  // |delta| = 0.10
        c.require(gap_row.undefined_count > 0, "0.15 row defined everywhere");
        c.require(jump_row.undefined_count == 0, "0.10 row not defined");
        c.require(!jump_row.continuous, "0.10 row reported continuous");
        bool found = false;
        for (const auto& row : dense_rows) {
            if (row.undefined_count == 0 && row.continuous && row.agreement_fraction >= 0.99) {
                found = true;
                if (continuous_delta == 0.0) continuous_delta = row.delta;
            }
        }
        c.require(found, "no continuous offset with agreement >= 0.99 in the dense sweep");
        if (found)
            c.note("continuous at delta " + fmt(continuous_delta) + ", 0.15 undefined pairs " +
                   std::to_string(gap_row.undefined_count) + ", 0.10 max jump " +
                   fmt(jump_row.max_jump));
        results.push_back(c);
    }

    SynthesisOptions synth_options;
    synth_options.metrics_lo = 0.0;
    synth_options.metrics_hi = 1.0;
    { // 4. sufficient condition implies optimality
        Criterion c{4, "sufficient condition => optimal policy"};
        int checked = 0;
        for (const auto& row : dense_rows) {
            if (row.undefined_count > 0) continue;
            const SynthesizedModel synth =
                synthesize_model(battery2.mdp, true2, row.delta, synth_options);
            const Table field = delta_residual_partial(battery2.mdp, true2, synth.model);
            const double spread = field_spread(field);
            if (spread > 1e-6) {
                c.require(false, "residual spread " + fmt(spread) + " at delta " +
                                     fmt(row.delta));
                continue;
            }
            ++checked;
            c.require(row.agreement_fraction >= 0.99,
                      "agreement " + fmt(row.agreement_fraction) + " at delta " +
                          fmt(row.delta));
        }
        c.require(checked > 0, "no fully defined synthesized models to check");

        // the perfect model: exact zero residual and exact agreement
        const Mdp perfect_mdp = induced_mdp(StochasticModel{battery2.mdp.kernel}, battery2.mdp);
        const Solution perfect_sol = solve_mdp(perfect_mdp);
        const Table perfect_field =
            delta_residual(battery2.mdp, true2, StochasticModel{battery2.mdp.kernel});
        bool all_zero = true;
        for (double v : perfect_field.data()) all_zero = all_zero && v == 0.0;
        c.require(all_zero, "perfect model residual not identically zero");
        const auto agree = argmax_agreement(true2, perfect_sol, 0.0);
        c.require(agreement_fraction(agree) == 1.0, "perfect model agreement below 1");
        c.note(std::to_string(checked) + " synthesized models at spread <= 1e-6");
        results.push_back(c);
    }

    { // 5. the witness is deterministic although the system is stochastic
        Criterion c{5, "deterministic witness for a stochastic system"};
        c.require(continuous_delta != 0.0, "criterion 3 produced no witness");
        if (continuous_delta != 0.0) {
            const SynthesizedModel witness =
                synthesize_model(battery2.mdp, true2, continuous_delta, synth_options);
            c.require(witness.diagnostics.undefined_in_range == 0, "witness not defined on [0,1]");
            bool stochastic_somewhere = false;
            for (int s = 0; s < battery2.mdp.n_states() && !stochastic_somewhere; ++s)
                for (int a = 0; a < battery2.mdp.n_actions() && !stochastic_somewhere; ++a)
                    stochastic_somewhere = battery2.mdp.kernel.row(s, a).size() > 1;
            c.require(stochastic_somewhere, "true kernel is not stochastic");
            c.note("single-point predictor f(s,a) at delta " + fmt(continuous_delta) +
                   " over a stochastic kernel");
        }
        results.push_back(c);
    }

    { // 6. expected-value models are optimal for the quadratic tracking case
        Criterion c{6, "lqr expected-value local optimality"};
        const auto lqr = lqr_scenario();
        c.require(lqr.closed_form->residual <= 1e-12,
                  "riccati residual " + fmt(lqr.closed_form->residual));
        const Solution model_sol = solve_mdp(induced_mdp(lqr.nominal_model, lqr.mdp));
        const double cell = lqr.mdp.actions[1] - lqr.mdp.actions[0];
        double worst = 0.0;
        for (int s = 0; s < lqr.mdp.n_states(); ++s) {
            const double x = lqr.mdp.states[s];
            if (x < lqr.report_range.first || x > lqr.report_range.second) continue;
            const double u_star = -lqr.closed_form->gain * x;
            worst = std::max(worst, std::abs(lqr.mdp.actions[model_sol.policy[s]] - u_star));
        }
        c.require(worst <= cell + 1e-12,
                  "greedy deviates " + fmt(worst) + " > one action cell " + fmt(cell));
        c.note("max |greedy - (-k s)| = " + fmt(worst) + ", cell " + fmt(cell));
        results.push_back(c);
    }

    { // 7. class-K sandwich equals argmax-set equality on random processes
        Criterion c{7, "sandwich equivalence on random processes"};
        const auto start = std::chrono::steady_clock::now();
        int matches = 0;
        const int trials = 100;
        for (int seed = 0; seed < trials; ++seed) {
            const Mdp mdp = random_mdp(seed, 4 + seed % 5, 2 + seed % 3);
            const Solution true_sol = solve_mdp(mdp);
            const Mdp perturbed =
                domlab::testing::perturb_kernel(mdp, seed + 991, 0.02 + 0.12 * (seed % 8));
            const Solution model_sol = solve_mdp(perturbed);
            const auto equal = argmax_sets_equal(true_sol, model_sol);
            bool all_equal = true;
            for (char e : equal) all_equal = all_equal && e != 0;
            if (check_sandwich(true_sol, model_sol).sandwich_holds == all_equal) ++matches;
        }
        c.require(matches == trials,
                  "verdicts matched brute force in " + std::to_string(matches) + "/100");
        const double secs = elapsed_s(start);
        c.require(secs <= 30.0, "runtime " + fmt(secs) + "s exceeds 30s");
        c.note(std::to_string(matches) + "/100 verdicts match");
        results.push_back(c);
    }

    { // 8. storage machinery closes the value gap
        Criterion c{8, "storage matching"};
        const Mdp model_mdp = induced_mdp(battery1.nominal_model, battery1.mdp);
        const Solution model_sol = solve_mdp(model_mdp);
        const StorageField storage = storage_matching(true1, model_mdp, model_sol);
        const double identity = bellman_identity_residual(model_mdp, model_sol, storage);
        c.require(identity <= 1e-8, "modified Bellman identity residual " + fmt(identity));
        const Solution modified = solve_mdp(storage_modified_mdp(model_mdp, storage));
        double gap = 0.0;
        for (int s = 0; s < battery1.mdp.n_states(); ++s)
            gap = std::max(gap, std::abs(modified.v_star[s] - true1.v_star[s]));
        c.require(gap <= 1e-8, "value gap " + fmt(gap));

        const double shift = 0.7;
        Mdp shifted = battery1.mdp;
        for (double& r : shifted.reward.values.data()) r += shift;
        const Solution shifted_sol = solve_mdp(shifted);
        const StorageField shift_storage = storage_matching(true1, shifted, shifted_sol);
        const double expected_lambda = -shift / (1.0 - battery1.mdp.gamma);
        double lambda_err = 0.0, big_lambda_err = 0.0;
        for (double l : shift_storage.lambda)
            lambda_err = std::max(lambda_err, std::abs(l - expected_lambda));
        for (double l : shift_storage.big_lambda.data())
            big_lambda_err = std::max(big_lambda_err, std::abs(l + shift));
        c.require(lambda_err <= 1e-7, "lambda misses -c/(1-gamma) by " + fmt(lambda_err));
        c.require(big_lambda_err <= 1e-8, "Lambda misses -c by " + fmt(big_lambda_err));
        c.note("identity " + fmt(identity) + ", value gap " + fmt(gap));
        results.push_back(c);
    }

    { // 9. closed-loop fine-tuning beats the data fit
        Criterion c{9, "fine-tuning improves closed-loop return"};
        const ParametricModel affine =
            affine_least_squares(battery2.nominal_model, battery2.mdp.states,
                                 battery2.mdp.actions);
        const auto result = fine_tune(ModelFamily::affine, affine.theta, battery2.mdp, 200, {});
        const double improvement = result.final_objective - result.initial_objective;
        c.require(result.final_objective >= result.initial_objective, "objective decreased");
        c.require(improvement >= 0.01 * std::abs(result.initial_objective),
                  "improvement " + fmt(improvement) + " below 1% of |" +
                      fmt(result.initial_objective) + "|");
        bool monotone = true;
        for (std::size_t i = 1; i < result.trace.size(); ++i)
            monotone = monotone && result.trace[i].objective > result.trace[i - 1].objective;
        c.require(monotone, "accepted trace not monotone");
        c.note("J " + fmt(result.initial_objective) + " -> " + fmt(result.final_objective) +
               " (" + fmt(100.0 * improvement / std::abs(result.initial_objective)) + "%)");
        results.push_back(c);
    }

    { // 10. byte-identical artifacts for every command
        Criterion c{10, "cli determinism"};
        const fs::path work = fs::temp_directory_path() / "domlab_acceptance_cli";
        fs::remove_all(work);
        const std::string small = " --states 43 --actions 9 --noise-nodes 9 ";
        const std::vector<std::pair<std::string, std::string>> commands{
            {"solve", "solve random:7"},
            {"fit", "fit battery1" + small + "--seed 5 --per-pair 3"},
            {"audit", "audit battery1" + small},
            {"synthesize", "synthesize battery2" + small + "--delta -0.05"},
            {"sweep", "sweep battery2" + small + "--deltas=-0.05,0.0"},
            {"finetune", "finetune battery2" + small + "--budget 2 --family affine"},
            {"reproduce", "reproduce battery1" + small},
        };
        for (const auto& [name, args] : commands) {
            const fs::path a = work / (name + "_a");
            const fs::path b = work / (name + "_b");
            const int code_a = run_cli(args + " --out " + a.string());
            const int code_b = run_cli(args + " --out " + b.string());
            c.require(code_a == 0 && code_b == 0, name + " exited nonzero");
            if (code_a == 0 && code_b == 0)
                c.require(dirs_byte_identical(a, b), name + " artifacts differ between runs");
        }
        results.push_back(c);
    }

    int failures = 0;
    for (const auto& c : results) {
        if (!c.pass) ++failures;
        std::printf("[%s] criterion %d: %s%s%s\n", c.pass ? "PASS" : "FAIL", c.id,
                    c.name.c_str(), c.detail.empty() ? "" : " -- ", c.detail.c_str());
    }
    if (failures > 0) std::printf("%d criterion(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
