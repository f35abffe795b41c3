// domlab: batch front door for building, solving, fitting, auditing and
// synthesizing grid MDP scenarios. Emits CSV/JSON artifacts; no interactive UI.

#include "domlab/artifacts.hpp"
#include "domlab/scenario.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace domlab;

namespace {

// exit codes (also listed in --help)
constexpr int kExitOk = 0;
constexpr int kExitBadScenario = 2;
constexpr int kExitUnwritable = 3;
constexpr int kExitNoConvergence = 4;
constexpr int kExitInternal = 5;

struct RunConfig {
    std::string command;
    std::string scenario;
    std::optional<int> states;
    std::optional<int> actions;
    std::optional<int> noise_nodes;
    std::optional<double> delta;
    std::vector<double> deltas;
    std::uint64_t seed = 0;
    std::string out;
    double tol = 1e-10;
    int per_pair = 1000;
    long budget = 200;
    std::string family = "pw_affine";
};

class CliError : public std::runtime_error {
  public:
    CliError(int code, const std::string& what) : std::runtime_error(what), code(code) {}
    int code;
};

std::map<std::string, std::string> load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CliError(kExitBadScenario, "cannot read config file " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!key.empty()) kv[key] = value;
    }
    return kv;
}

std::string sanitize(std::string name) {
    for (char& c : name)
        if (c == ':' || c == '/' || c == '\\') c = '-';
    return name;
}

fs::path resolve_out_dir(const RunConfig& cfg) {
    if (!cfg.out.empty()) return cfg.out;
    const char* root = std::getenv("DOM_LAB_OUT");
    const std::string leaf = cfg.command + "-" + sanitize(cfg.scenario);
    return root ? fs::path(root) / leaf : fs::path(leaf);
}

ArtifactMeta make_meta(const RunConfig& cfg) {
    ArtifactMeta meta;
    meta.command = cfg.command;
    meta.scenario = cfg.scenario;
    meta.seed = cfg.seed;
    if (cfg.states) meta.config["states"] = std::to_string(*cfg.states);
    if (cfg.actions) meta.config["actions"] = std::to_string(*cfg.actions);
    if (cfg.noise_nodes) meta.config["noise_nodes"] = std::to_string(*cfg.noise_nodes);
    if (cfg.delta) meta.config["delta"] = format_double(*cfg.delta);
    if (!cfg.deltas.empty()) {
        std::string list;
        for (double d : cfg.deltas) {
            if (!list.empty()) list += ",";
            list += format_double(d);
        }
        meta.config["deltas"] = list;
    }
    meta.config["tol"] = format_double(cfg.tol);
    meta.config["seed"] = std::to_string(cfg.seed);
    if (cfg.command == "fit") meta.config["per_pair"] = std::to_string(cfg.per_pair);
    if (cfg.command == "finetune") {
        meta.config["budget"] = std::to_string(cfg.budget);
        meta.config["family"] = cfg.family;
    }
    return meta;
}

ScenarioBundle build_scenario(const RunConfig& cfg) {
    ScenarioOverrides overrides;
    overrides.states = cfg.states;
    overrides.actions = cfg.actions;
    overrides.noise_nodes = cfg.noise_nodes;
    try {
        return make_scenario(cfg.scenario, overrides);
    } catch (const std::invalid_argument& e) {
        throw CliError(kExitBadScenario, e.what());
    }
}

SolveOptions solve_options(const RunConfig& cfg) {
    SolveOptions options;
    options.tol = cfg.tol;
    return options;
}

void run_solve(const RunConfig& cfg, const fs::path& dir) {
    const auto bundle = build_scenario(cfg);
    const Solution solution = solve_mdp(bundle.mdp, solve_options(cfg));
    write_solution_csv(dir / "solution.csv", bundle.mdp.states, solution);
    write_solution_q_csv(dir / "solution_q.csv", bundle.mdp.states, bundle.mdp.actions, solution);
    write_info_json(dir / "run.json", make_meta(cfg),
                    {{"iterations", static_cast<double>(solution.iterations)},
                     {"residual", solution.residual}});
}

void run_fit(const RunConfig& cfg, const fs::path& dir) {
    const auto bundle = build_scenario(cfg);
    std::map<std::string, double> numbers;
    DeterministicModel mean_fit;
    DeterministicModel mode_map;
    if (cfg.seed != 0) {
        const auto data = sample_transitions(bundle.mdp, cfg.per_pair, cfg.seed);
        write_dataset_csv(dir / "dataset.csv", data);
        mean_fit = fit_expected_value(bundle.mdp, data);
        mode_map = fit_mle(bundle.mdp, data).mode_map;
        numbers["records"] = static_cast<double>(data.records.size());
    } else {
        mean_fit = fit_expected_value(bundle.mdp);
        mode_map = fit_mle(bundle.mdp).mode_map;
    }
    write_model_csv(dir / "model.csv", bundle.mdp.states, bundle.mdp.actions, mean_fit);
    write_model_csv(dir / "model_mode.csv", bundle.mdp.states, bundle.mdp.actions, mode_map);
    write_info_json(dir / "run.json", make_meta(cfg), numbers);
}

void run_audit(const RunConfig& cfg, const fs::path& dir) {
    const auto bundle = build_scenario(cfg);
    const Solution true_solution = solve_mdp(bundle.mdp, solve_options(cfg));
    AuditOptions options;
    options.solve = solve_options(cfg);
    options.range_lo = bundle.report_range.first;
    options.range_hi = bundle.report_range.second;
    const ConditionReport report =
        audit_model(bundle.mdp, true_solution, PredictiveModel(bundle.nominal_model), options);
    write_report_json(dir / "report.json", report, make_meta(cfg));
    write_delta_field_csv(dir / "delta_field.csv", bundle.mdp.states, bundle.mdp.actions,
                          report.delta_field);
    write_alpha0_csv(dir / "alpha0.csv", report.alpha0);
}

void run_synthesize(const RunConfig& cfg, const fs::path& dir) {
    if (!cfg.delta) throw CliError(kExitBadScenario, "synthesize requires --delta");
    const auto bundle = build_scenario(cfg);
    const Solution true_solution = solve_mdp(bundle.mdp, solve_options(cfg));
    SynthesisOptions synthesis;
    synthesis.metrics_lo = bundle.report_range.first;
    synthesis.metrics_hi = bundle.report_range.second;
    const SynthesizedModel synth =
        synthesize_model(bundle.mdp, true_solution, *cfg.delta, synthesis);
    write_model_csv(dir / "model.csv", bundle.mdp.states, bundle.mdp.actions, synth.model);

    std::map<std::string, double> numbers{
        {"delta", *cfg.delta},
        {"undefined_count", static_cast<double>(synth.diagnostics.undefined_in_range)},
        {"max_jump", synth.diagnostics.max_jump},
        {"continuous", synth.diagnostics.continuous ? 1.0 : 0.0},
        {"support_violations", static_cast<double>(synth.diagnostics.support_violations)},
    };
    const Table field = delta_residual_partial(bundle.mdp, true_solution, synth.model);
    numbers["residual_spread"] = field_spread(field);
    if (synth.diagnostics.undefined_in_range == 0) {
        const Solution model_solution =
            solve_mdp(induced_mdp_interp(synth.completed(), bundle.mdp), solve_options(cfg));
        const double tie_tol = rounding_tie_tol(bundle.mdp, true_solution,
                                                bundle.report_range.first,
                                                bundle.report_range.second);
        const auto agree = argmax_agreement(true_solution, model_solution, tie_tol);
        numbers["agreement_fraction"] =
            agreement_fraction(agree, bundle.mdp.states, bundle.report_range.first,
                               bundle.report_range.second);
    }
    write_info_json(dir / "run.json", make_meta(cfg), numbers);
}

void run_sweep(const RunConfig& cfg, const fs::path& dir) {
    if (cfg.deltas.empty()) throw CliError(kExitBadScenario, "sweep requires --deltas");
    const auto bundle = build_scenario(cfg);
    const Solution true_solution = solve_mdp(bundle.mdp, solve_options(cfg));
    SweepOptions options;
    options.solve = solve_options(cfg);
    options.range_lo = bundle.report_range.first;
    options.range_hi = bundle.report_range.second;
    const auto rows = sweep_delta(bundle.mdp, true_solution, cfg.deltas, options);
    write_sweep_csv(dir / "sweep.csv", rows);
    write_info_json(dir / "run.json", make_meta(cfg),
                    {{"rows", static_cast<double>(rows.size())}});
}

void run_finetune(const RunConfig& cfg, const fs::path& dir) {
    const auto bundle = build_scenario(cfg);
    const ModelFamily family = family_from_name(cfg.family);
    const ParametricModel affine =
        affine_least_squares(bundle.nominal_model, bundle.mdp.states, bundle.mdp.actions);
    const ParametricModel theta0 = embed_affine(family, affine, bundle.mdp.states);

    FineTuneOptions options;
    options.solve = solve_options(cfg);
    options.init_lo = bundle.report_range.first;
    options.init_hi = bundle.report_range.second;
    const FineTuneResult result =
        fine_tune(family, theta0.theta, bundle.mdp, cfg.budget, options);

    write_trace_csv(dir / "finetune_trace.csv", result.trace);
    write_model_csv(dir / "model.csv", bundle.mdp.states, bundle.mdp.actions,
                    to_deterministic(result.model, bundle.mdp.states, bundle.mdp.actions));
    write_info_json(dir / "run.json", make_meta(cfg),
                    {{"initial_objective", result.initial_objective},
                     {"final_objective", result.final_objective},
                     {"accepted_steps", static_cast<double>(result.trace.size() - 1)}},
                    {{"family", family_name(family)}});
}

void run_reproduce(const RunConfig& cfg, const fs::path& dir) {
    const auto bundle = build_scenario(cfg);
    const Solution true_solution = solve_mdp(bundle.mdp, solve_options(cfg));
    write_solution_csv(dir / "true_solution.csv", bundle.mdp.states, true_solution);
    write_solution_q_csv(dir / "true_solution_q.csv", bundle.mdp.states, bundle.mdp.actions,
                         true_solution);
    write_model_csv(dir / "model.csv", bundle.mdp.states, bundle.mdp.actions,
                    bundle.nominal_model);

    const Mdp model_mdp = induced_mdp(bundle.nominal_model, bundle.mdp);
    const Solution model_solution = solve_mdp(model_mdp, solve_options(cfg));
    write_solution_csv(dir / "model_solution.csv", bundle.mdp.states, model_solution);
    write_solution_q_csv(dir / "model_solution_q.csv", bundle.mdp.states, bundle.mdp.actions,
                         model_solution);

    AuditOptions options;
    options.solve = solve_options(cfg);
    options.range_lo = bundle.report_range.first;
    options.range_hi = bundle.report_range.second;
    const ConditionReport report =
        audit_model(bundle.mdp, true_solution, PredictiveModel(bundle.nominal_model), options);
    write_report_json(dir / "report.json", report, make_meta(cfg));
    write_delta_field_csv(dir / "delta_field.csv", bundle.mdp.states, bundle.mdp.actions,
                          report.delta_field);
    write_alpha0_csv(dir / "alpha0.csv", report.alpha0);
}

int run(const RunConfig& cfg) {
    for (const auto& [label, value] :
         {std::pair<const char*, double>{"states", cfg.states ? *cfg.states : 1.0},
          {"actions", cfg.actions ? *cfg.actions : 1.0},
          {"noise-nodes", cfg.noise_nodes ? *cfg.noise_nodes : 1.0},
          {"tol", cfg.tol},
          {"per-pair", static_cast<double>(cfg.per_pair)},
          {"budget", static_cast<double>(cfg.budget)}}) {
        if (!(value > 0.0))
            throw CliError(kExitBadScenario, std::string(label) + " must be positive");
    }

    const fs::path dir = resolve_out_dir(cfg);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw CliError(kExitUnwritable, "cannot create output directory " + dir.string());
    { // probe writability up front
        const fs::path probe_path = dir / ".write_probe";
        std::ofstream probe(probe_path, std::ios::binary);
        if (!probe)
            throw CliError(kExitUnwritable, "output directory not writable: " + dir.string());
        probe.close();
        fs::remove(probe_path, ec);
    }

    if (cfg.command == "solve") run_solve(cfg, dir);
    else if (cfg.command == "fit") run_fit(cfg, dir);
    else if (cfg.command == "audit") run_audit(cfg, dir);
    else if (cfg.command == "synthesize") run_synthesize(cfg, dir);
    else if (cfg.command == "sweep") run_sweep(cfg, dir);
    else if (cfg.command == "finetune") run_finetune(cfg, dir);
    else if (cfg.command == "reproduce") run_reproduce(cfg, dir);
    else throw CliError(kExitBadScenario, "unknown command " + cfg.command);
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "domlab: grid-MDP laboratory for decision-oriented predictive models.\n"
        "Artifacts are CSV/JSON files; identical inputs produce byte-identical outputs.\n"
        "Exit codes: 0 ok, 2 unknown scenario or bad option, 3 unwritable output path,\n"
        "4 solver non-convergence, 5 internal error."};
    app.require_subcommand(1);

    RunConfig cfg;
    std::string config_path;
    std::optional<int> states_v, actions_v, nodes_v;
    std::optional<double> delta_v;
    std::vector<double> deltas_v;

    const std::vector<std::pair<const char*, const char*>> subcommands{
        {"solve", "solve a scenario exactly and dump V*/Q*/policy"},
        {"fit", "fit conditional-mean and maximum-likelihood models"},
        {"audit", "audit the conditional-mean model against the optimality conditions"},
        {"synthesize", "construct a decision-oriented deterministic model at --delta"},
        {"sweep", "synthesize across --deltas and summarize the diagnostics"},
        {"finetune", "derivative-free closed-loop tuning of a parametric model"},
        {"reproduce", "true-vs-model solutions, policies and condition report"},
    };
    for (const auto& [name, blurb] : subcommands) {
        auto* sub = app.add_subcommand(name, blurb);
        sub->add_option("--states", states_v, "state grid points");
        sub->add_option("--actions", actions_v, "action grid points");
        sub->add_option("--noise-nodes", nodes_v, "noise pmf nodes (odd)");
        sub->add_option("--delta", delta_v, "sufficient-condition offset");
        sub->add_option("--deltas", deltas_v, "comma-separated offsets")
            ->delimiter(',')
            ->expected(1, 100000);
        sub->add_option("--seed", cfg.seed, "64-bit seed (0 = exact fits)");
        sub->add_option("--out", cfg.out, "output directory");
        sub->add_option("--tol", cfg.tol, "solver tolerance");
        sub->add_option("--per-pair", cfg.per_pair, "samples per (s,a) pair for fit --seed");
        sub->add_option("--budget", cfg.budget, "fine-tuning sweep budget");
        sub->add_option("--family", cfg.family, "parametric family: affine | pw_affine");
        sub->add_option("--config", config_path,
                        "flat key=value config file; command-line flags win");
        sub->add_option("scenario", cfg.scenario, "battery1 | battery2 | lqr | random:<seed>")
            ->required();
        sub->callback([&cfg, name] { cfg.command = name; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        cfg.states = states_v;
        cfg.actions = actions_v;
        cfg.noise_nodes = nodes_v;
        cfg.delta = delta_v;
        cfg.deltas = deltas_v;

        if (!config_path.empty()) {
            const auto file_cfg = load_config_file(config_path);
            const CLI::App* sub = app.get_subcommands().front();
            const auto from_file = [&](const char* flag,
                                       const char* key) -> std::optional<std::string> {
                if (sub->get_option(flag)->count() > 0) return std::nullopt;  // flags win
                const auto it = file_cfg.find(key);
                if (it == file_cfg.end()) return std::nullopt;
                return it->second;
            };
            if (auto v = from_file("--states", "states")) cfg.states = std::stoi(*v);
            if (auto v = from_file("--actions", "actions")) cfg.actions = std::stoi(*v);
            if (auto v = from_file("--noise-nodes", "noise_nodes"))
                cfg.noise_nodes = std::stoi(*v);
            if (auto v = from_file("--delta", "delta")) cfg.delta = std::stod(*v);
            if (auto v = from_file("--deltas", "deltas")) {
                cfg.deltas.clear();
                std::size_t pos = 0;
                while (pos != std::string::npos) {
                    const auto comma = v->find(',', pos);
                    cfg.deltas.push_back(std::stod(v->substr(pos, comma - pos)));
                    pos = comma == std::string::npos ? comma : comma + 1;
                }
            }
            if (auto v = from_file("--seed", "seed")) cfg.seed = std::stoull(*v);
            if (auto v = from_file("--out", "out")) cfg.out = *v;
            if (auto v = from_file("--tol", "tol")) cfg.tol = std::stod(*v);
            if (auto v = from_file("--per-pair", "per_pair")) cfg.per_pair = std::stoi(*v);
            if (auto v = from_file("--budget", "budget")) cfg.budget = std::stol(*v);
            if (auto v = from_file("--family", "family")) cfg.family = *v;
        }

        return run(cfg);
    } catch (const CliError& e) {
        std::cout << error_json(e.what(), e.code) << std::endl;
        return e.code;
    } catch (const SolveError& e) {
        std::cout << error_json(e.what(), kExitNoConvergence) << std::endl;
        return kExitNoConvergence;
    } catch (const std::invalid_argument& e) {
        std::cout << error_json(e.what(), kExitBadScenario) << std::endl;
        return kExitBadScenario;
    } catch (const std::exception& e) {
        std::cout << error_json(e.what(), kExitInternal) << std::endl;
        return kExitInternal;
    }
}
