#include "domlab/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace domlab {

namespace {

std::string pair_list_message(const std::string& prefix,
                              const std::vector<std::pair<int, int>>& pairs) {
    std::string msg = prefix;
    const std::size_t shown = std::min<std::size_t>(pairs.size(), 8);
    for (std::size_t i = 0; i < shown; ++i) {
        msg += (i == 0 ? " " : ", ");
        msg += "(" + std::to_string(pairs[i].first) + "," + std::to_string(pairs[i].second) + ")";
    }
    if (pairs.size() > shown) msg += ", ... " + std::to_string(pairs.size()) + " total";
    return msg;
}

// uniform double in [0, 1) from the top 53 bits; avoids distribution
// implementation differences across standard libraries
double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

} // namespace

DeterministicModel DeterministicModel::make(int n_states, int n_actions) {
    DeterministicModel m;
    m.f = Table(n_states, n_actions);
    m.defined.assign(static_cast<std::size_t>(n_states) * n_actions, 1);
    return m;
}

bool DeterministicModel::fully_defined() const {
    return std::all_of(defined.begin(), defined.end(), [](char c) { return c != 0; });
}

std::vector<std::pair<int, int>> DeterministicModel::undefined_pairs() const {
    std::vector<std::pair<int, int>> out;
    for (int s = 0; s < f.rows(); ++s)
        for (int a = 0; a < f.cols(); ++a)
            if (!is_defined(s, a)) out.emplace_back(s, a);
    return out;
}

void DeterministicModel::validate(const StateGrid& grid) const {
    for (int s = 0; s < f.rows(); ++s)
        for (int a = 0; a < f.cols(); ++a)
            if (is_defined(s, a) && (f(s, a) < grid.lo() || f(s, a) > grid.hi()))
                throw std::invalid_argument("DeterministicModel: prediction outside state bounds");
}

TransitionDataset sample_transitions(const Mdp& mdp, int per_pair, std::uint64_t seed) {
    if (per_pair < 1) throw std::invalid_argument("sample_transitions: per_pair must be >= 1");
    TransitionDataset data;
    data.seed = seed;
    data.records.reserve(static_cast<std::size_t>(mdp.n_states()) * mdp.n_actions() * per_pair);
    std::mt19937_64 rng(seed);
    for (int s = 0; s < mdp.n_states(); ++s) {
        for (int a = 0; a < mdp.n_actions(); ++a) {
            const auto row = mdp.kernel.row(s, a);
            for (int k = 0; k < per_pair; ++k) {
                const double u = uniform01(rng);
                double cum = 0.0;
                int next = row.back().next;
                for (const auto& e : row) {
                    cum += e.prob;
                    if (u < cum) {
                        next = e.next;
                        break;
                    }
                }
                data.records.push_back({s, a, next});
            }
        }
    }
    return data;
}

DeterministicModel fit_expected_value(const Mdp& mdp) {
    auto model = DeterministicModel::make(mdp.n_states(), mdp.n_actions());
    for (int s = 0; s < mdp.n_states(); ++s)
        for (int a = 0; a < mdp.n_actions(); ++a)
            model.f(s, a) = mdp.states.clamp(mdp.kernel.mean_next(mdp.states, s, a));
    return model;
}

DeterministicModel fit_expected_value(const Mdp& mdp, const TransitionDataset& data) {
    if (data.records.empty()) throw std::invalid_argument("fit_expected_value: empty dataset");
    const int ns = mdp.n_states();
    const int na = mdp.n_actions();
    Table sums(ns, na);
    Table counts(ns, na);
    for (const auto& rec : data.records) {
        if (rec.s < 0 || rec.s >= ns || rec.a < 0 || rec.a >= na || rec.s_next < 0 ||
            rec.s_next >= ns)
            throw std::invalid_argument("fit_expected_value: record index out of range");
        sums(rec.s, rec.a) += mdp.states[rec.s_next];
        counts(rec.s, rec.a) += 1.0;
    }
    std::vector<std::pair<int, int>> missing;
    for (int s = 0; s < ns; ++s)
        for (int a = 0; a < na; ++a)
            if (counts(s, a) == 0.0) missing.emplace_back(s, a);
    if (!missing.empty())
        throw FitError(pair_list_message("fit_expected_value: dataset misses pairs", missing),
                       std::move(missing));
    auto model = DeterministicModel::make(ns, na);
    for (int s = 0; s < ns; ++s)
        for (int a = 0; a < na; ++a)
            model.f(s, a) = mdp.states.clamp(sums(s, a) / counts(s, a));
    return model;
}

MleFit fit_mle(const Mdp& mdp) {
    MleFit fit;
    fit.distribution.kernel = mdp.kernel;
    fit.mode_map = DeterministicModel::make(mdp.n_states(), mdp.n_actions());
    for (int s = 0; s < mdp.n_states(); ++s) {
        for (int a = 0; a < mdp.n_actions(); ++a) {
            const auto row = mdp.kernel.row(s, a);
            int best = row.front().next;
            double best_p = row.front().prob;
            for (const auto& e : row) {
                if (e.prob > best_p) {  // strict: ties keep the lower state index
                    best_p = e.prob;
                    best = e.next;
                }
            }
            fit.mode_map.f(s, a) = mdp.states[best];
        }
    }
    return fit;
}

MleFit fit_mle(const Mdp& mdp, const TransitionDataset& data) {
    if (data.records.empty()) throw std::invalid_argument("fit_mle: empty dataset");
    const int ns = mdp.n_states();
    const int na = mdp.n_actions();
    std::vector<std::vector<long>> counts(static_cast<std::size_t>(ns) * na,
                                          std::vector<long>(ns, 0));
    for (const auto& rec : data.records) {
        if (rec.s < 0 || rec.s >= ns || rec.a < 0 || rec.a >= na || rec.s_next < 0 ||
            rec.s_next >= ns)
            throw std::invalid_argument("fit_mle: record index out of range");
        ++counts[static_cast<std::size_t>(rec.s) * na + rec.a][rec.s_next];
    }
    std::vector<std::pair<int, int>> missing;
    MleFit fit;
    fit.distribution.kernel = TransitionKernel(ns, na);
    fit.mode_map = DeterministicModel::make(ns, na);
    for (int s = 0; s < ns; ++s) {
        for (int a = 0; a < na; ++a) {
            const auto& c = counts[static_cast<std::size_t>(s) * na + a];
            long total = 0;
            for (long n : c) total += n;
            if (total == 0) {
                missing.emplace_back(s, a);
                continue;
            }
            std::vector<KernelEntry> entries;
            int mode = 0;
            long mode_count = -1;
            for (int next = 0; next < ns; ++next) {
                if (c[next] > 0)
                    entries.push_back({next, static_cast<double>(c[next]) / total});
                if (c[next] > mode_count) {
                    mode_count = c[next];
                    mode = next;
                }
            }
            fit.distribution.kernel.set_row(s, a, std::move(entries));
            fit.mode_map.f(s, a) = mdp.states[mode];
        }
    }
    if (!missing.empty())
        throw FitError(pair_list_message("fit_mle: dataset misses pairs", missing),
                       std::move(missing));
    return fit;
}

Mdp induced_mdp(const DeterministicModel& model, const Mdp& reference) {
    if (model.f.rows() != reference.n_states() || model.f.cols() != reference.n_actions())
        throw std::invalid_argument("induced_mdp: model shape mismatch");
    if (!model.fully_defined()) {
        auto pairs = model.undefined_pairs();
        throw FitError(pair_list_message("induced_mdp: model undefined at pairs", pairs),
                       std::move(pairs));
    }
    Mdp out = reference;
    out.kernel = TransitionKernel(reference.n_states(), reference.n_actions());
    for (int s = 0; s < reference.n_states(); ++s)
        for (int a = 0; a < reference.n_actions(); ++a)
            out.kernel.set_row(s, a, {{reference.states.nearest_index(model.f(s, a)), 1.0}});
    return out;
}

Mdp induced_mdp_interp(const DeterministicModel& model, const Mdp& reference) {
    if (model.f.rows() != reference.n_states() || model.f.cols() != reference.n_actions())
        throw std::invalid_argument("induced_mdp_interp: model shape mismatch");
    if (!model.fully_defined()) {
        auto pairs = model.undefined_pairs();
        throw FitError(pair_list_message("induced_mdp_interp: model undefined at pairs", pairs),
                       std::move(pairs));
    }
    const StateGrid& grid = reference.states;
    Mdp out = reference;
    out.kernel = TransitionKernel(reference.n_states(), reference.n_actions());
    for (int s = 0; s < reference.n_states(); ++s) {
        for (int a = 0; a < reference.n_actions(); ++a) {
            const double f = grid.clamp(model.f(s, a));
            int cell = static_cast<int>(std::floor((f - grid.lo()) / grid.spacing()));
            cell = std::min(std::max(cell, 0), grid.size() - 2);
            const double t = (f - grid[cell]) / (grid[cell + 1] - grid[cell]);
            std::vector<KernelEntry> row;
            if (1.0 - t > 0.0) row.push_back({cell, 1.0 - t});
            if (t > 0.0) row.push_back({cell + 1, t});
            out.kernel.set_row(s, a, std::move(row));
        }
    }
    return out;
}

Mdp induced_mdp(const StochasticModel& model, const Mdp& reference) {
    if (model.kernel.n_states() != reference.n_states() ||
        model.kernel.n_actions() != reference.n_actions())
        throw std::invalid_argument("induced_mdp: kernel shape mismatch");
    Mdp out = reference;
    out.kernel = model.kernel;
    return out;
}

Mdp induced_mdp(const PredictiveModel& model, const Mdp& reference) {
    return std::visit([&](const auto& m) { return induced_mdp(m, reference); }, model);
}

} // namespace domlab
