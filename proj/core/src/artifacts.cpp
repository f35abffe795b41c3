#include "domlab/artifacts.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <system_error>

#include <json.hpp>

namespace domlab {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);  // binary keeps \n endings everywhere
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

} // namespace

std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    if (res.ec != std::errc())
        throw std::runtime_error("format_double: conversion failed");
    return std::string(buf, res.ptr);
}

void write_solution_csv(const std::filesystem::path& path, const StateGrid& states,
                        const Solution& solution) {
    auto out = open_out(path);
    out << "s,v_star\n";
    for (int s = 0; s < states.size(); ++s)
        out << format_double(states[s]) << ',' << format_double(solution.v_star[s]) << '\n';
}

void write_solution_q_csv(const std::filesystem::path& path, const StateGrid& states,
                          const ActionGrid& actions, const Solution& solution) {
    auto out = open_out(path);
    out << "s,a,q_star,advantage,policy_flag\n";
    for (int s = 0; s < states.size(); ++s)
        for (int a = 0; a < actions.size(); ++a)
            out << format_double(states[s]) << ',' << format_double(actions[a]) << ','
                << format_double(solution.q_star(s, a)) << ','
                << format_double(solution.advantage(s, a)) << ','
                << (solution.policy[s] == a ? '1' : '0') << '\n';
}

void write_model_csv(const std::filesystem::path& path, const StateGrid& states,
                     const ActionGrid& actions, const DeterministicModel& model) {
    auto out = open_out(path);
    out << "s,a,f,defined\n";
    for (int s = 0; s < states.size(); ++s)
        for (int a = 0; a < actions.size(); ++a) {
            const bool defined = model.is_defined(s, a);
            out << format_double(states[s]) << ',' << format_double(actions[a]) << ','
                << (defined ? format_double(model.f(s, a)) : "nan") << ','
                << (defined ? '1' : '0') << '\n';
        }
}

void write_dataset_csv(const std::filesystem::path& path, const TransitionDataset& data) {
    auto out = open_out(path);
    out << "s_idx,a_idx,snext_idx\n";
    for (const auto& rec : data.records)
        out << rec.s << ',' << rec.a << ',' << rec.s_next << '\n';
}

void write_sweep_csv(const std::filesystem::path& path, std::span<const SweepRow> rows) {
    auto out = open_out(path);
    out << "delta,undefined_count,max_jump,continuous,agreement_fraction\n";
    for (const auto& row : rows)
        out << format_double(row.delta) << ',' << row.undefined_count << ','
            << format_double(row.max_jump) << ',' << (row.continuous ? '1' : '0') << ','
            << format_double(row.agreement_fraction) << '\n';
}

void write_delta_field_csv(const std::filesystem::path& path, const StateGrid& states,
                           const ActionGrid& actions, const Table& field) {
    auto out = open_out(path);
    out << "s,a,delta\n";
    for (int s = 0; s < states.size(); ++s)
        for (int a = 0; a < actions.size(); ++a)
            out << format_double(states[s]) << ',' << format_double(actions[a]) << ','
                << format_double(field(s, a)) << '\n';
}

void write_alpha0_csv(const std::filesystem::path& path, const TabulatedK& alpha0) {
    auto out = open_out(path);
    out << "x,alpha0\n";
    for (std::size_t i = 0; i < alpha0.x.size(); ++i)
        out << format_double(alpha0.x[i]) << ',' << format_double(alpha0.value[i]) << '\n';
}

void write_trace_csv(const std::filesystem::path& path, std::span<const TunePoint> trace) {
    auto out = open_out(path);
    out << "sweep,objective";
    if (!trace.empty())
        for (std::size_t i = 0; i < trace.front().theta.size(); ++i) out << ",theta" << i;
    out << '\n';
    for (const auto& point : trace) {
        out << point.sweep << ',' << format_double(point.objective);
        for (double t : point.theta) out << ',' << format_double(t);
        out << '\n';
    }
}

namespace {

nlohmann::ordered_json meta_json(const ArtifactMeta& meta) {
    nlohmann::ordered_json j;
    j["command"] = meta.command;
    j["scenario"] = meta.scenario;
    j["seed"] = meta.seed;
    nlohmann::ordered_json cfg;
    for (const auto& [key, value] : meta.config) cfg[key] = value;
    j["config"] = cfg;
    return j;
}

void dump_json(const std::filesystem::path& path, const nlohmann::ordered_json& j) {
    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

} // namespace

void write_report_json(const std::filesystem::path& path, const ConditionReport& report,
                       const ArtifactMeta& meta) {
    nlohmann::ordered_json j = meta_json(meta);
    j["delta_spread"] = report.delta_spread;
    j["agreement_fraction"] = report.agreement_frac;
    j["sandwich_holds"] = report.sandwich_holds;
    j["value_gap"] = report.value_gap;
    dump_json(path, j);
}

void write_info_json(const std::filesystem::path& path, const ArtifactMeta& meta,
                     const std::map<std::string, double>& numbers,
                     const std::map<std::string, std::string>& strings) {
    nlohmann::ordered_json j = meta_json(meta);
    for (const auto& [key, value] : numbers) j[key] = value;
    for (const auto& [key, value] : strings) j[key] = value;
    dump_json(path, j);
}

std::string error_json(const std::string& message, int code) {
    nlohmann::ordered_json j;
    j["error"] = message;
    j["code"] = code;
    return j.dump();
}

} // namespace domlab
