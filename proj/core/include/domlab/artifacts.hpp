#pragma once

#include "domlab/optimality.hpp"
#include "domlab/synthesis.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace domlab {

/// Shortest decimal representation that round-trips the exact double.
std::string format_double(double value);

/// Context stamped into every JSON artifact.
struct ArtifactMeta {
    std::string command;
    std::string scenario;
    std::uint64_t seed = 0;
    std::map<std::string, std::string> config;  // resolved key/value echo
};

// CSV writers. Comma-separated, \n line endings, one header row, UTF-8.
void write_solution_csv(const std::filesystem::path& path, const StateGrid& states,
                        const Solution& solution);                       // s,v_star
void write_solution_q_csv(const std::filesystem::path& path, const StateGrid& states,
                          const ActionGrid& actions, const Solution& solution);
                                                    // s,a,q_star,advantage,policy_flag
void write_model_csv(const std::filesystem::path& path, const StateGrid& states,
                     const ActionGrid& actions, const DeterministicModel& model);
                                                    // s,a,f,defined
void write_dataset_csv(const std::filesystem::path& path, const TransitionDataset& data);
                                                    // s_idx,a_idx,snext_idx
void write_sweep_csv(const std::filesystem::path& path, std::span<const SweepRow> rows);
                         // delta,undefined_count,max_jump,continuous,agreement_fraction
void write_delta_field_csv(const std::filesystem::path& path, const StateGrid& states,
                           const ActionGrid& actions, const Table& field);  // s,a,delta
void write_alpha0_csv(const std::filesystem::path& path, const TabulatedK& alpha0);  // x,alpha0
void write_trace_csv(const std::filesystem::path& path, std::span<const TunePoint> trace);
                                                    // sweep,objective,theta...

/// report.json with delta_spread, agreement_fraction, sandwich_holds,
/// value_gap plus the meta header.
void write_report_json(const std::filesystem::path& path, const ConditionReport& report,
                       const ArtifactMeta& meta);

/// Free-form JSON artifact carrying the meta header plus extra string/number
/// fields (used by commands that have no ConditionReport).
void write_info_json(const std::filesystem::path& path, const ArtifactMeta& meta,
                     const std::map<std::string, double>& numbers,
                     const std::map<std::string, std::string>& strings = {});

/// One-line machine-readable error JSON: {"error": ..., "code": ...}.
std::string error_json(const std::string& message, int code);

} // namespace domlab
