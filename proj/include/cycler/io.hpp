#pragma once

// JSON and CSV interchange: trajectories, reward traces, environment and QS
// configurations, monitor traces, oracle reports, and training jobs. Every
// object kind is parsed strictly; unknown keys are rejected.

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "cycler/envs.hpp"
#include "cycler/exact.hpp"
#include "cycler/learn.hpp"
#include "cycler/product.hpp"
#include "cycler/shaping.hpp"

namespace cycler::io {

using nlohmann::json;

class SchemaError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

json read_json_file(const std::filesystem::path& path);

/// {"kind": "trajectory", "version": 1, "aps": [...], "steps": [...]}. Each step
/// holds s, b, a (array, {"jump": element id}, or null on the last step), edge,
/// letter (proposition names), r_mdp and optionally rho (name -> robustness).
json trajectory_to_json(const product::ProductTrajectory& traj, const automaton::Ldba& ldba);

/// Missing b/edge fields are filled by replaying letters; present ones must
/// agree with the replay. Frontiers are always recomputed.
product::ProductTrajectory trajectory_from_json(const json& j, const automaton::Ldba& ldba);

json reward_trace_to_json(const shaping::RewardTrace& rt, const automaton::Ldba& ldba);
std::string reward_trace_to_csv(const shaping::RewardTrace& rt);

envs::FlatWorldConfig flatworld_from_json(const json& j);
json flatworld_to_json(const envs::FlatWorldConfig& cfg);

envs::GridLabSpec gridlab_from_json(const json& j);

/// {"rho_max": .., "rho_min": .., "thresholds": {"r": 0, ...}}; missing
/// thresholds default to 0.
ltl::QSConfig qs_config_from_json(const json& j, const ltl::ApSet& aps);

/// Array of {"<ap>": value, ...} objects, one per time step.
std::vector<ltl::RobustnessVector> monitor_trace_from_json(const json& j, const ltl::ApSet& aps);

json exact_report_to_json(const exact::ExactReport& rep, std::size_t max_listed = 20);

learn::TrainConfig train_config_from_json(const json& j);
json train_config_to_json(const learn::TrainConfig& cfg);

/// Everything `cycler train` needs. The automaton path resolves against `base`;
/// output paths are kept as written.
struct TrainJob {
    learn::TrainConfig train;
    std::filesystem::path ldba;
    envs::FlatWorldConfig flatworld;
    std::uint64_t bonus_seed = 0;
    std::filesystem::path checkpoint;
    std::filesystem::path log_csv;
    int eval_horizon = 360;
    int eval_rollouts = 10;
};

TrainJob train_job_from_json(const json& j, const std::filesystem::path& base);

}  // namespace cycler::io
