#pragma once

// Environments: the continuous FlatWorld navigation task and GridLab, a small
// deterministic tabular MDP used by the exact oracle.

#include <array>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "cycler/ltl.hpp"

namespace cycler::envs {

using State = std::vector<double>;

struct StepOutcome {
    State next;
    double reward = 0.0;
};

/// A labeled MDP with deterministic dynamics. Continuous actions are vectors of
/// length action_dim(); discrete environments take a single-entry vector holding
/// the action index.
class Environment {
public:
    virtual ~Environment() = default;

    virtual const ltl::ApSet& aps() const = 0;
    virtual std::size_t state_dim() const = 0;
    virtual std::size_t action_dim() const = 0;
    /// Zero for continuous action spaces.
    virtual std::size_t num_discrete_actions() const { return 0; }
    virtual double action_bound() const { return 1.0; }

    virtual State initial_state() const = 0;
    virtual StepOutcome step(const State& s, const std::vector<double>& action) const = 0;
    virtual ltl::Letter label(const State& s) const = 0;
    /// Per-proposition robustness; empty if the environment has none.
    virtual ltl::RobustnessVector robustness(const State& s) const = 0;
    virtual ltl::QSConfig qs_config() const = 0;
    /// Observation features in roughly [-1, 1].
    virtual std::vector<double> normalize(const State& s) const = 0;
    virtual std::size_t observation_dim() const = 0;
};

using Vec2 = std::array<double, 2>;

struct Region {
    std::string name;
    Vec2 center{};
    double radius = 0.0;
};

struct BonusRegion {
    Vec2 center{};
    double radius = 0.0;
    double reward = 1.0;
};

struct FlatWorldConfig {
    std::vector<Region> regions;
    std::vector<BonusRegion> bonus_regions;
    double action_bound = 1.0;
    Vec2 start{-1.0, -1.0};
    double world_min = -1.5;  // square world [world_min, world_max]^2
    double world_max = 1.5;

    /// Task regions for r, g, b, y plus `num_bonus` bonus regions drawn from `seed`.
    static FlatWorldConfig defaults(std::uint64_t seed, int num_bonus = 8);
    void validate() const;

    double rho_min() const;
    double rho_max() const;
};

/// x' = clip(x + a / 10) and the summed reward of bonus regions containing x'.
StepOutcome fw_step(const Vec2& x, const Vec2& a, const FlatWorldConfig& cfg);
std::set<std::string> fw_label(const Vec2& x, const FlatWorldConfig& cfg);
/// radius - distance per region, clipped to [rho_min, rho_max]; thresholds are 0.
ltl::RobustnessVector fw_robustness(const Vec2& x, const FlatWorldConfig& cfg);

class FlatWorld final : public Environment {
public:
    explicit FlatWorld(FlatWorldConfig cfg);

    const FlatWorldConfig& config() const { return cfg_; }
    const ltl::ApSet& aps() const override { return aps_; }
    std::size_t state_dim() const override { return 2; }
    std::size_t action_dim() const override { return 2; }
    double action_bound() const override { return cfg_.action_bound; }
    State initial_state() const override { return {cfg_.start[0], cfg_.start[1]}; }
    /// Actions outside the bound are clipped before fw_step.
    StepOutcome step(const State& s, const std::vector<double>& action) const override;
    ltl::Letter label(const State& s) const override;
    ltl::RobustnessVector robustness(const State& s) const override;
    ltl::QSConfig qs_config() const override;
    std::vector<double> normalize(const State& s) const override;
    std::size_t observation_dim() const override { return 2; }

private:
    FlatWorldConfig cfg_;
    ltl::ApSet aps_;
};

struct GridLab {
    ltl::ApSet aps;
    int num_states = 0;
    int num_actions = 0;
    std::vector<std::vector<int>> next;       // [state][action]
    std::vector<std::vector<double>> reward;  // [state][action]
    std::vector<ltl::Letter> labels;          // [state]
    int start = 0;

    double reward_min() const;
    double reward_max() const;
};

struct GridLabSpec {
    std::vector<std::string> aps;
    int num_states = 0;
    int num_actions = 0;
    std::vector<std::vector<int>> next;
    std::vector<std::vector<double>> reward;
    std::vector<std::vector<std::string>> labels;
    int start = 0;
};

/// Validates totality of the tables and label names; throws ltl::DomainError.
GridLab gridlab_build(const GridLabSpec& spec);

class GridLabEnv final : public Environment {
public:
    explicit GridLabEnv(GridLab grid) : grid_(std::move(grid)) {}

    const GridLab& grid() const { return grid_; }
    const ltl::ApSet& aps() const override { return grid_.aps; }
    std::size_t state_dim() const override { return 1; }
    std::size_t action_dim() const override { return 1; }
    std::size_t num_discrete_actions() const override { return static_cast<std::size_t>(grid_.num_actions); }
    State initial_state() const override { return {static_cast<double>(grid_.start)}; }
    StepOutcome step(const State& s, const std::vector<double>& action) const override;
    ltl::Letter label(const State& s) const override;
    ltl::RobustnessVector robustness(const State&) const override { return {}; }
    ltl::QSConfig qs_config() const override { return ltl::QSConfig::uniform(grid_.aps.size(), -1.0, 1.0); }
    std::vector<double> normalize(const State& s) const override;
    std::size_t observation_dim() const override { return static_cast<std::size_t>(grid_.num_states); }

private:
    GridLab grid_;
};

}  // namespace cycler::envs
