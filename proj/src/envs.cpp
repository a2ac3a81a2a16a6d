#include "cycler/envs.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace cycler::envs {

namespace {

double distance(const Vec2& a, const Vec2& b) { return std::hypot(a[0] - b[0], a[1] - b[1]); }

std::size_t as_index(double v) { return static_cast<std::size_t>(std::lround(v)); }

}  // namespace

FlatWorldConfig FlatWorldConfig::defaults(std::uint64_t seed, int num_bonus) {
    FlatWorldConfig cfg;
    cfg.regions = {
        {"r", {0.7, -1.0}, 0.35},
        {"g", {0.75, 1.0}, 0.35},
        {"b", {0.0, 0.0}, 0.4},
        {"y", {-0.9, 1.0}, 0.35},
    };
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> pos(-1.3, 1.3);
    for (int i = 0; i < num_bonus; ++i) cfg.bonus_regions.push_back({{pos(rng), pos(rng)}, 0.2, 1.0});
    return cfg;
}

void FlatWorldConfig::validate() const {
    if (!(world_min < world_max)) throw ltl::DomainError("world bounds are empty");
    if (!(action_bound > 0.0)) throw ltl::DomainError("action_bound must be positive");
    for (const auto& r : regions) {
        if (!(r.radius > 0.0)) throw ltl::DomainError("region '" + r.name + "' needs a positive radius");
    }
    for (const auto& r : bonus_regions) {
        if (!(r.radius > 0.0)) throw ltl::DomainError("bonus regions need a positive radius");
    }
    for (double c : start) {
        if (c < world_min || c > world_max) throw ltl::DomainError("start lies outside the world bounds");
    }
}

double FlatWorldConfig::rho_min() const { return -(world_max - world_min) * std::sqrt(2.0); }

double FlatWorldConfig::rho_max() const {
    double m = 0.0;
    for (const auto& r : regions) m = std::max(m, r.radius);
    return m;
}

StepOutcome fw_step(const Vec2& x, const Vec2& a, const FlatWorldConfig& cfg) {
    for (double c : a) {
        if (std::abs(c) > cfg.action_bound) throw ltl::DomainError("action component outside the action bound");
    }
    StepOutcome out;
    out.next = {std::clamp(x[0] + a[0] / 10.0, cfg.world_min, cfg.world_max),
                std::clamp(x[1] + a[1] / 10.0, cfg.world_min, cfg.world_max)};
    const Vec2 nx{out.next[0], out.next[1]};
    for (const auto& r : cfg.bonus_regions) {
        if (distance(nx, r.center) <= r.radius) out.reward += r.reward;
    }
    return out;
}

std::set<std::string> fw_label(const Vec2& x, const FlatWorldConfig& cfg) {
    std::set<std::string> out;
    for (const auto& r : cfg.regions) {
        if (distance(x, r.center) <= r.radius) out.insert(r.name);
    }
    return out;
}

ltl::RobustnessVector fw_robustness(const Vec2& x, const FlatWorldConfig& cfg) {
    ltl::RobustnessVector rv;
    for (const auto& r : cfg.regions) {
        rv.push_back(std::clamp(r.radius - distance(x, r.center), cfg.rho_min(), cfg.rho_max()));
    }
    return rv;
}

namespace {

ltl::ApSet region_aps(const FlatWorldConfig& cfg) {
    std::vector<std::string> names;
    for (const auto& r : cfg.regions) names.push_back(r.name);
    return ltl::ApSet(names);
}

}  // namespace

FlatWorld::FlatWorld(FlatWorldConfig cfg) : cfg_(std::move(cfg)), aps_(region_aps(cfg_)) { cfg_.validate(); }

StepOutcome FlatWorld::step(const State& s, const std::vector<double>& action) const {
    const Vec2 a{std::clamp(action.at(0), -cfg_.action_bound, cfg_.action_bound),
                 std::clamp(action.at(1), -cfg_.action_bound, cfg_.action_bound)};
    return fw_step({s.at(0), s.at(1)}, a, cfg_);
}

ltl::Letter FlatWorld::label(const State& s) const {
    ltl::Letter l = 0;
    const Vec2 x{s.at(0), s.at(1)};
    for (std::size_t i = 0; i < cfg_.regions.size(); ++i) {
        if (distance(x, cfg_.regions[i].center) <= cfg_.regions[i].radius) l |= ltl::Letter{1} << i;
    }
    return l;
}

ltl::RobustnessVector FlatWorld::robustness(const State& s) const { return fw_robustness({s.at(0), s.at(1)}, cfg_); }

ltl::QSConfig FlatWorld::qs_config() const {
    return ltl::QSConfig::uniform(cfg_.regions.size(), cfg_.rho_min(), cfg_.rho_max(), 0.0);
}

std::vector<double> FlatWorld::normalize(const State& s) const {
    const double mid = 0.5 * (cfg_.world_min + cfg_.world_max);
    const double half = 0.5 * (cfg_.world_max - cfg_.world_min);
    return {(s.at(0) - mid) / half, (s.at(1) - mid) / half};
}

double GridLab::reward_min() const {
    double m = 0.0;
    bool first = true;
    for (const auto& row : reward) {
        for (double r : row) {
            m = first ? r : std::min(m, r);
            first = false;
        }
    }
    return m;
}

double GridLab::reward_max() const {
    double m = 0.0;
    bool first = true;
    for (const auto& row : reward) {
        for (double r : row) {
            m = first ? r : std::max(m, r);
            first = false;
        }
    }
    return m;
}

GridLab gridlab_build(const GridLabSpec& spec) {
    GridLab g;
    g.aps = ltl::ApSet(spec.aps);
    if (spec.num_states < 1 || spec.num_actions < 1) throw ltl::DomainError("GridLab needs states and actions");
    g.num_states = spec.num_states;
    g.num_actions = spec.num_actions;
    const auto ns = static_cast<std::size_t>(spec.num_states);
    const auto na = static_cast<std::size_t>(spec.num_actions);
    if (spec.next.size() != ns) throw ltl::DomainError("transition table needs one row per state");
    if (spec.reward.size() != ns) throw ltl::DomainError("reward table needs one row per state");
    if (spec.labels.size() != ns) throw ltl::DomainError("labeling needs one entry per state");
    for (std::size_t s = 0; s < ns; ++s) {
        if (spec.next[s].size() != na) {
            throw ltl::DomainError("transition row " + std::to_string(s) + " is not total");
        }
        if (spec.reward[s].size() != na) throw ltl::DomainError("reward row " + std::to_string(s) + " is not total");
        for (int t : spec.next[s]) {
            if (t < 0 || t >= spec.num_states) throw ltl::DomainError("transition target out of range");
        }
    }
    if (spec.start < 0 || spec.start >= spec.num_states) throw ltl::DomainError("start state out of range");
    g.next = spec.next;
    g.reward = spec.reward;
    g.start = spec.start;
    for (const auto& names : spec.labels) {
        g.labels.push_back(ltl::letter_from_names(g.aps, std::set<std::string>(names.begin(), names.end())));
    }
    return g;
}

StepOutcome GridLabEnv::step(const State& s, const std::vector<double>& action) const {
    const std::size_t st = as_index(s.at(0));
    const std::size_t a = as_index(action.at(0));
    if (a >= static_cast<std::size_t>(grid_.num_actions)) throw ltl::DomainError("GridLab action out of range");
    return {{static_cast<double>(grid_.next[st][a])}, grid_.reward[st][a]};
}

ltl::Letter GridLabEnv::label(const State& s) const { return grid_.labels.at(as_index(s.at(0))); }

std::vector<double> GridLabEnv::normalize(const State& s) const {
    // one-hot over GridLab states
    std::vector<double> out(static_cast<std::size_t>(grid_.num_states), 0.0);
    out.at(as_index(s.at(0))) = 1.0;
    return out;
}

}  // namespace cycler::envs
