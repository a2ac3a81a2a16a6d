#pragma once

// Product of an environment with an LDBA: synchronized stepping, epsilon jumps
// as extra actions, and recorded product trajectories.

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "cycler/envs.hpp"
#include "cycler/ldba.hpp"

namespace cycler::product {

using automaton::ElementId;
using automaton::Ldba;
using automaton::StateId;

/// Bit per automaton element; set once the element fires, cleared on every
/// accepting visit.
class Frontier {
public:
    Frontier() = default;
    explicit Frontier(std::size_t num_elements) : bits_(num_elements, false) {}

    std::size_t size() const { return bits_.size(); }
    bool test(ElementId e) const { return bits_.at(e); }
    void set(ElementId e) { bits_.at(e) = true; }
    void clear() { bits_.assign(bits_.size(), false); }
    bool none() const;
    const std::vector<bool>& bits() const { return bits_; }

    bool operator==(const Frontier&) const = default;

private:
    std::vector<bool> bits_;
};

/// An environment action, or a jump along an eps edge (then `env` is ignored).
struct Action {
    std::vector<double> env;
    std::optional<ElementId> jump;

    bool operator==(const Action&) const = default;
};

struct ProductState {
    envs::State s;
    StateId b = 0;
    Frontier e;
};

/// One record per time index t = 0..horizon. `edge` and `letter` describe how
/// b_t was reached (for t = 0, the initial transition on L(s_0)); `action` and
/// `r_mdp` describe the move out of t and are empty/zero on the final record.
struct TrajectoryStep {
    envs::State s;
    StateId b = 0;
    Frontier e;
    std::optional<Action> action;
    ElementId edge = 0;
    ltl::Letter letter = 0;
    double r_mdp = 0.0;
    ltl::RobustnessVector rho;  // robustness at s_t in LDBA proposition order; may be empty

    bool operator==(const TrajectoryStep&) const = default;
};

struct ProductTrajectory {
    std::vector<TrajectoryStep> steps;

    std::size_t horizon() const { return steps.empty() ? 0 : steps.size() - 1; }
};

/// Maps environment proposition indices onto the automaton's proposition order.
class LetterMap {
public:
    LetterMap(const ltl::ApSet& env_aps, const ltl::ApSet& ldba_aps);

    ltl::Letter map(ltl::Letter env_letter) const;
    ltl::RobustnessVector map(const ltl::RobustnessVector& env_rv) const;

private:
    std::vector<std::size_t> env_index_;  // per automaton proposition
};

struct ProductStepResult {
    ProductState next;
    ElementId fired = 0;
    ltl::Letter letter = 0;
    double r_mdp = 0.0;
};

/// Binds one environment to one automaton.
class Product {
public:
    Product(const envs::Environment& env, const Ldba& ldba);

    const envs::Environment& env() const { return env_; }
    const Ldba& ldba() const { return ldba_; }

    ltl::Letter label(const envs::State& s) const { return map_.map(env_.label(s)); }
    ltl::RobustnessVector robustness(const envs::State& s) const { return map_.map(env_.robustness(s)); }

    ProductState reset() const;
    ProductStepResult step(const ProductState& ps, const Action& a) const;

private:
    const envs::Environment& env_;
    const Ldba& ldba_;
    LetterMap map_;
};

using Policy = std::function<Action(const ProductState&, std::mt19937_64&)>;

/// Runs `horizon` product steps from the environment's start state.
ProductTrajectory rollout(const Product& product, const Policy& policy, int horizon, std::uint64_t seed);

/// Number of records t >= 1 whose automaton state is accepting.
int accepting_visits(const ProductTrajectory& traj, const Ldba& ldba);

/// Automaton-only trajectory: record t carries L(s_t) = letters[t] and no
/// environment state. Useful for shaping fixtures.
ProductTrajectory trajectory_from_letters(const Ldba& ldba, const std::vector<ltl::Letter>& letters);

/// Re-derives automaton states and fired elements from recorded letters and
/// jumps. Empty string if everything matches, otherwise the first mismatch.
std::string check_replay(const ProductTrajectory& traj, const Ldba& ldba);

}  // namespace cycler::product
