#pragma once

// Exact oracle for small deterministic products: every memoryless deterministic
// policy produces a lasso-shaped trajectory whose discounted MDP value and
// eventually discounted LTL value have closed forms.

#include <cstdint>
#include <optional>
#include <vector>

#include "cycler/envs.hpp"
#include "cycler/ldba.hpp"

namespace cycler::exact {

using automaton::Ldba;
using automaton::StateId;

/// A product action: an environment action index or a jump (eps element id).
struct Option {
    int env_action = -1;
    std::optional<automaton::ElementId> jump;
};

struct ProductIndex {
    int grid_states = 0;
    int ldba_states = 0;

    int size() const { return grid_states * ldba_states; }
    int of(int s, StateId b) const { return s * ldba_states + b; }
};

/// Available options per product state, environment actions first.
std::vector<std::vector<Option>> product_options(const envs::GridLab& grid, const Ldba& ldba);

/// Records (s_i, b_i) up to the first repeat: records[prefix + cycle] equals
/// records[prefix]. rewards[t] is the MDP reward of the transition out of t.
struct Lasso {
    std::vector<std::pair<int, StateId>> records;
    std::vector<double> rewards;
    std::size_t prefix = 0;
    std::size_t cycle = 0;
};

/// choices[product index] selects an entry of product_options.
Lasso trace_lasso(const envs::GridLab& grid, const Ldba& ldba, const std::vector<std::vector<Option>>& options,
                  const std::vector<int>& choices);

struct PolicyValue {
    double v = 0.0;  // sum over accepting arrivals k = 1, 2, ... of gamma_phi^k
    double r = 0.0;  // sum_t gamma^t r_MDP
    std::optional<std::size_t> last_visit;  // time of the final accepting arrival, if finitely many
};

PolicyValue lasso_values(const Lasso& lasso, const Ldba& ldba, double gamma, double gamma_phi);

constexpr std::size_t kMaxPolicies = 1'000'000;

/// Number of memoryless deterministic product policies; throws past kMaxPolicies.
std::size_t count_policies(const std::vector<std::vector<Option>>& options);
std::vector<int> decode_policy(const std::vector<std::vector<Option>>& options, std::size_t index);

std::vector<PolicyValue> exact_values(const envs::GridLab& grid, const Ldba& ldba, double gamma, double gamma_phi);

/// Indices maximizing R + lambda V, with a relative tolerance.
std::vector<std::size_t> dual_argmax(const std::vector<PolicyValue>& values, double lambda);

struct DualCheck {
    double lambda = 0.0;
    std::vector<std::size_t> argmax;
    bool contained = false;      // argmax lies inside the V-maximal set
    bool attains_max_r = false;  // and reaches the best R available there
};

struct ExactReport {
    std::vector<PolicyValue> values;
    double v_max = 0.0;
    double gap = 0.0;  // V_max minus the best non-maximal V; zero when none exists
    bool gap_exists = false;
    double step_r_max = 0.0;
    double step_r_min = 0.0;
    double lambda_star = 0.0;
    double best_constrained_r = 0.0;
    std::vector<std::size_t> constrained_argmax;  // V-maximal policies with the best R
    std::vector<DualCheck> checks;
    std::size_t max_last_visit = 0;

    /// True when the gap exists and every check passed.
    bool holds() const;
};

/// Enumerates values, derives the gap and lambda*, and checks that the dual
/// argmax for each multiple of lambda* stays V-maximal.
ExactReport verify_lambda_bound(const envs::GridLab& grid, const Ldba& ldba, double gamma, double gamma_phi,
                                const std::vector<double>& multipliers = {1.01, 10.0});

struct Fixture {
    envs::GridLab grid;
    Ldba ldba;
};

/// Random GridLab (2 to 6 states, 2 or 3 actions) and deterministic automaton
/// (2 or 3 states over one proposition) with product size at most 12 and
/// at least two distinct V values.
Fixture random_gapped_fixture(std::uint64_t seed);

}  // namespace cycler::exact
