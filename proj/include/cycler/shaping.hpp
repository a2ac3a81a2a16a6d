#pragma once

// CyclER reward shaping (discrete and quantitative variants), the unshaped
// accepting-state reward, eventual discounting, and the Lagrangian helpers.

#include <optional>
#include <vector>

#include "cycler/cycles.hpp"
#include "cycler/product.hpp"

namespace cycler::shaping {

using automaton::ElementId;
using automaton::Ldba;
using automaton::StateId;
using cycles::CyclePath;
using product::Frontier;
using product::ProductTrajectory;

enum class Mode { Discrete, Qs };

struct ShapingConfig {
    Mode mode = Mode::Discrete;
    std::optional<ltl::QSConfig> qs;  // required in Qs mode
    bool clamp_negative_progress = false;

    void validate(std::size_t num_aps) const;
};

/// A run of transitions [begin, end) closed by an accepting visit or by the
/// end of the trajectory.
struct Segment {
    std::size_t begin = 0;
    std::size_t end = 0;
    bool closed_by_accepting = false;
    bool used_cycles = false;          // MACs (after an accepting visit) rather than MAIPs
    std::optional<std::size_t> index;  // chosen candidate; empty if there were none
    std::optional<CyclePath> chosen;
    double sum = 0.0;
    std::size_t hits = 0;  // discrete mode: rewarded transitions of the chosen candidate
};

enum class Counting { Inclusive, Exclusive };

/// Per-transition streams: entry t describes the move from record t to t+1.
struct RewardTrace {
    std::vector<double> r_cycler;
    std::vector<double> r_ltl_unshaped;
    std::vector<double> r_mdp;
    std::vector<bool> accepting;  // b_{t+1} is accepting
    std::vector<Segment> segments;
    double gamma = 0.98;
    double gamma_phi = 0.99;
    double lambda = 400.0;
    Counting counting = Counting::Inclusive;  // used by the JSON and CSV writers

    std::size_t size() const { return r_cycler.size(); }
};

/// Eq. 5: 1/|c| when the fired element lies on c and has not fired since the
/// last accepting visit.
double r_cycle(ElementId fired, const Frontier& e, const CyclePath& c);

/// Eq. 6 as reconciled with the worked example: robustness progress on the
/// guard of c's element leaving b, paid on the step that fires it (frontier
/// gated) and on steps that stay at b. Nothing is paid once b has been left
/// within the current segment (`b_departed`).
double r_qs_cycle(const Ldba& ldba, const ltl::RobustnessVector& s_rv, StateId b, const ltl::RobustnessVector& s2_rv,
                  StateId b2, ElementId fired, const Frontier& e, const CyclePath& c, const ltl::QSConfig& qs,
                  bool clamp_negative = false, bool b_departed = false);

/// Algorithm 1. MAIP candidates shape the transitions before the first
/// accepting visit, MAC candidates shape everything after it.
RewardTrace cycler_assign(const ProductTrajectory& traj, const Ldba& ldba, const std::vector<CyclePath>& maips,
                          const std::vector<CyclePath>& macs, const ShapingConfig& cfg);

/// cycler_assign with MAIPs rooted at b_0 and MACs of the whole automaton.
RewardTrace shape_trajectory(const ProductTrajectory& traj, const Ldba& ldba, const ShapingConfig& cfg);

inline double r_ltl_unshaped(const Ldba& ldba, StateId b) { return ldba.is_accepting(b) ? 1.0 : 0.0; }


/// Gamma_t = gamma_phi^{j_t} per transition; j_t counts accepting visits up to
/// and including t (Inclusive) or strictly before t (Exclusive).
std::vector<double> eventual_discounts(const std::vector<bool>& accepting, double gamma_phi,
                                       Counting counting = Counting::Inclusive);

/// Sum of Gamma_t * r_t over the shaped or the unshaped LTL stream.
double eventual_discounted_value(const RewardTrace& rt, bool shaped = false, Counting counting = Counting::Inclusive);

double dual_reward(std::size_t t, double r_mdp, double big_gamma_t, double r_ltl, double gamma, double lambda);

/// Per-transition r_DUAL stream using the trace's gamma, gamma_phi and lambda.
std::vector<double> dual_stream(const RewardTrace& rt, bool shaped = true, Counting counting = Counting::Inclusive);

/// (r_max - r_min) / (epsilon (1 - gamma)).
double lambda_bound(double r_max, double r_min, double epsilon, double gamma);

/// (1 - epsilon)^{1/(M+1)}.
double gamma_phi_for(double epsilon, int m);

}  // namespace cycler::shaping
