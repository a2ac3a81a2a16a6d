#include "cycler/shaping.hpp"

#include <algorithm>
#include <cmath>

namespace cycler::shaping {

void ShapingConfig::validate(std::size_t num_aps) const {
    if (mode == Mode::Qs) {
        if (!qs) throw ltl::DomainError("quantitative shaping needs a QS configuration");
        qs->validate(num_aps);
    } else if (qs) {
        throw ltl::DomainError("a QS configuration is only allowed in quantitative mode");
    }
}

double r_cycle(ElementId fired, const Frontier& e, const CyclePath& c) {
    if (!c.contains(fired) || e.test(fired)) return 0.0;
    return 1.0 / static_cast<double>(c.size());
}

namespace {

double clamped_guard(const ltl::Formula& guard, const ltl::RobustnessVector& rv, const ltl::QSConfig& qs) {
    return std::clamp(ltl::qs_eval_state(guard, rv, qs), qs.rho_min, qs.rho_max);
}

}  // namespace

double r_qs_cycle(const Ldba& ldba, const ltl::RobustnessVector& s_rv, StateId b, const ltl::RobustnessVector& s2_rv,
                  StateId b2, ElementId fired, const Frontier& e, const CyclePath& c, const ltl::QSConfig& qs,
                  bool clamp_negative, bool b_departed) {
    const ElementId* target = c.element_from(ldba, b);
    if (target == nullptr) return 0.0;
    const double scale = (qs.rho_max - qs.rho_min) * static_cast<double>(c.size());
    // once b has been left inside a segment it earns nothing more, which keeps
    // the progress on each guard telescoping over a single stay
    if (b_departed) return 0.0;
    const bool fires = fired == *target && !e.test(*target);
    const bool stays = b2 == b && fired != *target;
    if (!fires && !stays) return 0.0;
    if (ldba.is_eps(*target)) {
        // a jump has no guard to make progress on; it earns the plain share when taken
        return fires ? 1.0 / static_cast<double>(c.size()) : 0.0;
    }
    const ltl::Formula& guard = ldba.edges[*target].guard;
    double delta = clamped_guard(guard, s2_rv, qs) - clamped_guard(guard, s_rv, qs);
    if (clamp_negative) delta = std::max(delta, 0.0);
    return delta / scale;
}

RewardTrace cycler_assign(const ProductTrajectory& traj, const Ldba& ldba, const std::vector<CyclePath>& maips,
                          const std::vector<CyclePath>& macs, const ShapingConfig& cfg) {
    if (traj.steps.size() < 2) throw ltl::DomainError("shaping needs at least one transition");
    cfg.validate(ldba.aps.size());
    const bool qs_mode = cfg.mode == Mode::Qs;
    const std::size_t n = traj.steps.size() - 1;

    RewardTrace rt;
    rt.r_cycler.assign(n, 0.0);
    rt.r_ltl_unshaped.assign(n, 0.0);
    rt.r_mdp.assign(n, 0.0);
    rt.accepting.assign(n, false);

    const std::size_t width = std::max(maips.size(), macs.size());
    std::vector<std::vector<double>> rewards(width, std::vector<double>(n, 0.0));
    std::vector<std::size_t> hits(width, 0);
    Frontier e(ldba.num_elements());
    std::vector<bool> departed(static_cast<std::size_t>(ldba.num_states), false);
    std::size_t j = 0;
    bool after_accepting = false;

    for (std::size_t t = 0; t < n; ++t) {
        const auto& cur = traj.steps[t];
        const auto& nxt = traj.steps[t + 1];
        const ElementId fired = nxt.edge;
        const std::vector<CyclePath>& cands = after_accepting ? macs : maips;
        if (qs_mode && (cur.rho.empty() || nxt.rho.empty())) {
            throw ltl::DomainError("quantitative shaping needs robustness values at every step");
        }
        for (std::size_t i = 0; i < cands.size(); ++i) {
            double r = 0.0;
            if (qs_mode) {
                r = r_qs_cycle(ldba, cur.rho, cur.b, nxt.rho, nxt.b, fired, e, cands[i], *cfg.qs,
                               cfg.clamp_negative_progress, departed[static_cast<std::size_t>(cur.b)]);
            } else {
                r = r_cycle(fired, e, cands[i]);
                if (r > 0.0) ++hits[i];
            }
            rewards[i][t] = r;
        }
        e.set(fired);
        if (nxt.b != cur.b) departed[static_cast<std::size_t>(cur.b)] = true;

        rt.r_mdp[t] = cur.r_mdp;
        rt.accepting[t] = ldba.is_accepting(nxt.b);
        rt.r_ltl_unshaped[t] = r_ltl_unshaped(ldba, nxt.b);

        if (rt.accepting[t] || t + 1 == n) {
            Segment seg;
            seg.begin = j;
            seg.end = t + 1;
            seg.closed_by_accepting = rt.accepting[t];
            seg.used_cycles = after_accepting;
            std::vector<double> sums(cands.size(), 0.0);
            for (std::size_t i = 0; i < cands.size(); ++i) {
                for (std::size_t k = j; k <= t; ++k) sums[i] += rewards[i][k];
            }
            for (std::size_t i = 0; i < cands.size(); ++i) {
                if (!seg.index) {
                    seg.index = i;
                    continue;
                }
                const std::size_t best = *seg.index;
                bool better = false;
                if (qs_mode) {
                    better = sums[i] > sums[best];
                } else {
                    // hits_i / |c_i| against hits_best / |c_best|, compared exactly
                    better = hits[i] * cands[best].size() > hits[best] * cands[i].size();
                }
                if (better) seg.index = i;
            }
            if (seg.index) {
                const std::size_t i = *seg.index;
                seg.chosen = cands[i];
                seg.sum = sums[i];
                seg.hits = hits[i];
                for (std::size_t k = j; k <= t; ++k) rt.r_cycler[k] = rewards[i][k];
            }
            rt.segments.push_back(std::move(seg));
            for (auto& row : rewards) std::fill(row.begin() + static_cast<long>(j), row.begin() + static_cast<long>(t) + 1, 0.0);
            std::fill(hits.begin(), hits.end(), 0);
            std::fill(departed.begin(), departed.end(), false);
            e.clear();
            j = t + 1;
            if (rt.accepting[t]) after_accepting = true;
        }
    }
    return rt;
}

RewardTrace shape_trajectory(const ProductTrajectory& traj, const Ldba& ldba, const ShapingConfig& cfg) {
    if (traj.steps.empty()) throw ltl::DomainError("shaping needs at least one transition");
    return cycler_assign(traj, ldba, cycles::find_maips_from(ldba, traj.steps.front().b), cycles::find_macs(ldba), cfg);
}

std::vector<double> eventual_discounts(const std::vector<bool>& accepting, double gamma_phi, Counting counting) {
    std::vector<double> out(accepting.size(), 0.0);
    double weight = 1.0;
    for (std::size_t t = 0; t < accepting.size(); ++t) {
        if (counting == Counting::Inclusive && accepting[t]) weight *= gamma_phi;
        out[t] = weight;
        if (counting == Counting::Exclusive && accepting[t]) weight *= gamma_phi;
    }
    return out;
}

double eventual_discounted_value(const RewardTrace& rt, bool shaped, Counting counting) {
    if (!(rt.gamma_phi > 0.0 && rt.gamma_phi < 1.0)) throw ltl::DomainError("gamma_phi must lie in (0, 1)");
    const std::vector<double> big_gamma = eventual_discounts(rt.accepting, rt.gamma_phi, counting);
    const std::vector<double>& stream = shaped ? rt.r_cycler : rt.r_ltl_unshaped;
    double v = 0.0;
    for (std::size_t t = 0; t < stream.size(); ++t) v += big_gamma[t] * stream[t];
    return v;
}

double dual_reward(std::size_t t, double r_mdp, double big_gamma_t, double r_ltl, double gamma, double lambda) {
    return std::pow(gamma, static_cast<double>(t)) * r_mdp + big_gamma_t * lambda * r_ltl;
}

std::vector<double> dual_stream(const RewardTrace& rt, bool shaped, Counting counting) {
    const std::vector<double> big_gamma = eventual_discounts(rt.accepting, rt.gamma_phi, counting);
    const std::vector<double>& ltl_stream = shaped ? rt.r_cycler : rt.r_ltl_unshaped;
    std::vector<double> out(rt.size());
    double discount = 1.0;
    for (std::size_t t = 0; t < out.size(); ++t) {
        out[t] = discount * rt.r_mdp[t] + big_gamma[t] * rt.lambda * ltl_stream[t];
        discount *= rt.gamma;
    }
    return out;
}

double lambda_bound(double r_max, double r_min, double epsilon, double gamma) {
    if (!(epsilon > 0.0)) throw ltl::DomainError("epsilon must be positive");
    if (!(gamma > 0.0 && gamma < 1.0)) throw ltl::DomainError("gamma must lie in (0, 1)");
    if (r_max < r_min) throw ltl::DomainError("r_max must not be below r_min");
    return (r_max - r_min) / (epsilon * (1.0 - gamma));
}

double gamma_phi_for(double epsilon, int m) {
    if (!(epsilon > 0.0 && epsilon <= 1.0)) throw ltl::DomainError("epsilon must lie in (0, 1]");
    if (m < 0) throw ltl::DomainError("M must be non-negative");
    return std::pow(1.0 - epsilon, 1.0 / static_cast<double>(m + 1));
}

}  // namespace cycler::shaping
