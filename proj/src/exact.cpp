#include "cycler/exact.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "cycler/shaping.hpp"

namespace cycler::exact {

std::vector<std::vector<Option>> product_options(const envs::GridLab& grid, const Ldba& ldba) {
    const ProductIndex idx{grid.num_states, ldba.num_states};
    std::vector<std::vector<Option>> out(static_cast<std::size_t>(idx.size()));
    for (int s = 0; s < grid.num_states; ++s) {
        for (StateId b = 0; b < ldba.num_states; ++b) {
            auto& opts = out[static_cast<std::size_t>(idx.of(s, b))];
            for (int a = 0; a < grid.num_actions; ++a) opts.push_back({a, std::nullopt});
            for (automaton::ElementId e : ldba.jumps_at(b)) opts.push_back({-1, e});
        }
    }
    return out;
}

Lasso trace_lasso(const envs::GridLab& grid, const Ldba& ldba, const std::vector<std::vector<Option>>& options,
                  const std::vector<int>& choices) {
    const ProductIndex idx{grid.num_states, ldba.num_states};
    std::vector<int> seen_at(static_cast<std::size_t>(idx.size()), -1);
    Lasso lasso;
    int s = grid.start;
    StateId b = ldba.initial_transition(grid.labels[static_cast<std::size_t>(s)]).state;
    while (true) {
        const auto key = static_cast<std::size_t>(idx.of(s, b));
        if (seen_at[key] >= 0) {
            lasso.prefix = static_cast<std::size_t>(seen_at[key]);
            lasso.cycle = lasso.records.size() - lasso.prefix;
            lasso.records.emplace_back(s, b);
            return lasso;
        }
        seen_at[key] = static_cast<int>(lasso.records.size());
        lasso.records.emplace_back(s, b);
        const Option& opt = options[key].at(static_cast<std::size_t>(choices[key]));
        if (opt.jump) {
            b = ldba.element_target(*opt.jump);
            lasso.rewards.push_back(0.0);
        } else {
            const auto si = static_cast<std::size_t>(s);
            const auto ai = static_cast<std::size_t>(opt.env_action);
            lasso.rewards.push_back(grid.reward[si][ai]);
            s = grid.next[si][ai];
            b = ldba.step(b, grid.labels[static_cast<std::size_t>(s)]).state;
        }
    }
}

PolicyValue lasso_values(const Lasso& lasso, const Ldba& ldba, double gamma, double gamma_phi) {
    const std::size_t p = lasso.prefix;
    const std::size_t c = lasso.cycle;
    PolicyValue out;

    // R: prefix sum plus the cycle sum repeated geometrically with ratio gamma^c
    double prefix_r = 0.0;
    double g = 1.0;
    for (std::size_t t = 0; t < p; ++t) {
        prefix_r += g * lasso.rewards[t];
        g *= gamma;
    }
    double cycle_r = 0.0;
    for (std::size_t k = 0; k < c; ++k) {
        cycle_r += g * lasso.rewards[p + k];
        g *= gamma;
    }
    out.r = prefix_r + cycle_r / (1.0 - std::pow(gamma, static_cast<double>(c)));

    // V: arrivals at records 1..p happen once; arrivals on the cycle repeat forever
    std::size_t prefix_visits = 0;
    std::optional<std::size_t> last;
    for (std::size_t i = 1; i <= p; ++i) {
        if (ldba.is_accepting(lasso.records[i].second)) {
            ++prefix_visits;
            last = i - 1;  // transition i-1 arrives at record i
        }
    }
    bool cycle_visits = false;
    for (std::size_t i = p; i < p + c; ++i) cycle_visits = cycle_visits || ldba.is_accepting(lasso.records[i].second);
    if (cycle_visits) {
        out.v = gamma_phi / (1.0 - gamma_phi);
    } else {
        out.v = gamma_phi * (1.0 - std::pow(gamma_phi, static_cast<double>(prefix_visits))) / (1.0 - gamma_phi);
        out.last_visit = last;
    }
    return out;
}

std::size_t count_policies(const std::vector<std::vector<Option>>& options) {
    std::size_t n = 1;
    for (const auto& o : options) {
        if (o.empty()) throw ltl::DomainError("product state without options");
        if (n > kMaxPolicies / o.size()) throw ltl::DomainError("more than 10^6 deterministic policies");
        n *= o.size();
    }
    return n;
}

std::vector<int> decode_policy(const std::vector<std::vector<Option>>& options, std::size_t index) {
    std::vector<int> choices(options.size());
    for (std::size_t k = 0; k < options.size(); ++k) {
        choices[k] = static_cast<int>(index % options[k].size());
        index /= options[k].size();
    }
    return choices;
}

std::vector<PolicyValue> exact_values(const envs::GridLab& grid, const Ldba& ldba, double gamma, double gamma_phi) {
    if (!(gamma > 0.0 && gamma < 1.0) || !(gamma_phi > 0.0 && gamma_phi < 1.0)) {
        throw ltl::DomainError("discount factors must lie in (0, 1)");
    }
    const auto options = product_options(grid, ldba);
    const std::size_t n = count_policies(options);
    std::vector<PolicyValue> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(lasso_values(trace_lasso(grid, ldba, options, decode_policy(options, i)), ldba, gamma, gamma_phi));
    }
    return out;
}

namespace {

bool close(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max({1.0, std::abs(a), std::abs(b)}); }

}  // namespace

std::vector<std::size_t> dual_argmax(const std::vector<PolicyValue>& values, double lambda) {
    double best = -INFINITY;
    for (const auto& pv : values) best = std::max(best, pv.r + lambda * pv.v);
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (close(values[i].r + lambda * values[i].v, best)) out.push_back(i);
    }
    return out;
}

bool ExactReport::holds() const {
    if (!gap_exists) return false;
    return std::all_of(checks.begin(), checks.end(), [](const DualCheck& c) { return c.contained && c.attains_max_r; });
}

ExactReport verify_lambda_bound(const envs::GridLab& grid, const Ldba& ldba, double gamma, double gamma_phi,
                                const std::vector<double>& multipliers) {
    ExactReport rep;
    rep.values = exact_values(grid, ldba, gamma, gamma_phi);

    rep.step_r_max = grid.reward_max();
    rep.step_r_min = grid.reward_min();
    if (!ldba.eps_edges.empty()) {
        // jumps pay nothing
        rep.step_r_max = std::max(rep.step_r_max, 0.0);
        rep.step_r_min = std::min(rep.step_r_min, 0.0);
    }

    rep.v_max = -INFINITY;
    for (const auto& pv : rep.values) rep.v_max = std::max(rep.v_max, pv.v);
    double runner_up = -INFINITY;
    for (const auto& pv : rep.values) {
        if (!close(pv.v, rep.v_max)) runner_up = std::max(runner_up, pv.v);
        if (pv.last_visit) rep.max_last_visit = std::max(rep.max_last_visit, *pv.last_visit);
    }
    rep.gap_exists = std::isfinite(runner_up);
    rep.gap = rep.gap_exists ? rep.v_max - runner_up : 0.0;

    rep.best_constrained_r = -INFINITY;
    for (const auto& pv : rep.values) {
        if (close(pv.v, rep.v_max)) rep.best_constrained_r = std::max(rep.best_constrained_r, pv.r);
    }
    for (std::size_t i = 0; i < rep.values.size(); ++i) {
        if (close(rep.values[i].v, rep.v_max) && close(rep.values[i].r, rep.best_constrained_r)) {
            rep.constrained_argmax.push_back(i);
        }
    }
    if (!rep.gap_exists) return rep;

    rep.lambda_star = shaping::lambda_bound(rep.step_r_max, rep.step_r_min, rep.gap, gamma);
    for (double m : multipliers) {
        DualCheck chk;
        // a flat reward table gives lambda* = 0, where any positive weight qualifies
        chk.lambda = m * (rep.lambda_star > 0.0 ? rep.lambda_star : 1.0);
        chk.argmax = dual_argmax(rep.values, chk.lambda);
        chk.contained = std::all_of(chk.argmax.begin(), chk.argmax.end(),
                                    [&](std::size_t i) { return close(rep.values[i].v, rep.v_max); });
        chk.attains_max_r = std::all_of(chk.argmax.begin(), chk.argmax.end(),
                                        [&](std::size_t i) { return close(rep.values[i].r, rep.best_constrained_r); });
        rep.checks.push_back(std::move(chk));
    }
    return rep;
}

Fixture random_gapped_fixture(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    for (int attempt = 0;; ++attempt) {
        const int na = pick(2, 3);
        const int nb = pick(2, 3);
        const int ns = pick(2, 12 / nb);

        envs::GridLabSpec spec;
        spec.aps = {"p"};
        spec.num_states = ns;
        spec.num_actions = na;
        spec.start = 0;
        for (int s = 0; s < ns; ++s) {
            std::vector<int> next;
            std::vector<double> reward;
            for (int a = 0; a < na; ++a) {
                next.push_back(pick(0, ns - 1));
                reward.push_back(static_cast<double>(pick(-2, 4)) / 2.0);
            }
            spec.next.push_back(next);
            spec.reward.push_back(reward);
            spec.labels.push_back(pick(0, 1) ? std::vector<std::string>{"p"} : std::vector<std::string>{});
        }

        std::ostringstream text;
        text << "ldba v1\naps: p\nstates: " << nb << "\ninitial: 0\naccepting:";
        bool any = false;
        for (int b = 1; b < nb; ++b) {
            if (pick(0, 1) || (!any && b + 1 == nb)) {
                text << ' ' << b;
                any = true;
            }
        }
        text << '\n';
        for (int b = 0; b < nb; ++b) {
            text << "edge: " << b << " -> " << pick(0, nb - 1) << " : p\n";
            text << "edge: " << b << " -> " << pick(0, nb - 1) << " : !p\n";
        }
        Fixture fx{envs::gridlab_build(spec), automaton::parse_ldba(text.str())};
        const auto values = exact_values(fx.grid, fx.ldba, 0.9, 0.9);
        const auto [lo, hi] = std::minmax_element(values.begin(), values.end(),
                                                  [](const PolicyValue& a, const PolicyValue& b) { return a.v < b.v; });
        if (!close(lo->v, hi->v)) return fx;
        if (attempt > 1000) throw std::runtime_error("could not draw a gapped fixture");
    }
}

}  // namespace cycler::exact
