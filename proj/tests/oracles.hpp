#pragma once

// Independent reference implementations and random instance generators used by
// the unit and acceptance tests. Nothing here calls the code it checks.

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cycler/cycles.hpp"
#include "cycler/envs.hpp"
#include "cycler/ldba.hpp"
#include "cycler/ltl.hpp"
#include "cycler/product.hpp"

namespace oracle {

using cycler::ltl::Formula;
using cycler::ltl::Op;
using cycler::ltl::RobustnessVector;

inline int pick(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// ---- quantitative semantics, written out rule by rule from the table ----

struct QsTable {
    double rho_max = 1.0;
    std::vector<double> c;  // thresholds
};

// rho(s_{from:to}, f) with the window holding states from .. to-1.
inline double fig10(const Formula& f, const std::vector<RobustnessVector>& s, std::size_t from, std::size_t to,
                    const QsTable& q) {
    const auto& ch = f.children;
    switch (f.op) {
        case Op::True: return q.rho_max;
        case Op::False: return -q.rho_max;
        case Op::Atom: return s[from][f.atom_index] - q.c[f.atom_index];
        case Op::Not: return -fig10(ch[0], s, from, to, q);
        case Op::And: {
            const double a = fig10(ch[0], s, from, to, q);
            const double b = fig10(ch[1], s, from, to, q);
            return a < b ? a : b;
        }
        case Op::Or: {
            const double a = fig10(ch[0], s, from, to, q);
            const double b = fig10(ch[1], s, from, to, q);
            return a > b ? a : b;
        }
        case Op::Implies: {
            const double a = -fig10(ch[0], s, from, to, q);
            const double b = fig10(ch[1], s, from, to, q);
            return a > b ? a : b;
        }
        case Op::Next:
            if (to - from < 2) throw std::domain_error("X at the last position");
            return fig10(ch[0], s, from + 1, to, q);
        case Op::Globally:
        case Op::Eventually: {
            std::vector<double> vals;
            for (std::size_t t = from; t < to; ++t) vals.push_back(fig10(ch[0], s, t, to, q));
            return f.op == Op::Globally ? *std::min_element(vals.begin(), vals.end())
                                        : *std::max_element(vals.begin(), vals.end());
        }
        case Op::Until: {
            std::vector<double> outer;
            for (std::size_t t1 = from; t1 < to; ++t1) {
                std::vector<double> inner{fig10(ch[1], s, t1, to, q)};
                if (t1 == from) inner.push_back(q.rho_max);  // empty prefix
                for (std::size_t t2 = from; t2 < t1; ++t2) inner.push_back(fig10(ch[0], s, t2, t1, q));
                outer.push_back(*std::min_element(inner.begin(), inner.end()));
            }
            return *std::max_element(outer.begin(), outer.end());
        }
    }
    throw std::logic_error("operator");
}

// ---- random formulas and traces ----

inline Formula random_formula(std::mt19937_64& rng, const cycler::ltl::ApSet& aps, int depth, bool temporal) {
    using namespace cycler::ltl;
    if (depth == 0 || pick(rng, 0, 4) == 0) {
        const int k = pick(rng, 0, 9);
        if (k == 0) return make_const(true);
        if (k == 1) return make_const(false);
        return make_atom(aps, aps.name(static_cast<std::size_t>(pick(rng, 0, static_cast<int>(aps.size()) - 1))));
    }
    const int k = pick(rng, 0, temporal ? 7 : 3);
    switch (k) {
        case 0: return make_unary(Op::Not, random_formula(rng, aps, depth - 1, temporal));
        case 1: return make_binary(Op::And, random_formula(rng, aps, depth - 1, temporal), random_formula(rng, aps, depth - 1, temporal));
        case 2: return make_binary(Op::Or, random_formula(rng, aps, depth - 1, temporal), random_formula(rng, aps, depth - 1, temporal));
        case 3: return make_binary(Op::Implies, random_formula(rng, aps, depth - 1, temporal), random_formula(rng, aps, depth - 1, temporal));
        case 4: return make_unary(Op::Globally, random_formula(rng, aps, depth - 1, temporal));
        case 5: return make_unary(Op::Eventually, random_formula(rng, aps, depth - 1, temporal));
        case 6: return make_unary(Op::Next, random_formula(rng, aps, depth - 1, temporal));
        default: return make_binary(Op::Until, random_formula(rng, aps, depth - 1, temporal), random_formula(rng, aps, depth - 1, temporal));
    }
}

// Values on a quarter grid keep min/max comparisons exact.
inline RobustnessVector random_rv(std::mt19937_64& rng, std::size_t n, bool avoid_zero = false) {
    RobustnessVector rv(n);
    for (auto& v : rv) {
        do {
            v = pick(rng, -8, 8) / 4.0;
        } while (avoid_zero && v == 0.0);
    }
    return rv;
}

// ---- random automata in the ldba v1 text format ----

inline std::string minterm(const std::vector<std::string>& aps, unsigned letter) {
    std::string s;
    for (std::size_t i = 0; i < aps.size(); ++i) {
        if (!s.empty()) s += " & ";
        if (!(letter >> i & 1U)) s += "!";
        s += aps[i];
    }
    return s.empty() ? "true" : "(" + s + ")";
}

inline std::string join_minterms(const std::vector<std::string>& aps, const std::vector<unsigned>& letters) {
    std::string s;
    for (unsigned l : letters) s += (s.empty() ? "" : " | ") + minterm(aps, l);
    return s;
}

struct RandomLdbaOptions {
    int max_states = 8;
    int max_aps = 3;
    bool allow_nondet = true;
};

// Deterministic states spread their letters over one to three edges (a letter
// may also be dropped, in which case the text needs --allow-partial);
// nondeterministic states get overlapping guards and eps edges into the
// deterministic part.
inline std::string random_ldba_text(std::mt19937_64& rng, const RandomLdbaOptions& o, bool& partial) {
    const int n = pick(rng, 1, o.max_states);
    const int n_aps = pick(rng, 1, o.max_aps);
    std::vector<std::string> aps;
    for (int i = 0; i < n_aps; ++i) aps.push_back(std::string(1, static_cast<char>('a' + i)));
    const unsigned n_letters = 1U << n_aps;

    // states [0, n_nd) are nondeterministic
    const int n_nd = (o.allow_nondet && n > 1 && pick(rng, 0, 2) == 0) ? pick(rng, 1, std::min(2, n - 1)) : 0;
    std::ostringstream t;
    t << "ldba v1\naps:";
    for (const auto& a : aps) t << ' ' << a;
    t << "\nstates: " << n << "\ninitial: " << pick(rng, 0, n - 1) << '\n';
    if (n_nd > 0) {
        t << "nondet:";
        for (int b = 0; b < n_nd; ++b) t << ' ' << b;
        t << '\n';
    }
    t << "accepting:";
    for (int b = n_nd; b < n; ++b) {
        if (pick(rng, 0, 2) == 0) t << ' ' << b;
    }
    t << '\n';
    partial = false;
    for (int b = 0; b < n; ++b) {
        if (b < n_nd) {
            const int k = pick(rng, 0, 3);
            for (int i = 0; i < k; ++i) {
                std::vector<unsigned> ls;
                for (unsigned l = 0; l < n_letters; ++l) {
                    if (pick(rng, 0, 1)) ls.push_back(l);
                }
                if (ls.empty()) continue;
                t << "edge: " << b << " -> " << pick(rng, 0, n - 1) << " : " << join_minterms(aps, ls) << '\n';
            }
            const int j = pick(rng, 1, 2);
            for (int i = 0; i < j; ++i) t << "eps: " << b << " -> " << pick(rng, n_nd, n - 1) << " : j" << i << '\n';
            continue;
        }
        const int k = pick(rng, 1, 3);
        std::vector<std::vector<unsigned>> groups(static_cast<std::size_t>(k));
        for (unsigned l = 0; l < n_letters; ++l) {
            const int g = pick(rng, -1, k - 1);
            if (g < 0 && pick(rng, 0, 3) == 0) {
                partial = true;
                continue;
            }
            groups[static_cast<std::size_t>(std::max(g, 0))].push_back(l);
        }
        for (const auto& g : groups) {
            if (g.empty()) continue;
            t << "edge: " << b << " -> " << pick(rng, n_nd, n - 1) << " : " << join_minterms(aps, g) << '\n';
        }
    }
    return t.str();
}

// ---- simple-path enumeration by recursion over edge sequences ----

// All simple paths (by the CyclePath rules) from `source`, enumerated as edge
// sequences of length 1..n. Kept separate from the library's own oracle.
inline std::set<std::vector<std::size_t>> all_accepting_paths(const cycler::automaton::Ldba& a, int source) {
    std::set<std::vector<std::size_t>> out;
    const std::size_t m = a.num_elements();
    std::vector<std::size_t> seq;
    std::vector<int> states{source};
    auto rec = [&](auto&& self) -> void {
        const int cur = states.back();
        for (std::size_t e = 0; e < m; ++e) {
            if (a.element_source(e) != cur) continue;
            const int nxt = a.element_target(e);
            seq.push_back(e);
            if (a.is_accepting(nxt)) {
                out.insert(seq);
            } else if (std::find(states.begin(), states.end(), nxt) == states.end()) {
                states.push_back(nxt);
                self(self);
                states.pop_back();
            }
            seq.pop_back();
        }
    };
    rec(rec);
    return out;
}

// ---- trajectories over an automaton ----

// Random walk driven by letters and jumps; each record gets a robustness
// vector whose signs agree with its letter.
inline cycler::product::ProductTrajectory random_walk(const cycler::automaton::Ldba& a, std::mt19937_64& rng,
                                                      std::size_t steps) {
    using namespace cycler;
    const unsigned n_letters = 1U << a.aps.size();
    auto rv_for = [&](unsigned letter) {
        RobustnessVector rv(a.aps.size());
        for (std::size_t i = 0; i < rv.size(); ++i) {
            const double mag = uniform(rng, 0.01, 1.0);
            rv[i] = (letter >> i & 1U) ? mag : -mag;
        }
        return rv;
    };
    auto steppable = [&](int b) {
        std::vector<unsigned> ls;
        for (unsigned l = 0; l < n_letters; ++l) {
            try {
                a.step(b, l);
                ls.push_back(l);
            } catch (const automaton::IncompleteError&) {
            }
        }
        return ls;
    };

    product::ProductTrajectory traj;
    std::vector<unsigned> first = steppable(a.initial);
    if (first.empty()) return traj;
    const unsigned l0 = first[static_cast<std::size_t>(pick(rng, 0, static_cast<int>(first.size()) - 1))];
    const auto tr0 = a.initial_transition(l0);
    product::TrajectoryStep st;
    st.b = tr0.state;
    st.edge = tr0.element;
    st.letter = l0;
    st.rho = rv_for(l0);
    traj.steps.push_back(st);

    for (std::size_t t = 0; t < steps; ++t) {
        const auto& prev = traj.steps.back();
        const auto jumps = a.jumps_at(prev.b);
        const auto ls = steppable(prev.b);
        product::TrajectoryStep nx;
        product::Action act;
        if (!jumps.empty() && (ls.empty() || pick(rng, 0, 2) == 0)) {
            const auto e = jumps[static_cast<std::size_t>(pick(rng, 0, static_cast<int>(jumps.size()) - 1))];
            act.jump = e;
            nx.b = a.element_target(e);
            nx.edge = e;
            nx.letter = prev.letter;
            nx.rho = prev.rho;
        } else if (!ls.empty()) {
            const unsigned l = ls[static_cast<std::size_t>(pick(rng, 0, static_cast<int>(ls.size()) - 1))];
            const auto tr = a.step(prev.b, l);
            nx.b = tr.state;
            nx.edge = tr.element;
            nx.letter = l;
            nx.rho = rv_for(l);
        } else {
            break;
        }
        traj.steps.back().action = act;
        traj.steps.push_back(nx);
    }
    return traj;
}

// ---- Algorithm 1, discrete mode, recomputed from scratch ----

struct NaiveSegment {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::optional<std::size_t> chosen;
    std::vector<std::pair<std::size_t, std::size_t>> hits;  // per candidate: (rewarded steps, |c|)
};

struct NaiveShaping {
    std::vector<double> reward;
    std::vector<NaiveSegment> segments;
};

inline NaiveShaping naive_discrete(const cycler::product::ProductTrajectory& traj, const cycler::automaton::Ldba& a,
                                   const std::vector<cycler::cycles::CyclePath>& maips,
                                   const std::vector<cycler::cycles::CyclePath>& macs) {
    NaiveShaping out;
    const std::size_t n = traj.steps.size() - 1;
    out.reward.assign(n, 0.0);
    // split into segments first
    std::vector<std::pair<std::size_t, std::size_t>> bounds;
    std::size_t begin = 0;
    for (std::size_t t = 0; t < n; ++t) {
        if (a.is_accepting(traj.steps[t + 1].b) || t + 1 == n) {
            bounds.emplace_back(begin, t + 1);
            begin = t + 1;
        }
    }
    bool seen_accepting = false;
    for (const auto& [b0, b1] : bounds) {
        const auto& cands = seen_accepting ? macs : maips;
        NaiveSegment seg{b0, b1, std::nullopt, {}};
        for (std::size_t i = 0; i < cands.size(); ++i) {
            std::set<std::size_t> taken;
            std::size_t count = 0;
            for (std::size_t t = b0; t < b1; ++t) {
                const std::size_t e = traj.steps[t + 1].edge;
                const bool on = std::find(cands[i].elements.begin(), cands[i].elements.end(), e) != cands[i].elements.end();
                if (on && !taken.count(e)) ++count;
                taken.insert(e);
            }
            seg.hits.emplace_back(count, cands[i].elements.size());
            // strictly larger count/|c| wins; ties keep the earlier index
            if (!seg.chosen || count * seg.hits[*seg.chosen].second > seg.hits[*seg.chosen].first * cands[i].elements.size()) {
                seg.chosen = i;
            }
        }
        if (seg.chosen) {
            const auto& c = cands[*seg.chosen];
            std::set<std::size_t> taken;
            for (std::size_t t = b0; t < b1; ++t) {
                const std::size_t e = traj.steps[t + 1].edge;
                const bool on = std::find(c.elements.begin(), c.elements.end(), e) != c.elements.end();
                if (on && !taken.count(e)) out.reward[t] = 1.0 / static_cast<double>(c.elements.size());
                taken.insert(e);
            }
        }
        out.segments.push_back(seg);
        if (a.is_accepting(traj.steps[b1].b)) seen_accepting = true;
    }
    return out;
}

}  // namespace oracle
