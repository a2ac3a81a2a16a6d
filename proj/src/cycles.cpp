#include "cycler/cycles.hpp"

#include <algorithm>
#include <sstream>

namespace cycler::cycles {

bool CyclePath::contains(ElementId e) const {
    return std::find(elements.begin(), elements.end(), e) != elements.end();
}

const ElementId* CyclePath::element_from(const Ldba& ldba, StateId b) const {
    for (const ElementId& e : elements) {
        if (ldba.element_source(e) == b) return &e;
    }
    return nullptr;
}

bool path_less(const CyclePath& a, const CyclePath& b) {
    return std::lexicographical_compare(a.elements.begin(), a.elements.end(), b.elements.begin(), b.elements.end());
}

namespace {

class Dfs {
public:
    Dfs(const Ldba& ldba, PathKind kind, std::vector<CyclePath>& out)
        : ldba_(ldba), kind_(kind), out_(out), visited_(static_cast<std::size_t>(ldba.num_states), false) {}

    void run(StateId start) {
        start_ = start;
        path_.clear();
        visit(start);
    }

private:
    void visit(StateId b) {
        visited_[static_cast<std::size_t>(b)] = true;
        for (ElementId e : ldba_.out_elements(b)) {
            const StateId next = ldba_.element_target(e);
            path_.push_back(e);
            if (ldba_.is_accepting(next)) {
                out_.push_back({kind_, path_, start_, next});
            } else if (!visited_[static_cast<std::size_t>(next)]) {
                visit(next);
            }
            path_.pop_back();
        }
        visited_[static_cast<std::size_t>(b)] = false;
    }

    const Ldba& ldba_;
    PathKind kind_;
    std::vector<CyclePath>& out_;
    std::vector<bool> visited_;
    std::vector<ElementId> path_;
    StateId start_ = 0;
};

void sort_paths(std::vector<CyclePath>& paths) {
    std::sort(paths.begin(), paths.end(), path_less);
}

}  // namespace

std::vector<CyclePath> find_maips_from(const Ldba& ldba, StateId start) {
    std::vector<CyclePath> out;
    Dfs(ldba, PathKind::Maip, out).run(start);
    sort_paths(out);
    return out;
}

std::vector<CyclePath> find_maips(const Ldba& ldba) {
    return find_maips_from(ldba, ldba.initial);
}

std::vector<CyclePath> find_macs(const Ldba& ldba) {
    std::vector<CyclePath> out;
    Dfs dfs(ldba, PathKind::Mac, out);
    for (StateId b : ldba.accepting_states()) dfs.run(b);
    sort_paths(out);
    return out;
}

std::vector<CyclePath> brute_force_paths(const Ldba& ldba, const std::vector<StateId>& sources, PathKind kind) {
    const int n = ldba.num_states;
    if (n > 10) throw ltl::DomainError("brute_force_paths is limited to 10 states");

    // parallel elements between every ordered pair of states
    std::vector<std::vector<std::vector<ElementId>>> between(
        static_cast<std::size_t>(n), std::vector<std::vector<ElementId>>(static_cast<std::size_t>(n)));
    for (ElementId e = 0; e < ldba.num_elements(); ++e) {
        between[static_cast<std::size_t>(ldba.element_source(e))][static_cast<std::size_t>(ldba.element_target(e))]
            .push_back(e);
    }
    const std::vector<StateId> ends = ldba.accepting_states();

    std::vector<CyclePath> out;
    for (StateId src : sources) {
        std::vector<StateId> pool;
        for (StateId b = 0; b < n; ++b) {
            if (b != src && !ldba.is_accepting(b)) pool.push_back(b);
        }
        const std::size_t subsets = std::size_t{1} << pool.size();
        for (std::size_t mask = 0; mask < subsets; ++mask) {
            std::vector<StateId> mid;
            for (std::size_t i = 0; i < pool.size(); ++i) {
                if (mask & (std::size_t{1} << i)) mid.push_back(pool[i]);
            }
            // std::next_permutation walks every ordering of the subset
            do {
                for (StateId end : ends) {
                    std::vector<StateId> chain{src};
                    chain.insert(chain.end(), mid.begin(), mid.end());
                    chain.push_back(end);
                    std::vector<const std::vector<ElementId>*> hops;
                    bool feasible = true;
                    for (std::size_t k = 0; k + 1 < chain.size(); ++k) {
                        const auto& opts =
                            between[static_cast<std::size_t>(chain[k])][static_cast<std::size_t>(chain[k + 1])];
                        if (opts.empty()) {
                            feasible = false;
                            break;
                        }
                        hops.push_back(&opts);
                    }
                    if (!feasible) continue;
                    // mixed-radix counter over the parallel-edge choices
                    std::vector<std::size_t> pick(hops.size(), 0);
                    while (true) {
                        CyclePath p{kind, {}, src, end};
                        for (std::size_t k = 0; k < hops.size(); ++k) p.elements.push_back((*hops[k])[pick[k]]);
                        out.push_back(std::move(p));
                        std::size_t k = 0;
                        while (k < pick.size() && ++pick[k] == hops[k]->size()) pick[k++] = 0;
                        if (k == pick.size()) break;
                    }
                }
            } while (std::next_permutation(mid.begin(), mid.end()));
        }
    }
    sort_paths(out);
    return out;
}

std::string check_path(const Ldba& ldba, const CyclePath& p, StateId expected_start) {
    if (p.elements.empty()) return "empty path";
    if (p.start != expected_start) return "unexpected start state";
    if (ldba.element_source(p.elements.front()) != p.start) return "first element does not leave the start state";
    if (ldba.element_target(p.elements.back()) != p.end) return "last element does not reach the end state";
    if (!ldba.is_accepting(p.end)) return "end state is not accepting";
    if (p.kind == PathKind::Mac && !ldba.is_accepting(p.start)) return "cycle does not start at an accepting state";
    std::vector<StateId> seen{p.start};
    for (std::size_t k = 0; k + 1 < p.elements.size(); ++k) {
        const StateId mid = ldba.element_target(p.elements[k]);
        if (mid != ldba.element_source(p.elements[k + 1])) return "elements do not chain";
        if (ldba.is_accepting(mid)) return "intermediate state is accepting";
        if (std::find(seen.begin(), seen.end(), mid) != seen.end()) return "intermediate state repeats";
        seen.push_back(mid);
    }
    return {};
}

std::string describe(const Ldba& ldba, const CyclePath& p) {
    std::ostringstream os;
    os << (p.kind == PathKind::Maip ? "MAIP" : "MAC") << " [";
    for (std::size_t k = 0; k < p.elements.size(); ++k) os << (k ? " " : "") << p.elements[k];
    os << "] " << p.start;
    for (ElementId e : p.elements) os << " -[" << ldba.element_label(e) << "]-> " << ldba.element_target(e);
    return os.str();
}

}  // namespace cycler::cycles
