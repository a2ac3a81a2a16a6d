#pragma once

// Minimal accepting initial paths (MAIPs) and minimal accepting cycles (MACs).

#include <string>
#include <vector>

#include "cycler/ldba.hpp"

namespace cycler::cycles {

using automaton::ElementId;
using automaton::Ldba;
using automaton::StateId;

enum class PathKind { Maip, Mac };

struct CyclePath {
    PathKind kind = PathKind::Maip;
    std::vector<ElementId> elements;
    StateId start = 0;
    StateId end = 0;

    std::size_t size() const { return elements.size(); }
    bool contains(ElementId e) const;
    /// Element of this path leaving state b, if any. Paths are simple, so it is unique.
    const ElementId* element_from(const Ldba& ldba, StateId b) const;

    bool operator==(const CyclePath&) const = default;
};

/// Lexicographic by element sequence.
bool path_less(const CyclePath& a, const CyclePath& b);

/// Depth-first enumeration with backtracking. A path is recorded the moment it
/// reaches any accepting state; only non-accepting states are explored further.
std::vector<CyclePath> find_maips(const Ldba& ldba);
std::vector<CyclePath> find_maips_from(const Ldba& ldba, StateId start);
std::vector<CyclePath> find_macs(const Ldba& ldba);

/// Exhaustive oracle: enumerates ordered sequences of distinct intermediate
/// states and every parallel-edge choice between them. Limited to 10 states.
std::vector<CyclePath> brute_force_paths(const Ldba& ldba, const std::vector<StateId>& sources, PathKind kind);

/// Empty string when the path satisfies chaining, endpoint, and minimality rules;
/// otherwise a description of the first violation.
std::string check_path(const Ldba& ldba, const CyclePath& p, StateId expected_start);

std::string describe(const Ldba& ldba, const CyclePath& p);

}  // namespace cycler::cycles
