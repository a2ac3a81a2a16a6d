#pragma once

// Limit-deterministic Büchi automata: the `ldba v1` text format, structural
// validation, and stepping on letters and epsilon jumps.

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cycler/ltl.hpp"

namespace cycler::automaton {

using StateId = int;

/// Guard edges and eps edges share one id space: guard edges take 0..E-1 in
/// file order, eps edges follow as E..E+K-1. Frontiers and cycles use these ids.
using ElementId = std::size_t;

struct Edge {
    StateId from = 0;
    StateId to = 0;
    ltl::Formula guard;
};

struct EpsEdge {
    StateId from = 0;
    std::string name;
    StateId to = 0;
};

struct Transition {
    StateId state = 0;
    ElementId element = 0;

    bool operator==(const Transition&) const = default;
};

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& what);
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when stepping hits a (state, letter) pair without a unique successor.
class IncompleteError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ParseOptions {
    /// Route letters missing from deterministic states to a synthesized
    /// absorbing, non-accepting sink instead of rejecting the automaton.
    bool allow_partial = false;
};

class Ldba {
public:
    ltl::ApSet aps;
    int num_states = 0;
    StateId initial = 0;
    std::vector<bool> accepting;  // per state
    std::vector<bool> nondet;     // per state; false = deterministic component
    std::vector<Edge> edges;
    std::vector<EpsEdge> eps_edges;
    std::optional<StateId> sink;  // set when allow_partial synthesized one

    /// Checks every structural invariant and builds the stepping tables.
    /// Must be called after the fields are filled in and before stepping.
    void finalize(const ParseOptions& opts = {});

    std::size_t num_elements() const { return edges.size() + eps_edges.size(); }
    bool is_eps(ElementId e) const { return e >= edges.size(); }
    StateId element_source(ElementId e) const;
    StateId element_target(ElementId e) const;
    std::string element_label(ElementId e) const;
    std::string describe_element(ElementId e) const;

    bool is_accepting(StateId b) const { return accepting.at(static_cast<std::size_t>(b)); }
    std::vector<StateId> accepting_states() const;
    /// Number of states excluding a synthesized sink.
    int declared_states() const { return sink ? num_states - 1 : num_states; }

    /// Outgoing element ids of a state, guard edges first, ascending.
    const std::vector<ElementId>& out_elements(StateId b) const { return out_.at(static_cast<std::size_t>(b)); }

    Transition step(StateId b, ltl::Letter letter) const;
    StateId jump(StateId b, std::string_view jump_id) const;
    ElementId jump_element(StateId b, std::string_view jump_id) const;
    Transition initial_transition(ltl::Letter letter_of_s0) const { return step(initial, letter_of_s0); }

    /// Eps edges available at b, as element ids.
    std::vector<ElementId> jumps_at(StateId b) const;

    /// Letters (2^|AP| bit per letter) on which a guard edge fires.
    const std::vector<bool>& letters_of(ElementId edge) const { return letters_.at(edge); }

private:
    void check_ranges() const;
    void build_letter_sets();
    void synthesize_sink();
    void check_structure() const;
    void build_step_table();

    std::vector<std::vector<ElementId>> out_;
    std::vector<std::vector<bool>> letters_;
    // step_[b * 2^|AP| + letter]: fired edge id, or kNone / kAmbiguous
    std::vector<long> step_;
    static constexpr long kNone = -1;
    static constexpr long kAmbiguous = -2;
};

Ldba parse_ldba(std::string_view text, const ParseOptions& opts = {});
Ldba load_ldba(const std::string& path, const ParseOptions& opts = {});
std::string serialize(const Ldba& ldba);

/// True when two automata agree on every structural field (guards compared as trees).
bool structurally_equal(const Ldba& a, const Ldba& b);

}  // namespace cycler::automaton
