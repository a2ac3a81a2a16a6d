#pragma once

// LTL formulas over a declared proposition set: parsing, Boolean evaluation
// of state guards, and quantitative (robustness) semantics over finite traces.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cycler::ltl {

/// Ordered set of atomic proposition names. Position is the proposition's index.
class ApSet {
public:
    ApSet() = default;
    explicit ApSet(std::vector<std::string> names);

    std::size_t size() const { return names_.size(); }
    const std::vector<std::string>& names() const { return names_; }
    const std::string& name(std::size_t i) const { return names_.at(i); }
    std::optional<std::size_t> index_of(std::string_view name) const;
    bool contains(std::string_view name) const { return index_of(name).has_value(); }

    bool operator==(const ApSet&) const = default;

private:
    std::vector<std::string> names_;
};

/// A letter of the alphabet 2^AP, bit i set iff proposition i holds.
using Letter = std::uint32_t;

Letter letter_from_names(const ApSet& aps, const std::set<std::string>& names);
std::set<std::string> letter_names(const ApSet& aps, Letter letter);
std::string format_letter(const ApSet& aps, Letter letter);

enum class Op { Atom, True, False, Not, And, Or, Implies, Next, Globally, Eventually, Until };

struct Formula {
    Op op = Op::True;
    std::string atom;          // Atom only
    std::size_t atom_index = 0;  // Atom only: index into the declared ApSet
    std::vector<Formula> children;

    bool operator==(const Formula&) const = default;
};

Formula make_atom(const ApSet& aps, std::string_view name);
Formula make_const(bool value);
Formula make_unary(Op op, Formula child);
Formula make_binary(Op op, Formula lhs, Formula rhs);

bool is_temporal_free(const Formula& f);
std::size_t depth(const Formula& f);

/// Serializes with the minimal parentheses needed to reparse to the same tree.
std::string to_string(const Formula& f);

class SyntaxError : public std::runtime_error {
public:
    SyntaxError(std::size_t offset, const std::string& what);
    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

class UnknownAtomError : public std::runtime_error {
public:
    explicit UnknownAtomError(std::string atom);
    const std::string& atom() const { return atom_; }

private:
    std::string atom_;
};

/// Domain violations: temporal operators in state guards, X past the end of a trace, etc.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Grammar, loosest to tightest binding:
///   phi := phi -> phi | phi '|' phi | phi & phi | phi U phi
///        | !phi | X(phi) | G(phi) | F(phi) | ( phi ) | true | false | ap
/// `->` and `U` associate to the right, `&` and `|` to the left.
Formula parse_ltl(std::string_view text, const ApSet& aps);

/// Robustness values indexed like the enclosing ApSet.
using RobustnessVector = std::vector<double>;

struct QSConfig {
    double rho_max = 1.0;
    double rho_min = -1.0;
    std::vector<double> thresholds;  // c_x per proposition index

    void validate(std::size_t num_aps) const;
    static QSConfig uniform(std::size_t num_aps, double rho_min, double rho_max, double threshold = 0.0);
};

RobustnessVector robustness_from_map(const ApSet& aps, const std::map<std::string, double>& values);

/// Robustness of a formula over trace[0..]. Atoms read f_x(s_t) - c_x so that
/// positive means true; `true` is rho_max and `false` is its negation.
double qs_eval(const Formula& f, std::span<const RobustnessVector> trace, const QSConfig& cfg);

/// Robustness of a temporal-free guard at a single state.
double qs_eval_state(const Formula& guard, const RobustnessVector& rv, const QSConfig& cfg);

bool bool_eval(const Formula& guard, Letter letter);
bool bool_eval(const Formula& guard, const ApSet& aps, const std::set<std::string>& letter);

/// Letter of propositions whose robustness reaches their threshold.
Letter threshold_letter(const RobustnessVector& rv, const QSConfig& cfg);

}  // namespace cycler::ltl
