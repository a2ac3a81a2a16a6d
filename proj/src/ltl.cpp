#include "cycler/ltl.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

namespace cycler::ltl {

ApSet::ApSet(std::vector<std::string> names) : names_(std::move(names)) {
    if (names_.size() > 16) {
        throw DomainError("at most 16 atomic propositions are supported");
    }
    for (std::size_t i = 0; i < names_.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            if (names_[i] == names_[j]) throw DomainError("duplicate atomic proposition '" + names_[i] + "'");
        }
    }
}

std::optional<std::size_t> ApSet::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < names_.size(); ++i) {
        if (names_[i] == name) return i;
    }
    return std::nullopt;
}

Letter letter_from_names(const ApSet& aps, const std::set<std::string>& names) {
    Letter l = 0;
    for (const auto& n : names) {
        auto idx = aps.index_of(n);
        if (!idx) throw UnknownAtomError(n);
        l |= Letter{1} << *idx;
    }
    return l;
}

std::set<std::string> letter_names(const ApSet& aps, Letter letter) {
    std::set<std::string> out;
    for (std::size_t i = 0; i < aps.size(); ++i) {
        if (letter & (Letter{1} << i)) out.insert(aps.name(i));
    }
    return out;
}

std::string format_letter(const ApSet& aps, Letter letter) {
    std::string s = "{";
    bool first = true;
    for (std::size_t i = 0; i < aps.size(); ++i) {
        if (!(letter & (Letter{1} << i))) continue;
        if (!first) s += ", ";
        s += aps.name(i);
        first = false;
    }
    return s + "}";
}

Formula make_atom(const ApSet& aps, std::string_view name) {
    auto idx = aps.index_of(name);
    if (!idx) throw UnknownAtomError(std::string(name));
    Formula f;
    f.op = Op::Atom;
    f.atom = std::string(name);
    f.atom_index = *idx;
    return f;
}

Formula make_const(bool value) {
    Formula f;
    f.op = value ? Op::True : Op::False;
    return f;
}

Formula make_unary(Op op, Formula child) {
    Formula f;
    f.op = op;
    f.children.push_back(std::move(child));
    return f;
}

Formula make_binary(Op op, Formula lhs, Formula rhs) {
    Formula f;
    f.op = op;
    f.children.push_back(std::move(lhs));
    f.children.push_back(std::move(rhs));
    return f;
}

bool is_temporal_free(const Formula& f) {
    switch (f.op) {
        case Op::Next:
        case Op::Globally:
        case Op::Eventually:
        case Op::Until:
            return false;
        default:
            return std::all_of(f.children.begin(), f.children.end(),
                               [](const Formula& c) { return is_temporal_free(c); });
    }
}

std::size_t depth(const Formula& f) {
    std::size_t d = 0;
    for (const auto& c : f.children) d = std::max(d, depth(c));
    return d + 1;
}

namespace {

// Binding strength; larger binds tighter.
int precedence(Op op) {
    switch (op) {
        case Op::Implies: return 1;
        case Op::Or: return 2;
        case Op::And: return 3;
        case Op::Until: return 4;
        default: return 5;
    }
}

void write(std::ostringstream& os, const Formula& f);

void write_operand(std::ostringstream& os, const Formula& child, int min_prec) {
    if (precedence(child.op) < min_prec) {
        os << '(';
        write(os, child);
        os << ')';
    } else {
        write(os, child);
    }
}

void write(std::ostringstream& os, const Formula& f) {
    switch (f.op) {
        case Op::Atom: os << f.atom; return;
        case Op::True: os << "true"; return;
        case Op::False: os << "false"; return;
        case Op::Not:
            os << '!';
            write_operand(os, f.children[0], 5);
            return;
        case Op::Next: os << "X("; write(os, f.children[0]); os << ')'; return;
        case Op::Globally: os << "G("; write(os, f.children[0]); os << ')'; return;
        case Op::Eventually: os << "F("; write(os, f.children[0]); os << ')'; return;
        case Op::And:
        case Op::Or: {
            // left-associative: the right operand needs strictly tighter binding
            const int p = precedence(f.op);
            write_operand(os, f.children[0], p);
            os << (f.op == Op::And ? " & " : " | ");
            write_operand(os, f.children[1], p + 1);
            return;
        }
        case Op::Implies:
        case Op::Until: {
            const int p = precedence(f.op);
            write_operand(os, f.children[0], p + 1);
            os << (f.op == Op::Implies ? " -> " : " U ");
            write_operand(os, f.children[1], p);
            return;
        }
    }
}

class Parser {
public:
    Parser(std::string_view text, const ApSet& aps) : text_(text), aps_(aps) {}

    Formula parse() {
        skip_ws();
        if (pos_ >= text_.size()) throw SyntaxError(pos_, "empty formula");
        Formula f = parse_implies();
        skip_ws();
        if (pos_ != text_.size()) throw SyntaxError(pos_, "unexpected trailing input");
        return f;
    }

private:
    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool peek_ident_start() const {
        return pos_ < text_.size() &&
               (std::isalpha(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_');
    }

    std::string_view peek_ident() const {
        std::size_t end = pos_;
        while (end < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[end])) || text_[end] == '_')) {
            ++end;
        }
        return text_.substr(pos_, end - pos_);
    }

    bool accept(std::string_view tok) {
        skip_ws();
        if (text_.substr(pos_, tok.size()) == tok) {
            pos_ += tok.size();
            return true;
        }
        return false;
    }

    void expect(char c) {
        skip_ws();
        if (pos_ >= text_.size()) throw SyntaxError(pos_, std::string("expected '") + c + "', found end of input");
        if (text_[pos_] != c) throw SyntaxError(pos_, std::string("expected '") + c + "'");
        ++pos_;
    }

    Formula parse_implies() {
        Formula lhs = parse_or();
        if (accept("->")) return make_binary(Op::Implies, std::move(lhs), parse_implies());
        return lhs;
    }

    Formula parse_or() {
        Formula lhs = parse_and();
        while (accept("|")) lhs = make_binary(Op::Or, std::move(lhs), parse_and());
        return lhs;
    }

    Formula parse_and() {
        Formula lhs = parse_until();
        while (true) {
            skip_ws();
            // "&&" is not part of the grammar; a lone '&' is
            if (!accept("&")) break;
            lhs = make_binary(Op::And, std::move(lhs), parse_until());
        }
        return lhs;
    }

    Formula parse_until() {
        Formula lhs = parse_unary();
        skip_ws();
        if (peek_ident_start() && peek_ident() == "U") {
            pos_ += 1;
            return make_binary(Op::Until, std::move(lhs), parse_until());
        }
        return lhs;
    }

    Formula parse_unary() {
        skip_ws();
        if (pos_ >= text_.size()) throw SyntaxError(pos_, "unexpected end of input");
        const char c = text_[pos_];
        if (c == '!') {
            ++pos_;
            return make_unary(Op::Not, parse_unary());
        }
        if (c == '(') {
            ++pos_;
            Formula inner = parse_implies();
            expect(')');
            return inner;
        }
        if (!peek_ident_start()) throw SyntaxError(pos_, std::string("unexpected character '") + c + "'");
        const std::size_t start = pos_;
        const std::string_view id = peek_ident();
        pos_ += id.size();
        if (id == "X" || id == "G" || id == "F") {
            const Op op = id == "X" ? Op::Next : id == "G" ? Op::Globally : Op::Eventually;
            expect('(');
            Formula inner = parse_implies();
            expect(')');
            return make_unary(op, std::move(inner));
        }
        if (id == "U") throw SyntaxError(start, "'U' needs a left operand");
        if (id == "true") return make_const(true);
        if (id == "false") return make_const(false);
        return make_atom(aps_, id);
    }

    std::string_view text_;
    const ApSet& aps_;
    std::size_t pos_ = 0;
};

double atom_value(const Formula& f, const RobustnessVector& rv, const QSConfig& cfg) {
    if (f.atom_index >= rv.size()) throw DomainError("robustness vector misses proposition '" + f.atom + "'");
    return rv[f.atom_index] - cfg.thresholds.at(f.atom_index);
}

// Robustness over the window trace[begin, end).
double eval_window(const Formula& f, std::span<const RobustnessVector> trace, std::size_t begin,
                   std::size_t end, const QSConfig& cfg) {
    switch (f.op) {
        case Op::Atom: return atom_value(f, trace[begin], cfg);
        case Op::True: return cfg.rho_max;
        case Op::False: return -cfg.rho_max;
        case Op::Not: return -eval_window(f.children[0], trace, begin, end, cfg);
        case Op::And:
            return std::min(eval_window(f.children[0], trace, begin, end, cfg),
                            eval_window(f.children[1], trace, begin, end, cfg));
        case Op::Or:
            return std::max(eval_window(f.children[0], trace, begin, end, cfg),
                            eval_window(f.children[1], trace, begin, end, cfg));
        case Op::Implies:
            return std::max(-eval_window(f.children[0], trace, begin, end, cfg),
                            eval_window(f.children[1], trace, begin, end, cfg));
        case Op::Next:
            if (begin + 1 >= end) throw DomainError("X applied at the final trace position");
            return eval_window(f.children[0], trace, begin + 1, end, cfg);
        case Op::Globally: {
            double v = eval_window(f.children[0], trace, begin, end, cfg);
            for (std::size_t t = begin + 1; t < end; ++t) {
                v = std::min(v, eval_window(f.children[0], trace, t, end, cfg));
            }
            return v;
        }
        case Op::Eventually: {
            double v = eval_window(f.children[0], trace, begin, end, cfg);
            for (std::size_t t = begin + 1; t < end; ++t) {
                v = std::max(v, eval_window(f.children[0], trace, t, end, cfg));
            }
            return v;
        }
        case Op::Until: {
            // left operand is judged on the window that stops at the split point;
            // an empty prefix is a vacuous conjunction (rho_max)
            double best = 0.0;
            for (std::size_t split = begin; split < end; ++split) {
                double prefix = split == begin ? cfg.rho_max : INFINITY;
                for (std::size_t t = begin; t < split; ++t) {
                    prefix = std::min(prefix, eval_window(f.children[0], trace, t, split, cfg));
                }
                const double v = std::min(eval_window(f.children[1], trace, split, end, cfg), prefix);
                best = split == begin ? v : std::max(best, v);
            }
            return best;
        }
    }
    throw DomainError("unhandled operator");
}

}  // namespace

std::string to_string(const Formula& f) {
    std::ostringstream os;
    write(os, f);
    return os.str();
}

SyntaxError::SyntaxError(std::size_t offset, const std::string& what)
    : std::runtime_error("syntax error at offset " + std::to_string(offset) + ": " + what), offset_(offset) {}

UnknownAtomError::UnknownAtomError(std::string atom)
    : std::runtime_error("unknown atomic proposition '" + atom + "'"), atom_(std::move(atom)) {}

Formula parse_ltl(std::string_view text, const ApSet& aps) {
    return Parser(text, aps).parse();
}

void QSConfig::validate(std::size_t num_aps) const {
    if (!(rho_min < rho_max)) throw DomainError("rho_min must be below rho_max");
    if (thresholds.size() != num_aps) throw DomainError("one threshold per proposition is required");
    for (double c : thresholds) {
        if (c < rho_min || c > rho_max) throw DomainError("threshold outside [rho_min, rho_max]");
    }
}

QSConfig QSConfig::uniform(std::size_t num_aps, double rho_min, double rho_max, double threshold) {
    QSConfig cfg;
    cfg.rho_min = rho_min;
    cfg.rho_max = rho_max;
    cfg.thresholds.assign(num_aps, threshold);
    return cfg;
}

RobustnessVector robustness_from_map(const ApSet& aps, const std::map<std::string, double>& values) {
    RobustnessVector rv(aps.size(), 0.0);
    std::vector<bool> seen(aps.size(), false);
    for (const auto& [name, v] : values) {
        auto idx = aps.index_of(name);
        if (!idx) throw UnknownAtomError(name);
        rv[*idx] = v;
        seen[*idx] = true;
    }
    for (std::size_t i = 0; i < aps.size(); ++i) {
        if (!seen[i]) throw DomainError("robustness missing for proposition '" + aps.name(i) + "'");
    }
    return rv;
}

double qs_eval(const Formula& f, std::span<const RobustnessVector> trace, const QSConfig& cfg) {
    if (trace.empty()) throw DomainError("qs_eval needs a non-empty trace");
    return eval_window(f, trace, 0, trace.size(), cfg);
}

double qs_eval_state(const Formula& guard, const RobustnessVector& rv, const QSConfig& cfg) {
    switch (guard.op) {
        case Op::Atom: return atom_value(guard, rv, cfg);
        case Op::True: return cfg.rho_max;
        case Op::False: return -cfg.rho_max;
        case Op::Not: return -qs_eval_state(guard.children[0], rv, cfg);
        case Op::And:
            return std::min(qs_eval_state(guard.children[0], rv, cfg), qs_eval_state(guard.children[1], rv, cfg));
        case Op::Or:
            return std::max(qs_eval_state(guard.children[0], rv, cfg), qs_eval_state(guard.children[1], rv, cfg));
        case Op::Implies:
            return std::max(-qs_eval_state(guard.children[0], rv, cfg), qs_eval_state(guard.children[1], rv, cfg));
        default:
            throw DomainError("temporal operator in a state guard");
    }
}

bool bool_eval(const Formula& guard, Letter letter) {
    switch (guard.op) {
        case Op::Atom: return (letter >> guard.atom_index) & 1U;
        case Op::True: return true;
        case Op::False: return false;
        case Op::Not: return !bool_eval(guard.children[0], letter);
        case Op::And: return bool_eval(guard.children[0], letter) && bool_eval(guard.children[1], letter);
        case Op::Or: return bool_eval(guard.children[0], letter) || bool_eval(guard.children[1], letter);
        case Op::Implies: return !bool_eval(guard.children[0], letter) || bool_eval(guard.children[1], letter);
        default:
            throw DomainError("temporal operator in a state guard");
    }
}

bool bool_eval(const Formula& guard, const ApSet& aps, const std::set<std::string>& letter) {
    return bool_eval(guard, letter_from_names(aps, letter));
}

Letter threshold_letter(const RobustnessVector& rv, const QSConfig& cfg) {
    Letter l = 0;
    for (std::size_t i = 0; i < rv.size(); ++i) {
        if (rv[i] >= cfg.thresholds.at(i)) l |= Letter{1} << i;
    }
    return l;
}

}  // namespace cycler::ltl
