#include "cycler/ldba.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace cycler::automaton {

using ltl::Letter;

ParseError::ParseError(std::size_t line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

namespace {

std::size_t idx(StateId b) { return static_cast<std::size_t>(b); }

std::string state_name(StateId b) { return "state " + std::to_string(b); }

}  // namespace

StateId Ldba::element_source(ElementId e) const {
    return is_eps(e) ? eps_edges.at(e - edges.size()).from : edges.at(e).from;
}

StateId Ldba::element_target(ElementId e) const {
    return is_eps(e) ? eps_edges.at(e - edges.size()).to : edges.at(e).to;
}

std::string Ldba::element_label(ElementId e) const {
    return is_eps(e) ? "eps:" + eps_edges.at(e - edges.size()).name : ltl::to_string(edges.at(e).guard);
}

std::string Ldba::describe_element(ElementId e) const {
    return "(" + std::to_string(element_source(e)) + ", " + element_label(e) + ", " +
           std::to_string(element_target(e)) + ")";
}

std::vector<StateId> Ldba::accepting_states() const {
    std::vector<StateId> out;
    for (int b = 0; b < num_states; ++b) {
        if (accepting[idx(b)]) out.push_back(b);
    }
    return out;
}

void Ldba::check_ranges() const {
    if (num_states < 1) throw ValidationError("automaton needs at least one state");
    if (initial < 0 || initial >= num_states) throw ValidationError("initial state out of range");
    if (accepting.size() != idx(num_states) || nondet.size() != idx(num_states)) {
        throw ValidationError("accepting/nondet flags must cover every state");
    }
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const Edge& e = edges[i];
        if (e.from < 0 || e.from >= num_states || e.to < 0 || e.to >= num_states) {
            throw ValidationError("edge " + std::to_string(i) + " references a state out of range");
        }
        if (!ltl::is_temporal_free(e.guard)) {
            throw ValidationError("edge " + std::to_string(i) + " guard contains a temporal operator");
        }
    }
    std::set<std::pair<StateId, std::string>> names;
    for (const EpsEdge& e : eps_edges) {
        if (e.from < 0 || e.from >= num_states || e.to < 0 || e.to >= num_states) {
            throw ValidationError("eps edge '" + e.name + "' references a state out of range");
        }
        if (!names.insert({e.from, e.name}).second) {
            throw ValidationError("duplicate jump '" + e.name + "' at " + state_name(e.from));
        }
    }
}

void Ldba::build_letter_sets() {
    const std::size_t n_letters = std::size_t{1} << aps.size();
    letters_.assign(edges.size(), std::vector<bool>(n_letters, false));
    for (std::size_t i = 0; i < edges.size(); ++i) {
        for (Letter l = 0; l < n_letters; ++l) letters_[i][l] = ltl::bool_eval(edges[i].guard, l);
    }
}

void Ldba::check_structure() const {
    const std::size_t n_letters = std::size_t{1} << aps.size();
    for (int b = 0; b < num_states; ++b) {
        if (accepting[idx(b)] && nondet[idx(b)]) {
            throw ValidationError("accepting " + state_name(b) + " lies in the nondeterministic component");
        }
    }
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const Edge& e = edges[i];
        if (!nondet[idx(e.from)] && nondet[idx(e.to)]) {
            throw ValidationError("edge " + std::to_string(i) + " leaves the deterministic component: " +
                                  state_name(e.from) + " -> " + state_name(e.to));
        }
    }
    for (const EpsEdge& e : eps_edges) {
        if (!nondet[idx(e.from)]) {
            throw ValidationError("eps edge '" + e.name + "' starts in deterministic " + state_name(e.from));
        }
    }
    // per-letter determinism inside the deterministic component
    std::vector<std::vector<std::size_t>> out(idx(num_states));
    for (std::size_t i = 0; i < edges.size(); ++i) out[idx(edges[i].from)].push_back(i);
    for (int b = 0; b < num_states; ++b) {
        if (nondet[idx(b)]) continue;
        for (Letter l = 0; l < n_letters; ++l) {
            std::size_t first = edges.size();
            for (std::size_t i : out[idx(b)]) {
                if (!letters_[i][l]) continue;
                if (first != edges.size()) {
                    throw ValidationError("nondeterminism at " + state_name(b) + " on letter " +
                                          ltl::format_letter(aps, l) + ": edges " + std::to_string(first) +
                                          " and " + std::to_string(i) + " both fire");
                }
                first = i;
            }
        }
    }
}

void Ldba::synthesize_sink() {
    const std::size_t n_letters = std::size_t{1} << aps.size();
    std::vector<std::vector<std::size_t>> out(idx(num_states));
    for (std::size_t i = 0; i < edges.size(); ++i) out[idx(edges[i].from)].push_back(i);

    std::vector<Edge> extra;
    const StateId sink_id = num_states;
    for (int b = 0; b < num_states; ++b) {
        if (nondet[idx(b)]) continue;
        bool missing = false;
        for (Letter l = 0; l < n_letters && !missing; ++l) {
            missing = std::none_of(out[idx(b)].begin(), out[idx(b)].end(),
                                   [&](std::size_t i) { return letters_[i][l]; });
        }
        if (!missing) continue;
        ltl::Formula guard = ltl::make_const(true);
        if (!out[idx(b)].empty()) {
            ltl::Formula any = edges[out[idx(b)][0]].guard;
            for (std::size_t k = 1; k < out[idx(b)].size(); ++k) {
                any = ltl::make_binary(ltl::Op::Or, std::move(any), edges[out[idx(b)][k]].guard);
            }
            guard = ltl::make_unary(ltl::Op::Not, std::move(any));
        }
        extra.push_back({b, sink_id, std::move(guard)});
    }
    if (extra.empty()) return;
    extra.push_back({sink_id, sink_id, ltl::make_const(true)});
    num_states += 1;
    accepting.push_back(false);
    nondet.push_back(false);
    sink = sink_id;
    for (auto& e : extra) edges.push_back(std::move(e));
    build_letter_sets();
}

void Ldba::build_step_table() {
    const std::size_t n_letters = std::size_t{1} << aps.size();
    out_.assign(idx(num_states), {});
    for (std::size_t i = 0; i < edges.size(); ++i) out_[idx(edges[i].from)].push_back(i);
    for (std::size_t k = 0; k < eps_edges.size(); ++k) out_[idx(eps_edges[k].from)].push_back(edges.size() + k);

    step_.assign(idx(num_states) * n_letters, kNone);
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const std::size_t base = idx(edges[i].from) * n_letters;
        for (Letter l = 0; l < n_letters; ++l) {
            if (!letters_[i][l]) continue;
            long& slot = step_[base + l];
            slot = slot == kNone ? static_cast<long>(i) : kAmbiguous;
        }
    }
}

void Ldba::finalize(const ParseOptions& opts) {
    sink.reset();
    check_ranges();
    build_letter_sets();
    check_structure();
    if (opts.allow_partial) synthesize_sink();
    build_step_table();
    const std::size_t n_letters = std::size_t{1} << aps.size();
    for (int b = 0; b < num_states; ++b) {
        if (nondet[idx(b)]) continue;
        for (Letter l = 0; l < n_letters; ++l) {
            if (step_[idx(b) * n_letters + l] == kNone) {
                throw ValidationError("incomplete automaton: " + state_name(b) + " has no edge for letter " +
                                      ltl::format_letter(aps, l) + " (use --allow-partial to add a sink)");
            }
        }
    }
}

Transition Ldba::step(StateId b, Letter letter) const {
    if (b < 0 || b >= num_states) throw IncompleteError("state out of range");
    const std::size_t n_letters = std::size_t{1} << aps.size();
    if (letter >= n_letters) throw IncompleteError("letter out of range");
    const long e = step_.at(idx(b) * n_letters + letter);
    if (e == kNone) {
        throw IncompleteError("incomplete automaton: no edge from " + state_name(b) + " on letter " +
                              ltl::format_letter(aps, letter));
    }
    if (e == kAmbiguous) {
        throw IncompleteError("ambiguous letter step at nondeterministic " + state_name(b) + " on letter " +
                              ltl::format_letter(aps, letter) + "; use a jump");
    }
    return {edges[static_cast<std::size_t>(e)].to, static_cast<ElementId>(e)};
}

ElementId Ldba::jump_element(StateId b, std::string_view jump_id) const {
    for (std::size_t k = 0; k < eps_edges.size(); ++k) {
        if (eps_edges[k].from == b && eps_edges[k].name == jump_id) return edges.size() + k;
    }
    throw ltl::DomainError("no jump '" + std::string(jump_id) + "' at " + state_name(b));
}

StateId Ldba::jump(StateId b, std::string_view jump_id) const {
    return element_target(jump_element(b, jump_id));
}

std::vector<ElementId> Ldba::jumps_at(StateId b) const {
    std::vector<ElementId> out;
    for (std::size_t k = 0; k < eps_edges.size(); ++k) {
        if (eps_edges[k].from == b) out.push_back(edges.size() + k);
    }
    return out;
}

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> words(const std::string& s) {
    std::istringstream is(s);
    std::vector<std::string> out;
    for (std::string w; is >> w;) out.push_back(w);
    return out;
}

int parse_int(const std::string& s, std::size_t line) {
    try {
        std::size_t used = 0;
        const int v = std::stoi(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError(line, "expected an integer, found '" + s + "'");
    }
}

struct PendingEdge {
    std::size_t line;
    StateId from;
    StateId to;
    std::string rhs;
};

// "<from> -> <to> : <rest>"
PendingEdge split_arrow(const std::string& body, std::size_t line) {
    const auto arrow = body.find("->");
    const auto colon = body.find(':', arrow == std::string::npos ? 0 : arrow);
    if (arrow == std::string::npos || colon == std::string::npos) {
        throw ParseError(line, "expected '<from> -> <to> : <label>'");
    }
    PendingEdge p;
    p.line = line;
    p.from = parse_int(trim(body.substr(0, arrow)), line);
    p.to = parse_int(trim(body.substr(arrow + 2, colon - arrow - 2)), line);
    p.rhs = trim(body.substr(colon + 1));
    if (p.rhs.empty()) throw ParseError(line, "missing edge label");
    return p;
}

}  // namespace

Ldba parse_ldba(std::string_view text, const ParseOptions& opts) {
    Ldba a;
    bool seen_header = false;
    std::optional<std::vector<std::string>> aps;
    std::optional<int> states;
    std::optional<int> initial;
    std::optional<std::vector<std::string>> accepting;
    std::vector<std::string> nondet;
    std::vector<PendingEdge> edges;
    std::vector<PendingEdge> eps;
    std::set<std::string> keys_seen;

    std::size_t line_no = 0;
    std::istringstream in{std::string(text)};
    for (std::string raw; std::getline(in, raw);) {
        ++line_no;
        const auto hash = raw.find('#');
        const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        if (!seen_header) {
            if (words(line) != std::vector<std::string>{"ldba", "v1"}) {
                throw ParseError(line_no, "expected header 'ldba v1'");
            }
            seen_header = true;
            continue;
        }
        const auto colon = line.find(':');
        if (colon == std::string::npos) throw ParseError(line_no, "expected '<key>: <value>'");
        const std::string key = trim(line.substr(0, colon));
        const std::string value = trim(line.substr(colon + 1));
        if (key != "edge" && key != "eps" && !keys_seen.insert(key).second) {
            throw ParseError(line_no, "duplicate key '" + key + "'");
        }
        if (key == "aps") {
            aps = words(value);
        } else if (key == "states") {
            states = parse_int(value, line_no);
        } else if (key == "initial") {
            initial = parse_int(value, line_no);
        } else if (key == "accepting") {
            accepting = words(value);
        } else if (key == "nondet") {
            nondet = words(value);
        } else if (key == "edge") {
            edges.push_back(split_arrow(value, line_no));
        } else if (key == "eps") {
            eps.push_back(split_arrow(value, line_no));
        } else {
            throw ParseError(line_no, "unknown key '" + key + "'");
        }
    }
    if (!seen_header) throw ParseError(line_no, "missing header 'ldba v1'");
    if (!aps) throw ParseError(line_no, "missing 'aps:'");
    if (!states) throw ParseError(line_no, "missing 'states:'");
    if (!initial) throw ParseError(line_no, "missing 'initial:'");
    if (!accepting) throw ParseError(line_no, "missing 'accepting:'");

    try {
        a.aps = ltl::ApSet(*aps);
    } catch (const std::exception& e) {
        throw ParseError(line_no, e.what());
    }
    if (*states < 1) throw ParseError(line_no, "'states:' must be positive");
    a.num_states = *states;
    a.initial = *initial;
    a.accepting.assign(static_cast<std::size_t>(*states), false);
    a.nondet.assign(static_cast<std::size_t>(*states), false);
    auto mark = [&](const std::vector<std::string>& ids, std::vector<bool>& flags, const char* what) {
        for (const auto& s : ids) {
            const int b = parse_int(s, line_no);
            if (b < 0 || b >= *states) throw ParseError(line_no, std::string(what) + " state " + s + " out of range");
            flags[static_cast<std::size_t>(b)] = true;
        }
    };
    mark(*accepting, a.accepting, "accepting");
    mark(nondet, a.nondet, "nondet");

    for (const auto& p : edges) {
        try {
            a.edges.push_back({p.from, p.to, ltl::parse_ltl(p.rhs, a.aps)});
        } catch (const std::exception& e) {
            throw ParseError(p.line, e.what());
        }
    }
    for (const auto& p : eps) {
        if (words(p.rhs).size() != 1) throw ParseError(p.line, "jump id must be a single identifier");
        a.eps_edges.push_back({p.from, p.rhs, p.to});
    }
    a.finalize(opts);
    return a;
}

Ldba load_ldba(const std::string& path, const ParseOptions& opts) {
    std::ifstream in(path);
    if (!in) throw std::ios_base::failure("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_ldba(ss.str(), opts);
}

std::string serialize(const Ldba& a) {
    std::ostringstream os;
    os << "ldba v1\n";
    os << "aps:";
    for (const auto& n : a.aps.names()) os << ' ' << n;
    os << "\nstates: " << a.num_states << "\ninitial: " << a.initial << "\nnondet:";
    for (int b = 0; b < a.num_states; ++b) {
        if (a.nondet[static_cast<std::size_t>(b)]) os << ' ' << b;
    }
    os << "\naccepting:";
    for (StateId b : a.accepting_states()) os << ' ' << b;
    os << '\n';
    if (a.sink) os << "# state " << *a.sink << " is a synthesized sink\n";
    for (std::size_t i = 0; i < a.edges.size(); ++i) {
        const Edge& e = a.edges[i];
        os << "edge: " << e.from << " -> " << e.to << " : " << ltl::to_string(e.guard) << "  # " << i << '\n';
    }
    for (const EpsEdge& e : a.eps_edges) os << "eps: " << e.from << " -> " << e.to << " : " << e.name << '\n';
    return os.str();
}

bool structurally_equal(const Ldba& a, const Ldba& b) {
    if (!(a.aps == b.aps) || a.num_states != b.num_states || a.initial != b.initial || a.accepting != b.accepting ||
        a.nondet != b.nondet || a.edges.size() != b.edges.size() || a.eps_edges.size() != b.eps_edges.size()) {
        return false;
    }
    for (std::size_t i = 0; i < a.edges.size(); ++i) {
        if (a.edges[i].from != b.edges[i].from || a.edges[i].to != b.edges[i].to ||
            !(a.edges[i].guard == b.edges[i].guard)) {
            return false;
        }
    }
    for (std::size_t i = 0; i < a.eps_edges.size(); ++i) {
        if (a.eps_edges[i].from != b.eps_edges[i].from || a.eps_edges[i].to != b.eps_edges[i].to ||
            a.eps_edges[i].name != b.eps_edges[i].name) {
            return false;
        }
    }
    return true;
}

}  // namespace cycler::automaton
