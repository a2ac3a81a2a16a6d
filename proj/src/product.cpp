#include "cycler/product.hpp"

#include <algorithm>

namespace cycler::product {

bool Frontier::none() const {
    return std::none_of(bits_.begin(), bits_.end(), [](bool b) { return b; });
}

LetterMap::LetterMap(const ltl::ApSet& env_aps, const ltl::ApSet& ldba_aps) {
    for (const auto& name : ldba_aps.names()) {
        auto idx = env_aps.index_of(name);
        if (!idx) throw ltl::DomainError("environment does not provide proposition '" + name + "'");
        env_index_.push_back(*idx);
    }
}

ltl::Letter LetterMap::map(ltl::Letter env_letter) const {
    ltl::Letter out = 0;
    for (std::size_t i = 0; i < env_index_.size(); ++i) {
        if ((env_letter >> env_index_[i]) & 1U) out |= ltl::Letter{1} << i;
    }
    return out;
}

ltl::RobustnessVector LetterMap::map(const ltl::RobustnessVector& env_rv) const {
    if (env_rv.empty()) return {};
    ltl::RobustnessVector out;
    out.reserve(env_index_.size());
    for (std::size_t i : env_index_) out.push_back(env_rv.at(i));
    return out;
}

Product::Product(const envs::Environment& env, const Ldba& ldba)
    : env_(env), ldba_(ldba), map_(env.aps(), ldba.aps) {}

ProductState Product::reset() const {
    ProductState ps;
    ps.s = env_.initial_state();
    ps.b = ldba_.initial_transition(label(ps.s)).state;
    ps.e = Frontier(ldba_.num_elements());
    return ps;
}

ProductStepResult Product::step(const ProductState& ps, const Action& a) const {
    ProductStepResult out;
    out.next.e = ps.e;
    if (a.jump) {
        if (*a.jump >= ldba_.num_elements() || !ldba_.is_eps(*a.jump) || ldba_.element_source(*a.jump) != ps.b) {
            throw ltl::DomainError("invalid jump at automaton state " + std::to_string(ps.b));
        }
        out.next.s = ps.s;
        out.next.b = ldba_.element_target(*a.jump);
        out.fired = *a.jump;
        out.letter = label(ps.s);
        out.r_mdp = 0.0;
    } else {
        envs::StepOutcome o = env_.step(ps.s, a.env);
        out.letter = label(o.next);
        const automaton::Transition tr = ldba_.step(ps.b, out.letter);
        out.next.s = std::move(o.next);
        out.next.b = tr.state;
        out.fired = tr.element;
        out.r_mdp = o.reward;
    }
    out.next.e.set(out.fired);
    if (ldba_.is_accepting(out.next.b)) out.next.e.clear();
    return out;
}

ProductTrajectory rollout(const Product& product, const Policy& policy, int horizon, std::uint64_t seed) {
    if (horizon < 1) throw ltl::DomainError("horizon must be at least 1");
    std::mt19937_64 rng(seed);
    ProductTrajectory traj;
    traj.steps.reserve(static_cast<std::size_t>(horizon) + 1);

    ProductState ps;
    ps.s = product.env().initial_state();
    const ltl::Letter l0 = product.label(ps.s);
    const automaton::Transition init = product.ldba().initial_transition(l0);
    ps.b = init.state;
    ps.e = Frontier(product.ldba().num_elements());

    TrajectoryStep first;
    first.s = ps.s;
    first.b = ps.b;
    first.e = ps.e;
    first.edge = init.element;
    first.letter = l0;
    first.rho = product.robustness(ps.s);
    traj.steps.push_back(std::move(first));

    for (int t = 0; t < horizon; ++t) {
        Action a = policy(ps, rng);
        ProductStepResult r = product.step(ps, a);
        traj.steps.back().action = std::move(a);
        traj.steps.back().r_mdp = r.r_mdp;

        TrajectoryStep next;
        next.s = r.next.s;
        next.b = r.next.b;
        next.e = r.next.e;
        next.edge = r.fired;
        next.letter = r.letter;
        next.rho = product.robustness(next.s);
        traj.steps.push_back(std::move(next));
        ps = std::move(r.next);
    }
    return traj;
}

int accepting_visits(const ProductTrajectory& traj, const Ldba& ldba) {
    int n = 0;
    for (std::size_t t = 1; t < traj.steps.size(); ++t) n += ldba.is_accepting(traj.steps[t].b) ? 1 : 0;
    return n;
}

ProductTrajectory trajectory_from_letters(const Ldba& ldba, const std::vector<ltl::Letter>& letters) {
    if (letters.empty()) throw ltl::DomainError("need at least one letter");
    ProductTrajectory traj;
    Frontier e(ldba.num_elements());
    for (std::size_t t = 0; t < letters.size(); ++t) {
        TrajectoryStep st;
        const automaton::Transition tr =
            t == 0 ? ldba.initial_transition(letters[0]) : ldba.step(traj.steps.back().b, letters[t]);
        if (t > 0) {
            e.set(tr.element);
            if (ldba.is_accepting(tr.state)) e.clear();
            traj.steps.back().action = Action{};
        }
        st.b = tr.state;
        st.edge = tr.element;
        st.letter = letters[t];
        st.e = e;
        traj.steps.push_back(std::move(st));
    }
    return traj;
}

std::string check_replay(const ProductTrajectory& traj, const Ldba& ldba) {
    if (traj.steps.empty()) return "empty trajectory";
    const auto& s0 = traj.steps[0];
    const automaton::Transition init = ldba.initial_transition(s0.letter);
    if (init.state != s0.b || init.element != s0.edge) return "initial transition mismatch at t=0";
    Frontier e(ldba.num_elements());
    for (std::size_t t = 1; t < traj.steps.size(); ++t) {
        const auto& prev = traj.steps[t - 1];
        const auto& cur = traj.steps[t];
        automaton::Transition tr;
        if (prev.action && prev.action->jump) {
            tr = {ldba.element_target(*prev.action->jump), *prev.action->jump};
            if (ldba.element_source(*prev.action->jump) != prev.b) return "jump not available at t=" + std::to_string(t - 1);
            if (cur.s != prev.s) return "jump changed the environment state at t=" + std::to_string(t);
        } else {
            tr = ldba.step(prev.b, cur.letter);
        }
        if (tr.state != cur.b) return "automaton state mismatch at t=" + std::to_string(t);
        if (tr.element != cur.edge) return "fired element mismatch at t=" + std::to_string(t);
        e.set(tr.element);
        if (ldba.is_accepting(tr.state)) e.clear();
        if (cur.e.size() != 0 && cur.e != e) return "frontier mismatch at t=" + std::to_string(t);
    }
    return {};
}

}  // namespace cycler::product
