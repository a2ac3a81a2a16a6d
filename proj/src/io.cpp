#include "cycler/io.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace cycler::io {

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& what) {
    if (!j.is_object()) throw SchemaError(what + " must be a JSON object");
    for (const auto& [key, _] : j.items()) {
        if (!allowed.contains(key)) throw SchemaError("unknown key '" + key + "' in " + what);
    }
}

void check_version(const json& j, const std::string& kind) {
    if (j.value("kind", "") != kind) throw SchemaError("expected kind '" + kind + "'");
    if (j.value("version", 0) != 1) throw SchemaError("unsupported " + kind + " version");
}

template <typename T>
T get(const json& j, const std::string& key, const std::string& what) {
    if (!j.contains(key)) throw SchemaError("missing key '" + key + "' in " + what);
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw SchemaError("key '" + key + "' in " + what + " has the wrong type");
    }
}

template <typename T>
void maybe(const json& j, const std::string& key, T& out, const std::string& what) {
    if (j.contains(key)) out = get<T>(j, key, what);
}

envs::Vec2 vec2(const json& j, const std::string& what) {
    const auto v = j.get<std::vector<double>>();
    if (v.size() != 2) throw SchemaError(what + " must have two coordinates");
    return {v[0], v[1]};
}

json letter_json(const ltl::ApSet& aps, ltl::Letter l) {
    const auto names = ltl::letter_names(aps, l);
    // proposition order rather than alphabetical order
    json out = json::array();
    for (const auto& n : aps.names()) {
        if (names.contains(n)) out.push_back(n);
    }
    return out;
}

}  // namespace

json read_json_file(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw std::ios_base::failure("cannot open '" + path.string() + "'");
    try {
        return json::parse(f);
    } catch (const json::parse_error& e) {
        throw SchemaError(path.string() + ": " + e.what());
    }
}

json trajectory_to_json(const product::ProductTrajectory& traj, const automaton::Ldba& ldba) {
    json steps = json::array();
    for (const auto& st : traj.steps) {
        json o;
        o["s"] = st.s;
        o["b"] = st.b;
        if (!st.action) {
            o["a"] = nullptr;
        } else if (st.action->jump) {
            o["a"] = {{"jump", *st.action->jump}};
        } else {
            o["a"] = st.action->env;
        }
        o["edge"] = st.edge;
        o["letter"] = letter_json(ldba.aps, st.letter);
        o["r_mdp"] = st.r_mdp;
        if (!st.rho.empty()) {
            json rho;
            for (std::size_t i = 0; i < st.rho.size(); ++i) rho[ldba.aps.name(i)] = st.rho[i];
            o["rho"] = rho;
        }
        steps.push_back(std::move(o));
    }
    return {{"kind", "trajectory"}, {"version", 1}, {"aps", ldba.aps.names()}, {"steps", steps}};
}

product::ProductTrajectory trajectory_from_json(const json& j, const automaton::Ldba& ldba) {
    check_keys(j, {"kind", "version", "aps", "steps"}, "trajectory");
    check_version(j, "trajectory");
    if (j.contains("aps") && get<std::vector<std::string>>(j, "aps", "trajectory") != ldba.aps.names()) {
        throw SchemaError("trajectory propositions differ from the automaton's");
    }
    const json& steps = j.at("steps");
    if (!steps.is_array() || steps.empty()) throw SchemaError("trajectory needs a non-empty steps array");

    product::ProductTrajectory traj;
    product::Frontier e(ldba.num_elements());
    for (std::size_t t = 0; t < steps.size(); ++t) {
        const json& o = steps[t];
        const std::string what = "trajectory step " + std::to_string(t);
        check_keys(o, {"s", "b", "a", "edge", "letter", "r_mdp", "rho"}, what);
        product::TrajectoryStep st;
        maybe(o, "s", st.s, what);
        const auto names = get<std::vector<std::string>>(o, "letter", what);
        for (const auto& n : names) {
            if (!ldba.aps.contains(n)) throw SchemaError("unknown proposition '" + n + "' in " + what);
        }
        st.letter = ltl::letter_from_names(ldba.aps, {names.begin(), names.end()});
        maybe(o, "r_mdp", st.r_mdp, what);
        if (o.contains("a") && !o.at("a").is_null()) {
            product::Action a;
            if (o.at("a").is_object()) {
                check_keys(o.at("a"), {"jump"}, what + " action");
                a.jump = get<automaton::ElementId>(o.at("a"), "jump", what + " action");
            } else {
                a.env = get<std::vector<double>>(o, "a", what);
            }
            st.action = a;
        }
        if (o.contains("rho")) {
            std::map<std::string, double> m;
            try {
                m = o.at("rho").get<std::map<std::string, double>>();
            } catch (const json::exception&) {
                throw SchemaError("rho in " + what + " must map propositions to numbers");
            }
            st.rho = ltl::robustness_from_map(ldba.aps, m);
        }

        automaton::Transition tr;
        if (t == 0) {
            tr = ldba.initial_transition(st.letter);
        } else {
            const auto& prev = traj.steps.back();
            if (prev.action && prev.action->jump) {
                const auto id = *prev.action->jump;
                if (id >= ldba.num_elements() || !ldba.is_eps(id) || ldba.element_source(id) != prev.b) {
                    throw SchemaError("jump in step " + std::to_string(t - 1) + " is not available");
                }
                tr = {ldba.element_target(id), id};
            } else {
                tr = ldba.step(prev.b, st.letter);
            }
        }
        if (o.contains("b") && get<automaton::StateId>(o, "b", what) != tr.state) {
            throw SchemaError(what + ": recorded automaton state disagrees with the replay");
        }
        if (o.contains("edge") && get<automaton::ElementId>(o, "edge", what) != tr.element) {
            throw SchemaError(what + ": recorded edge disagrees with the replay");
        }
        st.b = tr.state;
        st.edge = tr.element;
        if (t > 0) {
            e.set(tr.element);
            if (ldba.is_accepting(tr.state)) e.clear();
        }
        st.e = e;
        traj.steps.push_back(std::move(st));
    }
    return traj;
}

json reward_trace_to_json(const shaping::RewardTrace& rt, const automaton::Ldba& ldba) {
    json segs = json::array();
    for (const auto& s : rt.segments) {
        json o = {{"begin", s.begin}, {"end", s.end}, {"closed_by_accepting", s.closed_by_accepting},
                  {"candidates", s.used_cycles ? "macs" : "maips"}, {"sum", s.sum}};
        if (s.chosen) {
            o["chosen_index"] = *s.index;
            o["chosen_elements"] = s.chosen->elements;
            o["chosen"] = cycles::describe(ldba, *s.chosen);
        } else {
            o["chosen_index"] = nullptr;
        }
        segs.push_back(std::move(o));
    }
    std::vector<int> acc(rt.accepting.begin(), rt.accepting.end());
    return {{"kind", "reward_trace"},
            {"version", 1},
            {"gamma", rt.gamma},
            {"gamma_phi", rt.gamma_phi},
            {"lambda", rt.lambda},
            {"counting", rt.counting == shaping::Counting::Inclusive ? "inclusive" : "exclusive"},
            {"r_cycler", rt.r_cycler},
            {"r_ltl_unshaped", rt.r_ltl_unshaped},
            {"r_mdp", rt.r_mdp},
            {"accepting", acc},
            {"eventual_discounts", shaping::eventual_discounts(rt.accepting, rt.gamma_phi, rt.counting)},
            {"r_dual", shaping::dual_stream(rt, true, rt.counting)},
            {"value_shaped", shaping::eventual_discounted_value(rt, true, rt.counting)},
            {"value_unshaped", shaping::eventual_discounted_value(rt, false, rt.counting)},
            {"segments", segs}};
}

std::string reward_trace_to_csv(const shaping::RewardTrace& rt) {
    const auto big_gamma = shaping::eventual_discounts(rt.accepting, rt.gamma_phi, rt.counting);
    const auto dual = shaping::dual_stream(rt, true, rt.counting);
    std::ostringstream os;
    os.precision(17);
    os << "t,r_cycler,r_ltl_unshaped,r_mdp,accepting,Gamma,r_dual\n";
    for (std::size_t t = 0; t < rt.size(); ++t) {
        os << t << ',' << rt.r_cycler[t] << ',' << rt.r_ltl_unshaped[t] << ',' << rt.r_mdp[t] << ','
           << (rt.accepting[t] ? 1 : 0) << ',' << big_gamma[t] << ',' << dual[t] << '\n';
    }
    return os.str();
}

envs::FlatWorldConfig flatworld_from_json(const json& j) {
    const std::string what = "flatworld config";
    check_keys(j, {"kind", "version", "regions", "bonus_regions", "action_bound", "start", "world_min", "world_max"},
               what);
    check_version(j, "flatworld");
    envs::FlatWorldConfig cfg;
    for (const auto& r : get<json>(j, "regions", what)) {
        check_keys(r, {"name", "center", "radius"}, "region");
        cfg.regions.push_back({get<std::string>(r, "name", "region"), vec2(r.at("center"), "region center"),
                               get<double>(r, "radius", "region")});
    }
    if (j.contains("bonus_regions")) {
        for (const auto& r : j.at("bonus_regions")) {
            check_keys(r, {"center", "radius", "reward"}, "bonus region");
            envs::BonusRegion br{vec2(r.at("center"), "bonus center"), get<double>(r, "radius", "bonus region"), 1.0};
            maybe(r, "reward", br.reward, "bonus region");
            cfg.bonus_regions.push_back(br);
        }
    }
    maybe(j, "action_bound", cfg.action_bound, what);
    if (j.contains("start")) cfg.start = vec2(j.at("start"), "start");
    maybe(j, "world_min", cfg.world_min, what);
    maybe(j, "world_max", cfg.world_max, what);
    cfg.validate();
    return cfg;
}

json flatworld_to_json(const envs::FlatWorldConfig& cfg) {
    json regions = json::array();
    for (const auto& r : cfg.regions) regions.push_back({{"name", r.name}, {"center", r.center}, {"radius", r.radius}});
    json bonus = json::array();
    for (const auto& r : cfg.bonus_regions) {
        bonus.push_back({{"center", r.center}, {"radius", r.radius}, {"reward", r.reward}});
    }
    return {{"kind", "flatworld"},        {"version", 1},        {"regions", regions},
            {"bonus_regions", bonus},     {"action_bound", cfg.action_bound}, {"start", cfg.start},
            {"world_min", cfg.world_min}, {"world_max", cfg.world_max}};
}

envs::GridLabSpec gridlab_from_json(const json& j) {
    const std::string what = "gridlab";
    check_keys(j, {"kind", "version", "aps", "num_states", "num_actions", "next", "reward", "labels", "start"}, what);
    check_version(j, "gridlab");
    envs::GridLabSpec spec;
    spec.aps = get<std::vector<std::string>>(j, "aps", what);
    spec.num_states = get<int>(j, "num_states", what);
    spec.num_actions = get<int>(j, "num_actions", what);
    spec.next = get<std::vector<std::vector<int>>>(j, "next", what);
    spec.reward = get<std::vector<std::vector<double>>>(j, "reward", what);
    spec.labels = get<std::vector<std::vector<std::string>>>(j, "labels", what);
    maybe(j, "start", spec.start, what);
    return spec;
}

ltl::QSConfig qs_config_from_json(const json& j, const ltl::ApSet& aps) {
    const std::string what = "QS config";
    check_keys(j, {"kind", "version", "rho_max", "rho_min", "thresholds"}, what);
    if (j.contains("kind")) check_version(j, "qs_config");
    ltl::QSConfig cfg = ltl::QSConfig::uniform(aps.size(), get<double>(j, "rho_min", what), get<double>(j, "rho_max", what));
    if (j.contains("thresholds")) {
        const auto m = get<std::map<std::string, double>>(j, "thresholds", what);
        for (const auto& [name, c] : m) {
            const auto idx = aps.index_of(name);
            if (!idx) throw SchemaError("threshold for unknown proposition '" + name + "'");
            cfg.thresholds[*idx] = c;
        }
    }
    cfg.validate(aps.size());
    return cfg;
}

std::vector<ltl::RobustnessVector> monitor_trace_from_json(const json& j, const ltl::ApSet& aps) {
    if (!j.is_array() || j.empty()) throw SchemaError("a monitor trace is a non-empty array of objects");
    std::vector<ltl::RobustnessVector> out;
    for (const auto& o : j) {
        std::map<std::string, double> m;
        try {
            m = o.get<std::map<std::string, double>>();
        } catch (const json::exception&) {
            throw SchemaError("monitor trace entries map propositions to numbers");
        }
        out.push_back(ltl::robustness_from_map(aps, m));
    }
    return out;
}

json exact_report_to_json(const exact::ExactReport& rep, std::size_t max_listed) {
    auto head = [&](const std::vector<std::size_t>& v) {
        return std::vector<std::size_t>(v.begin(), v.begin() + static_cast<long>(std::min(v.size(), max_listed)));
    };
    json checks = json::array();
    for (const auto& c : rep.checks) {
        checks.push_back({{"lambda", c.lambda},
                          {"argmax_count", c.argmax.size()},
                          {"argmax", head(c.argmax)},
                          {"contained", c.contained},
                          {"attains_max_r", c.attains_max_r}});
    }
    json values = json::array();
    for (std::size_t i = 0; i < std::min(rep.values.size(), max_listed); ++i) {
        values.push_back({{"policy", i}, {"V", rep.values[i].v}, {"R", rep.values[i].r}});
    }
    return {{"kind", "exact_report"},
            {"version", 1},
            {"num_policies", rep.values.size()},
            {"values", values},
            {"V_max", rep.v_max},
            {"gap", rep.gap},
            {"gap_exists", rep.gap_exists},
            {"assumption_3_1", rep.gap_exists ? "holds" : "violated"},
            {"step_r_max", rep.step_r_max},
            {"step_r_min", rep.step_r_min},
            {"lambda_star", rep.lambda_star},
            {"best_constrained_R", rep.best_constrained_r},
            {"constrained_argmax_count", rep.constrained_argmax.size()},
            {"constrained_argmax", head(rep.constrained_argmax)},
            {"checks", checks},
            {"max_last_visit", rep.max_last_visit},
            {"holds", rep.holds()}};
}

namespace {

learn::RewardMode reward_mode(const std::string& s) {
    if (s == "cycler") return learn::RewardMode::Cycler;
    if (s == "cycler_qs") return learn::RewardMode::CyclerQs;
    if (s == "unshaped") return learn::RewardMode::Unshaped;
    throw SchemaError("reward must be one of cycler, cycler_qs, unshaped");
}

std::string reward_name(learn::RewardMode m) {
    switch (m) {
        case learn::RewardMode::Cycler: return "cycler";
        case learn::RewardMode::CyclerQs: return "cycler_qs";
        case learn::RewardMode::Unshaped: return "unshaped";
    }
    return "cycler";
}

const std::set<std::string> kTrainKeys = {
    "gamma", "gamma_phi", "lambda", "batch_size", "horizon", "actor_lr", "critic_lr", "episodes", "seed", "reward",
    "entropy_coef", "epochs", "minibatch_size", "clip", "max_grad_norm", "hidden", "init_log_std"};

}  // namespace

learn::TrainConfig train_config_from_json(const json& j) {
    const std::string what = "train config";
    check_keys(j, kTrainKeys, what);
    learn::TrainConfig c;
    maybe(j, "gamma", c.gamma, what);
    maybe(j, "gamma_phi", c.gamma_phi, what);
    maybe(j, "lambda", c.lambda, what);
    maybe(j, "batch_size", c.batch_size, what);
    maybe(j, "horizon", c.horizon, what);
    maybe(j, "actor_lr", c.actor_lr, what);
    maybe(j, "critic_lr", c.critic_lr, what);
    maybe(j, "episodes", c.episodes, what);
    maybe(j, "seed", c.seed, what);
    if (j.contains("reward")) c.reward = reward_mode(get<std::string>(j, "reward", what));
    maybe(j, "entropy_coef", c.entropy_coef, what);
    maybe(j, "epochs", c.epochs, what);
    maybe(j, "minibatch_size", c.minibatch_size, what);
    maybe(j, "clip", c.clip, what);
    maybe(j, "max_grad_norm", c.max_grad_norm, what);
    maybe(j, "hidden", c.hidden, what);
    maybe(j, "init_log_std", c.init_log_std, what);
    c.validate();
    return c;
}

json train_config_to_json(const learn::TrainConfig& c) {
    return {{"gamma", c.gamma},
            {"gamma_phi", c.gamma_phi},
            {"lambda", c.lambda},
            {"batch_size", c.batch_size},
            {"horizon", c.horizon},
            {"actor_lr", c.actor_lr},
            {"critic_lr", c.critic_lr},
            {"episodes", c.episodes},
            {"seed", c.seed},
            {"reward", reward_name(c.reward)},
            {"entropy_coef", c.entropy_coef},
            {"epochs", c.epochs},
            {"minibatch_size", c.minibatch_size},
            {"clip", c.clip},
            {"max_grad_norm", c.max_grad_norm},
            {"hidden", c.hidden},
            {"init_log_std", c.init_log_std}};
}

TrainJob train_job_from_json(const json& j, const std::filesystem::path& base) {
    const std::string what = "train job";
    check_keys(j, {"kind", "version", "train", "ldba", "flatworld", "bonus_seed", "checkpoint", "log", "eval_horizon",
                   "eval_rollouts"},
               what);
    check_version(j, "train_job");
    TrainJob job;
    job.train = train_config_from_json(j.contains("train") ? j.at("train") : json::object());
    job.ldba = base / get<std::string>(j, "ldba", what);
    maybe(j, "bonus_seed", job.bonus_seed, what);
    if (j.contains("flatworld")) {
        job.flatworld = flatworld_from_json(j.at("flatworld"));
    } else {
        job.flatworld = envs::FlatWorldConfig::defaults(job.bonus_seed);
    }
    job.checkpoint = j.value("checkpoint", std::string("policy.ckpt"));
    job.log_csv = j.value("log", std::string("train_log.csv"));
    maybe(j, "eval_horizon", job.eval_horizon, what);
    maybe(j, "eval_rollouts", job.eval_rollouts, what);
    if (job.eval_horizon < 1 || job.eval_rollouts < 1) throw SchemaError("evaluation settings must be positive");
    return job;
}

}  // namespace cycler::io
