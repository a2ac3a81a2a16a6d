// cycler: command-line front end.
//
// Exit codes: 0 success, 1 domain or validation failure, 2 IO or usage error.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "cycler/cycles.hpp"
#include "cycler/envs.hpp"
#include "cycler/exact.hpp"
#include "cycler/io.hpp"
#include "cycler/ldba.hpp"
#include "cycler/learn.hpp"
#include "cycler/ltl.hpp"
#include "cycler/product.hpp"
#include "cycler/shaping.hpp"

namespace {

using namespace cycler;
using io::json;

constexpr int kOk = 0;
constexpr int kDomain = 1;
constexpr int kIo = 2;

struct Globals {
    std::optional<std::uint64_t> seed;
    bool json = false;
    bool allow_partial = false;
    std::string out;
};

// A domain-level failure that should still print a result.
struct Failed {
    int code = kDomain;
};

class Output {
public:
    explicit Output(const std::string& path) : path_(path) {}
    std::ostream& os() { return path_.empty() ? std::cout : buf_; }
    void flush() {
        if (path_.empty()) return;
        std::ofstream f(path_);
        if (!f) throw std::ios_base::failure("cannot write '" + path_ + "'");
        f << buf_.str();
    }

private:
    std::string path_;
    std::ostringstream buf_;
};

automaton::Ldba load(const std::string& path, const Globals& g) {
    return automaton::load_ldba(path, {.allow_partial = g.allow_partial});
}

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(10) << v;
    return os.str();
}

json path_json(const automaton::Ldba& ldba, const cycles::CyclePath& p) {
    return {{"elements", p.elements}, {"start", p.start}, {"end", p.end}, {"text", cycles::describe(ldba, p)}};
}

// ---- validate ------------------------------------------------------------

int cmd_validate(const std::string& path, const Globals& g, Output& out) {
    try {
        const auto ldba = load(path, g);
        if (g.json) {
            out.os() << json{{"valid", true},
                             {"states", ldba.declared_states()},
                             {"edges", ldba.edges.size()},
                             {"eps_edges", ldba.eps_edges.size()},
                             {"accepting", ldba.accepting_states()},
                             {"sink", ldba.sink ? json(*ldba.sink) : json(nullptr)}}
                                .dump(2)
                     << '\n';
        } else {
            out.os() << path << ": valid, " << ldba.declared_states() << " states, " << ldba.edges.size() << " edges, "
                     << ldba.eps_edges.size() << " eps edges";
            if (ldba.sink) out.os() << ", sink " << *ldba.sink << " added";
            out.os() << '\n';
        }
        return kOk;
    } catch (const automaton::ParseError& e) {
        if (g.json) out.os() << json{{"valid", false}, {"error", e.what()}, {"line", e.line()}}.dump(2) << '\n';
        throw;
    } catch (const automaton::ValidationError& e) {
        if (g.json) out.os() << json{{"valid", false}, {"error", e.what()}}.dump(2) << '\n';
        throw;
    }
}

// ---- cycles --------------------------------------------------------------

int cmd_cycles(const std::string& path, const Globals& g, Output& out) {
    const auto ldba = load(path, g);
    const auto maips = cycles::find_maips(ldba);
    const auto macs = cycles::find_macs(ldba);
    if (g.json) {
        json jm = json::array();
        for (const auto& p : maips) jm.push_back(path_json(ldba, p));
        json jc = json::array();
        for (const auto& p : macs) jc.push_back(path_json(ldba, p));
        out.os() << json{{"states", ldba.declared_states()},
                         {"edges", ldba.edges.size()},
                         {"eps_edges", ldba.eps_edges.size()},
                         {"maip_count", maips.size()},
                         {"mac_count", macs.size()},
                         {"maips", jm},
                         {"macs", jc}}
                        .dump(2)
                 << '\n';
        return kOk;
    }
    out.os() << "states " << ldba.declared_states() << ", edges " << ldba.edges.size() << ", eps " << ldba.eps_edges.size()
             << '\n';
    out.os() << maips.size() << " MAIPs\n";
    for (std::size_t i = 0; i < maips.size(); ++i) out.os() << "  [" << i << "] " << cycles::describe(ldba, maips[i]) << '\n';
    out.os() << macs.size() << " MACs\n";
    for (std::size_t i = 0; i < macs.size(); ++i) out.os() << "  [" << i << "] " << cycles::describe(ldba, macs[i]) << '\n';
    return kOk;
}

// ---- shape ---------------------------------------------------------------

struct ShapeArgs {
    std::string ldba;
    std::string trace;
    bool qs = false;
    bool clamp = false;
    bool csv = false;
    bool exclusive = false;
    std::string qs_config;
    double lambda = 400.0;
    double gamma = 0.98;
    double gamma_phi = 0.99;
};

int cmd_shape(const ShapeArgs& a, const Globals& g, Output& out) {
    const auto ldba = load(a.ldba, g);
    const auto traj = io::trajectory_from_json(io::read_json_file(a.trace), ldba);
    shaping::ShapingConfig cfg;
    cfg.clamp_negative_progress = a.clamp;
    if (a.qs) {
        if (a.qs_config.empty()) throw CLI::ValidationError("--qs", "needs --qs-config");
        cfg.mode = shaping::Mode::Qs;
        cfg.qs = io::qs_config_from_json(io::read_json_file(a.qs_config), ldba.aps);
        for (const auto& st : traj.steps) {
            if (st.rho.size() != ldba.aps.size()) throw ltl::DomainError("--qs needs rho on every trajectory step");
        }
    }
    auto rt = shaping::shape_trajectory(traj, ldba, cfg);
    rt.lambda = a.lambda;
    rt.gamma = a.gamma;
    rt.gamma_phi = a.gamma_phi;
    if (a.exclusive) rt.counting = shaping::Counting::Exclusive;
    if (a.csv) {
        out.os() << io::reward_trace_to_csv(rt);
    } else if (g.json) {
        out.os() << io::reward_trace_to_json(rt, ldba).dump(2) << '\n';
    } else {
        out.os() << "t  b->b'  r_cycler  r_ltl  r_mdp\n";
        for (std::size_t t = 0; t < rt.size(); ++t) {
            out.os() << t << "  " << traj.steps[t].b << "->" << traj.steps[t + 1].b << "  " << fmt(rt.r_cycler[t]) << "  "
                     << rt.r_ltl_unshaped[t] << "  " << fmt(rt.r_mdp[t]) << '\n';
        }
        for (const auto& s : rt.segments) {
            out.os() << "segment [" << s.begin << ", " << s.end << ") " << (s.used_cycles ? "MAC" : "MAIP") << ' ';
            if (s.chosen) {
                out.os() << *s.index << ": " << cycles::describe(ldba, *s.chosen);
            } else {
                out.os() << "none";
            }
            out.os() << ", sum " << fmt(s.sum) << '\n';
        }
        out.os() << "value shaped " << fmt(shaping::eventual_discounted_value(rt, true, rt.counting)) << ", unshaped "
                 << fmt(shaping::eventual_discounted_value(rt, false, rt.counting)) << '\n';
    }
    return kOk;
}

// ---- monitor -------------------------------------------------------------

struct MonitorArgs {
    std::string formula;
    std::string trace;
    std::string qs_config;
    std::vector<std::string> aps;
};

int cmd_monitor(const MonitorArgs& a, const Globals& g, Output& out) {
    const json jt = io::read_json_file(a.trace);
    std::vector<std::string> names = a.aps;
    if (names.empty()) {
        if (!jt.is_array() || jt.empty() || !jt.front().is_object()) throw io::SchemaError("trace must be a non-empty array");
        for (const auto& [k, v] : jt.front().items()) names.push_back(k);
    }
    const ltl::ApSet aps(names);
    const auto f = ltl::parse_ltl(a.formula, aps);
    const auto trace = io::monitor_trace_from_json(jt, aps);
    ltl::QSConfig cfg = ltl::QSConfig::uniform(aps.size(), -1.0, 1.0);
    if (!a.qs_config.empty()) cfg = io::qs_config_from_json(io::read_json_file(a.qs_config), aps);
    cfg.validate(aps.size());
    const double rho = ltl::qs_eval(f, trace, cfg);
    if (g.json) {
        out.os() << json{{"formula", ltl::to_string(f)}, {"robustness", rho}, {"satisfied", rho > 0.0}}.dump(2) << '\n';
    } else {
        out.os() << ltl::to_string(f) << ": " << fmt(rho) << (rho > 0.0 ? " (satisfied)" : " (violated)") << '\n';
    }
    return kOk;
}

// ---- train / eval --------------------------------------------------------

struct TrainArgs {
    std::string config;
    std::optional<int> episodes;
    std::string reward;
    bool quiet = false;
};

learn::EvalStats eval_job(const learn::PolicyNet& net, const envs::FlatWorld& env, const automaton::Ldba& ldba,
                          int horizon, int rollouts, std::uint64_t seed, bool greedy) {
    const learn::ObsEncoder enc(env, ldba);
    return learn::evaluate(learn::as_policy(net, enc, greedy), env, ldba, horizon, rollouts, seed);
}

json stats_json(const learn::EvalStats& s) {
    return {{"rollouts", s.rollouts},
            {"accepting_visits_mean", s.mean_visits},
            {"accepting_visits_std", s.std_visits},
            {"r_mdp_mean", s.mean_mdp},
            {"r_mdp_std", s.std_mdp}};
}

void print_stats(std::ostream& os, const learn::EvalStats& s, int horizon) {
    os << s.rollouts << " rollouts x " << horizon << " steps: accepting visits " << fmt(s.mean_visits) << " +- "
       << fmt(s.std_visits) << ", r_mdp " << fmt(s.mean_mdp) << " +- " << fmt(s.std_mdp) << '\n';
}

int cmd_train(const TrainArgs& a, const Globals& g, Output& out) {
    const std::filesystem::path cfg_path(a.config);
    auto job = io::train_job_from_json(io::read_json_file(cfg_path), cfg_path.parent_path());
    if (g.seed) job.train.seed = *g.seed;
    if (a.episodes) job.train.episodes = *a.episodes;
    if (!a.reward.empty()) job.train.reward = io::train_config_from_json(json{{"reward", a.reward}}).reward;
    if (!g.out.empty()) {
        const std::filesystem::path dir(g.out);
        std::filesystem::create_directories(dir);
        job.checkpoint = dir / job.checkpoint.filename();
        job.log_csv = dir / job.log_csv.filename();
    }
    job.train.validate();

    const auto ldba = load(job.ldba.string(), g);
    const envs::FlatWorld env(job.flatworld);
    const auto maips = cycles::find_maips(ldba);
    const auto macs = cycles::find_macs(ldba);

    std::ofstream log(job.log_csv);
    if (!log) throw std::ios_base::failure("cannot write '" + job.log_csv.string() + "'");
    log << learn::log_csv_header() << '\n';
    const auto res = learn::train(env, ldba, maips, macs, job.train, [&](const learn::TrainLogRow& row) {
        log << learn::log_csv_row(row) << '\n';
        log.flush();
        if (!a.quiet) {
            std::cerr << "iter " << row.iteration << " episodes " << row.episodes << " visits " << fmt(row.accepting_visits)
                      << " shaped " << fmt(row.shaped_return) << " mdp " << fmt(row.mdp_return) << '\n';
        }
    });
    learn::save_checkpoint(job.checkpoint.string(), res.policy);

    const auto stats = eval_job(res.policy, env, ldba, job.eval_horizon, job.eval_rollouts, job.train.seed + 1000, false);
    if (g.json) {
        out.os() << json{{"checkpoint", job.checkpoint.string()},
                         {"log", job.log_csv.string()},
                         {"train", io::train_config_to_json(job.train)},
                         {"evaluation", stats_json(stats)}}
                        .dump(2)
                 << '\n';
    } else {
        out.os() << "checkpoint " << job.checkpoint.string() << ", log " << job.log_csv.string() << '\n';
        print_stats(out.os(), stats, job.eval_horizon);
    }
    return kOk;
}

struct EvalArgs {
    std::string checkpoint;
    std::string config;
    std::optional<int> horizon;
    std::optional<int> rollouts;
    bool greedy = false;
};

int cmd_eval(const EvalArgs& a, const Globals& g, Output& out) {
    const std::filesystem::path cfg_path(a.config);
    const auto job = io::train_job_from_json(io::read_json_file(cfg_path), cfg_path.parent_path());
    const auto ldba = load(job.ldba.string(), g);
    const envs::FlatWorld env(job.flatworld);
    const auto net = learn::load_checkpoint(a.checkpoint);
    if (net.shape().obs_dim != learn::ObsEncoder(env, ldba).dim()) {
        throw ltl::DomainError("checkpoint does not match the configured environment and automaton");
    }
    const int horizon = a.horizon.value_or(job.eval_horizon);
    const int rollouts = a.rollouts.value_or(job.eval_rollouts);
    const auto stats = eval_job(net, env, ldba, horizon, rollouts, g.seed.value_or(0), a.greedy);
    if (g.json) {
        json j = stats_json(stats);
        j["horizon"] = horizon;
        j["greedy"] = a.greedy;
        out.os() << j.dump(2) << '\n';
    } else {
        print_stats(out.os(), stats, horizon);
    }
    return kOk;
}

// ---- oracle --------------------------------------------------------------

struct OracleArgs {
    std::string grid;
    std::string ldba;
    double gamma = 0.9;
    double gamma_phi = 0.9;
};

int cmd_oracle(const OracleArgs& a, const Globals& g, Output& out) {
    const auto grid = envs::gridlab_build(io::gridlab_from_json(io::read_json_file(a.grid)));
    const auto ldba = load(a.ldba, g);
    const auto rep = exact::verify_lambda_bound(grid, ldba, a.gamma, a.gamma_phi);
    if (g.json) {
        out.os() << io::exact_report_to_json(rep).dump(2) << '\n';
    } else {
        out.os() << rep.values.size() << " deterministic policies, V_max " << fmt(rep.v_max) << '\n';
        if (!rep.gap_exists) {
            out.os() << "no gap: every policy has the same V, Assumption 3.1 does not hold, checks skipped\n";
        } else {
            out.os() << "gap " << fmt(rep.gap) << ", lambda* " << fmt(rep.lambda_star) << ", best constrained R "
                     << fmt(rep.best_constrained_r) << '\n';
            for (const auto& c : rep.checks) {
                out.os() << "lambda " << fmt(c.lambda) << ": " << c.argmax.size() << " maximizers, "
                         << (c.contained ? "contained" : "NOT contained") << ", "
                         << (c.attains_max_r ? "attains max R" : "misses max R") << '\n';
            }
        }
        out.os() << "max last accepting visit " << rep.max_last_visit << '\n';
    }
    if (rep.gap_exists && !rep.holds()) throw Failed{kDomain};
    return kOk;
}

// ---- export --------------------------------------------------------------

struct ExportArgs {
    std::string traj;
    std::string ldba;
    std::string flatworld;
};

int cmd_export(const ExportArgs& a, const Globals& g, Output& out) {
    const auto ldba = load(a.ldba, g);
    const auto traj = io::trajectory_from_json(io::read_json_file(a.traj), ldba);
    const envs::FlatWorldConfig cfg = a.flatworld.empty() ? envs::FlatWorldConfig::defaults(g.seed.value_or(0))
                                                          : io::flatworld_from_json(io::read_json_file(a.flatworld));
    std::ostream& os = out.os();
    os << "kind,name,t,x,y,radius,b,accepting\n";
    for (const auto& r : cfg.regions) os << "region," << r.name << ",," << r.center[0] << ',' << r.center[1] << ',' << r.radius << ",,\n";
    for (const auto& r : cfg.bonus_regions) os << "bonus,," << ",," << r.center[0] << ',' << r.center[1] << ',' << r.radius << ",,\n";
    for (std::size_t t = 0; t < traj.steps.size(); ++t) {
        const auto& st = traj.steps[t];
        if (st.s.size() < 2) throw ltl::DomainError("export needs two-dimensional states");
        os << "point,," << t << ',' << st.s[0] << ',' << st.s[1] << ",," << st.b << ',' << (ldba.is_accepting(st.b) ? 1 : 0)
           << '\n';
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CyclER reward shaping toolkit"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--seed", g.seed, "Random seed");
    app.add_flag("--json", g.json, "Machine-readable output");
    app.add_flag("--allow-partial", g.allow_partial, "Route missing letters to a synthesized sink");
    app.add_option("--out", g.out, "Write output to this path (train: output directory)");
    app.fallthrough();

    std::string validate_path;
    auto* validate = app.add_subcommand("validate", "Check an ldba v1 file");
    validate->add_option("ldba", validate_path)->required();

    std::string cycles_path;
    auto* cycles_cmd = app.add_subcommand("cycles", "List minimal accepting initial paths and cycles");
    cycles_cmd->add_option("ldba", cycles_path)->required();

    ShapeArgs sa;
    auto* shape = app.add_subcommand("shape", "Assign CyclER rewards to a recorded trajectory");
    shape->add_option("--ldba", sa.ldba)->required();
    shape->add_option("--trace", sa.trace)->required();
    shape->add_flag("--qs", sa.qs, "Quantitative variant");
    shape->add_option("--qs-config", sa.qs_config, "rho bounds and thresholds (JSON)");
    shape->add_flag("--clamp", sa.clamp, "Clamp negative robustness progress to zero");
    shape->add_flag("--csv", sa.csv, "CSV output");
    shape->add_flag("--exclusive", sa.exclusive, "Count accepting visits strictly before each step in Gamma_t");
    shape->add_option("--lambda", sa.lambda);
    shape->add_option("--gamma", sa.gamma)->check(CLI::Range(0.0, 1.0));
    shape->add_option("--gamma-phi", sa.gamma_phi)->check(CLI::Range(0.0, 1.0));

    MonitorArgs ma;
    auto* monitor = app.add_subcommand("monitor", "Robustness of an LTL formula over a trace");
    monitor->add_option("--formula", ma.formula)->required();
    monitor->add_option("--trace", ma.trace)->required();
    monitor->add_option("--qs-config", ma.qs_config);
    monitor->add_option("--aps", ma.aps, "Proposition order (default: keys of the first trace entry)")->delimiter(',');

    TrainArgs ta;
    auto* train = app.add_subcommand("train", "Train a FlatWorld policy");
    train->add_option("--config", ta.config)->required();
    train->add_option("--episodes", ta.episodes);
    train->add_option("--reward", ta.reward)->check(CLI::IsMember({"cycler", "cycler_qs", "unshaped"}));
    train->add_flag("--quiet", ta.quiet);

    EvalArgs ea;
    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
    eval->add_option("--checkpoint", ea.checkpoint)->required();
    eval->add_option("--config", ea.config)->required();
    eval->add_option("--horizon", ea.horizon);
    eval->add_option("--rollouts", ea.rollouts);
    eval->add_flag("--greedy", ea.greedy);

    OracleArgs oa;
    auto* oracle = app.add_subcommand("oracle", "Exact Theorem 3.2 check on a GridLab product");
    oracle->add_option("--grid", oa.grid)->required();
    oracle->add_option("--ldba", oa.ldba)->required();
    oracle->add_option("--gamma", oa.gamma)->check(CLI::Range(0.0, 1.0));
    oracle->add_option("--gamma-phi", oa.gamma_phi)->check(CLI::Range(0.0, 1.0));

    ExportArgs xa;
    auto* exporter = app.add_subcommand("export", "Trajectory points and region geometry as CSV");
    exporter->add_option("--traj", xa.traj)->required();
    exporter->add_option("--ldba", xa.ldba)->required();
    exporter->add_option("--flatworld", xa.flatworld);
    auto* env_cmd = app.add_subcommand("env", "Environment utilities");
    env_cmd->require_subcommand(1);
    auto* render = env_cmd->add_subcommand("render", "Same as export");
    render->add_option("--traj", xa.traj)->required();
    render->add_option("--ldba", xa.ldba)->required();
    render->add_option("--flatworld", xa.flatworld);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kIo;
    }

    Output out(*train ? std::string() : g.out);
    int rc = kOk;
    try {
        if (*validate) rc = cmd_validate(validate_path, g, out);
        else if (*cycles_cmd) rc = cmd_cycles(cycles_path, g, out);
        else if (*shape) rc = cmd_shape(sa, g, out);
        else if (*monitor) rc = cmd_monitor(ma, g, out);
        else if (*train) rc = cmd_train(ta, g, out);
        else if (*eval) rc = cmd_eval(ea, g, out);
        else if (*oracle) rc = cmd_oracle(oa, g, out);
        else rc = cmd_export(xa, g, out);
    } catch (const Failed& f) {
        rc = f.code;
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kIo;
    } catch (const std::ios_base::failure& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kIo;
    } catch (const std::exception& e) {
        // parse, schema, validation and domain errors
        out.flush();
        std::cerr << "error: " << e.what() << '\n';
        return kDomain;
    }
    try {
        out.flush();
    } catch (const std::ios_base::failure& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kIo;
    }
    return rc;
}
