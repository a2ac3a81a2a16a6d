#include <doctest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

using nlohmann::json;

namespace {

const std::string kFixtures = CYCLER_FIXTURES;

struct Run {
    int rc = -1;
    std::string out;
};

// Runs the CLI with stderr discarded.
Run cli(const std::string& args) {
    const std::string cmd = std::string(CYCLER_CLI) + " " + args + " 2>/dev/null";
    Run r;
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    std::array<char, 4096> buf{};
    std::size_t n = 0;
    while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
    const int status = pclose(p);
    r.rc = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string fx(const std::string& name) { return kFixtures + "/" + name; }

json parse(const Run& r) {
    json j;
    CHECK_NOTHROW(j = json::parse(r.out));
    return j;
}

std::filesystem::path scratch_dir() {
    const auto dir = std::filesystem::temp_directory_path() / "cycler_cli_tests";
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("validate") {
    auto r = cli("validate " + fx("flatworld.ldba"));
    CHECK(r.rc == 0);
    CHECK(r.out.find("valid, 5 states, 16 edges") != std::string::npos);
    r = cli("--json validate " + fx("flatworld.ldba"));
    CHECK(r.rc == 0);
    CHECK(parse(r)["valid"] == true);
    r = cli("--json validate " + fx("overlapping.ldba"));
    CHECK(r.rc == 1);
    const auto j = parse(r);
    CHECK(j["valid"] == false);
    CHECK(j["error"].get<std::string>().find("nondeterminism at state 0") != std::string::npos);
    CHECK(cli("validate " + fx("fg_jump.ldba")).rc == 1);
    r = cli("--allow-partial --json validate " + fx("fg_jump.ldba"));
    CHECK(r.rc == 0);
    CHECK(parse(r)["sink"] == 2);
    CHECK(cli("validate " + fx("does_not_exist.ldba")).rc == 2);
}

TEST_CASE("usage errors") {
    CHECK(cli("").rc == 2);
    CHECK(cli("frobnicate").rc == 2);
    CHECK(cli("validate").rc == 2);
    CHECK(cli("--seed notanumber validate " + fx("flatworld.ldba")).rc == 2);
    CHECK(cli("shape --ldba " + fx("flatworld.ldba") + " --trace " + fx("fig11_trajectory.json") + " --qs").rc == 2);
    CHECK(cli("--help").rc == 0);
}

TEST_CASE("cycles") {
    const auto r = cli("--json cycles " + fx("flatworld.ldba"));
    CHECK(r.rc == 0);
    const auto j = parse(r);
    CHECK(j["maip_count"] == 3);
    CHECK(j["mac_count"] == 6);
    CHECK(j["maips"][2]["elements"] == json::array({5, 9, 12}));
}

TEST_CASE("shape") {
    auto r = cli("--json shape --ldba " + fx("flatworld.ldba") + " --trace " + fx("fig11_trajectory.json"));
    CHECK(r.rc == 0);
    auto j = parse(r);
    CHECK(j["r_cycler"][0].get<double>() == 1.0 / 3.0);
    CHECK(j["r_cycler"][1].get<double>() == 0.0);
    CHECK(j["r_cycler"][2].get<double>() == 1.0 / 3.0);
    r = cli("--json shape --qs --qs-config " + fx("fig1_qs.json") + " --ldba " + fx("flatworld.ldba") + " --trace " +
            fx("fig11_trajectory.json"));
    CHECK(r.rc == 0);
    j = parse(r);
    CHECK(j["segments"][0]["chosen_elements"] == json::array({5, 9, 12}));
    r = cli("--json shape --exclusive --ldba " + fx("flatworld.ldba") + " --trace " + fx("fig11_trajectory.json"));
    CHECK(r.rc == 0);
    CHECK(parse(r)["counting"] == "exclusive");
    r = cli("shape --csv --ldba " + fx("flatworld.ldba") + " --trace " + fx("fig11_trajectory.json"));
    CHECK(r.rc == 0);
    CHECK(r.out.rfind("t,r_cycler", 0) == 0);
    // a trajectory that disagrees with the automaton is a domain error
    CHECK(cli("shape --ldba " + fx("visit_p.ldba") + " --trace " + fx("fig11_trajectory.json")).rc == 1);
}

TEST_CASE("monitor") {
    auto r = cli("--json monitor --formula 'F(r) & G(!b)' --aps r,g,b,y --qs-config " + fx("fig1_qs.json") +
                 " --trace " + fx("fig11_robustness.json"));
    CHECK(r.rc == 0);
    auto j = parse(r);
    CHECK(j["robustness"].get<double>() == doctest::Approx(0.15));
    CHECK(j["satisfied"] == true);
    r = cli("monitor --formula 'G(' --trace " + fx("fig11_robustness.json"));
    CHECK(r.rc == 1);
}

TEST_CASE("oracle") {
    const auto r = cli("--json oracle --grid " + fx("toy_gridlab.json") + " --ldba " + fx("visit_p.ldba"));
    CHECK((r.rc == 0 || r.rc == 1));
    const auto j = parse(r);
    CHECK(j.contains("lambda_star"));
    CHECK(j.contains("gap_exists"));
}

TEST_CASE("export and env render") {
    const auto a = cli("export --traj " + fx("fig11_trajectory.json") + " --ldba " + fx("flatworld.ldba") +
                       " --flatworld " + fx("fig11_flatworld.json"));
    CHECK(a.rc == 0);
    CHECK(a.out.rfind("kind,name,t,x,y,radius,b,accepting", 0) == 0);
    const auto b = cli("env render --traj " + fx("fig11_trajectory.json") + " --ldba " + fx("flatworld.ldba") +
                       " --flatworld " + fx("fig11_flatworld.json"));
    CHECK(b.rc == 0);
    CHECK(b.out == a.out);
}

TEST_CASE("train and eval through a config") {
    const auto dir = scratch_dir();
    const auto cfg = dir / "job.json";
    {
        json j = json::parse(std::ifstream(fx("train_flatworld.json")));
        j["ldba"] = fx("flatworld.ldba");
        j["train"]["episodes"] = 32;
        j["train"]["horizon"] = 20;
        j["eval_horizon"] = 30;
        j["eval_rollouts"] = 2;
        std::ofstream(cfg) << j.dump(2);
    }
    auto r = cli("--json --out " + dir.string() + " train --quiet --config " + cfg.string());
    CHECK(r.rc == 0);
    const auto j = parse(r);
    CHECK(j["evaluation"]["rollouts"] == 2);
    CHECK(std::filesystem::exists(dir / "policy.ckpt"));
    CHECK(std::filesystem::exists(dir / "train_log.csv"));
    r = cli("--json eval --checkpoint " + (dir / "policy.ckpt").string() + " --config " + cfg.string() +
            " --rollouts 3 --horizon 10");
    CHECK(r.rc == 0);
    CHECK(parse(r)["rollouts"] == 3);
    CHECK(cli("eval --checkpoint " + (dir / "none.ckpt").string() + " --config " + cfg.string()).rc == 2);
}

}  // TEST_SUITE
