#include <doctest.h>

#include <cmath>
#include <random>

#include "cycler/envs.hpp"
#include "oracles.hpp"

using namespace cycler;
using envs::FlatWorldConfig;

namespace {

FlatWorldConfig plain() { return FlatWorldConfig::defaults(0, 0); }

envs::GridLabSpec ring(int n) {
    envs::GridLabSpec s;
    s.aps = {"p"};
    s.num_states = n;
    s.num_actions = 2;
    for (int i = 0; i < n; ++i) {
        s.next.push_back({(i + 1) % n, i});
        s.reward.push_back({0.0, i == 0 ? 1.0 : 0.0});
        s.labels.push_back(i == n - 1 ? std::vector<std::string>{"p"} : std::vector<std::string>{});
    }
    return s;
}

}  // namespace

TEST_SUITE("envs") {

TEST_CASE("fw_step dynamics") {
    const auto cfg = plain();
    auto o = envs::fw_step({-1.0, -1.0}, {1.0, 1.0}, cfg);
    CHECK(o.next[0] == doctest::Approx(-0.9).epsilon(1e-15));
    CHECK(o.next[1] == doctest::Approx(-0.9).epsilon(1e-15));
    CHECK(o.reward == 0.0);
    o = envs::fw_step({0.3, 0.2}, {0.0, 0.0}, cfg);
    CHECK(o.next == envs::State{0.3, 0.2});
    // walls clip
    o = envs::fw_step({1.45, -1.45}, {1.0, -1.0}, cfg);
    CHECK(o.next == envs::State{1.5, -1.5});
    CHECK_THROWS_AS(envs::fw_step({0.0, 0.0}, {1.5, 0.0}, cfg), ltl::DomainError);
}

TEST_CASE("bonus regions pay per step") {
    auto cfg = plain();
    cfg.bonus_regions = {{{-0.9, -0.9}, 0.05, 1.0}};
    CHECK(envs::fw_step({-1.0, -1.0}, {1.0, 1.0}, cfg).reward == 1.0);
    CHECK(envs::fw_step({-0.9, -0.9}, {0.0, 0.0}, cfg).reward == 1.0);
    cfg.bonus_regions.push_back({{-0.9, -0.85}, 0.1, 1.0});
    CHECK(envs::fw_step({-0.9, -0.9}, {0.0, 0.0}, cfg).reward == 2.0);
    CHECK(envs::fw_step({-0.9, -0.9}, {-1.0, 0.0}, cfg).reward == 0.0);
}

TEST_CASE("defaults draw eight bonus regions from the seed") {
    const auto a = FlatWorldConfig::defaults(3);
    const auto b = FlatWorldConfig::defaults(3);
    const auto c = FlatWorldConfig::defaults(4);
    REQUIRE(a.bonus_regions.size() == 8);
    CHECK(a.bonus_regions[0].center == b.bonus_regions[0].center);
    CHECK(a.bonus_regions[0].center != c.bonus_regions[0].center);
    CHECK(a.bonus_regions[0].radius == 0.2);
    CHECK_NOTHROW(a.validate());
}

TEST_CASE("labels and robustness") {
    const auto cfg = plain();
    CHECK(envs::fw_label({0.7, -1.0}, cfg) == std::set<std::string>{"r"});
    CHECK(envs::fw_label({-1.4, 0.0}, cfg).empty());
    // closed regions: exactly on the boundary of blue (radius 0.4 at the origin)
    CHECK(envs::fw_label({0.4, 0.0}, cfg) == std::set<std::string>{"b"});
    const auto rv = envs::fw_robustness({0.4, 0.0}, cfg);
    CHECK(rv[2] == 0.0);
    CHECK(envs::fw_robustness({0.7, -1.0}, cfg)[0] == 0.35);
    // two units outside red's boundary
    CHECK(envs::fw_robustness({0.7, 1.35}, cfg)[0] == doctest::Approx(-2.0).epsilon(1e-12));
}

TEST_CASE("label and robustness agree on sampled points") {
    const auto cfg = plain();
    std::mt19937_64 rng(1);
    const ltl::ApSet aps({"r", "g", "b", "y"});
    for (int i = 0; i < 5000; ++i) {
        const envs::Vec2 x{oracle::uniform(rng, -1.5, 1.5), oracle::uniform(rng, -1.5, 1.5)};
        const auto label = envs::fw_label(x, cfg);
        const auto rv = envs::fw_robustness(x, cfg);
        for (std::size_t k = 0; k < 4; ++k) {
            CHECK((label.count(aps.name(k)) == 1) == (rv[k] >= 0.0));
            CHECK(rv[k] >= cfg.rho_min());
            CHECK(rv[k] <= cfg.rho_max());
        }
    }
}

TEST_CASE("FlatWorld environment wrapper") {
    auto cfg = plain();
    const envs::FlatWorld env(cfg);
    CHECK(env.initial_state() == envs::State{-1.0, -1.0});
    // out-of-bound actions are clipped before stepping
    CHECK(env.step({0.0, 0.0}, {5.0, -5.0}).next == envs::State{0.1, -0.1});
    CHECK(env.label({0.7, -1.0}) == 1U);
    CHECK(env.label({-0.9, 1.0}) == 8U);
    const auto obs = env.normalize({1.5, -1.5});
    CHECK(obs == std::vector<double>{1.0, -1.0});
    const auto qs = env.qs_config();
    CHECK(qs.rho_max == 0.4);
    CHECK(qs.rho_min == doctest::Approx(-3.0 * std::sqrt(2.0)));
    cfg.start = {3.0, 0.0};
    CHECK_THROWS(envs::FlatWorld{cfg});
}

TEST_CASE("gridlab_build") {
    CHECK_NOTHROW(envs::gridlab_build(ring(4)));
    const auto g = envs::gridlab_build(ring(6));
    CHECK(g.labels[5] == 1U);
    CHECK(g.reward_max() == 1.0);
    CHECK(g.reward_min() == 0.0);

    auto missing = ring(4);
    missing.next.pop_back();
    CHECK_THROWS_AS(envs::gridlab_build(missing), ltl::DomainError);
    auto short_row = ring(4);
    short_row.reward[2].pop_back();
    CHECK_THROWS_AS(envs::gridlab_build(short_row), ltl::DomainError);
    auto bad_target = ring(4);
    bad_target.next[1][0] = 9;
    CHECK_THROWS_AS(envs::gridlab_build(bad_target), ltl::DomainError);
    auto bad_label = ring(4);
    bad_label.labels[0] = {"q"};
    CHECK_THROWS(envs::gridlab_build(bad_label));
}

TEST_CASE("GridLab environment wrapper") {
    const envs::GridLabEnv env(envs::gridlab_build(ring(4)));
    CHECK(env.num_discrete_actions() == 2);
    auto o = env.step({0.0}, {1.0});
    CHECK(o.next == envs::State{0.0});
    CHECK(o.reward == 1.0);
    o = env.step({3.0}, {0.0});
    CHECK(o.next == envs::State{0.0});
    CHECK(env.label({3.0}) == 1U);
    CHECK(env.normalize({2.0}) == std::vector<double>{0.0, 0.0, 1.0, 0.0});
}

}  // TEST_SUITE
