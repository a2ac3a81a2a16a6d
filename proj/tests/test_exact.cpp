#include <doctest.h>

#include <cmath>

#include "cycler/exact.hpp"
#include "cycler/io.hpp"
#include "cycler/shaping.hpp"

using namespace cycler;

namespace {

const std::string kFixtures = CYCLER_FIXTURES;

// Values of a policy by stepping the product for `steps` transitions.
exact::PolicyValue simulate(const envs::GridLab& grid, const automaton::Ldba& ldba,
                            const std::vector<std::vector<exact::Option>>& options, const std::vector<int>& choices,
                            double gamma, double gamma_phi, int steps) {
    exact::PolicyValue pv;
    int s = grid.start;
    automaton::StateId b = ldba.initial_transition(grid.labels[static_cast<std::size_t>(s)]).state;
    double g = 1.0;
    double gp = 1.0;
    for (int t = 0; t < steps; ++t) {
        const auto& opt = options[static_cast<std::size_t>(s * ldba.num_states + b)][static_cast<std::size_t>(
            choices[static_cast<std::size_t>(s * ldba.num_states + b)])];
        if (opt.jump) {
            b = ldba.element_target(*opt.jump);
        } else {
            pv.r += g * grid.reward[static_cast<std::size_t>(s)][static_cast<std::size_t>(opt.env_action)];
            s = grid.next[static_cast<std::size_t>(s)][static_cast<std::size_t>(opt.env_action)];
            b = ldba.step(b, grid.labels[static_cast<std::size_t>(s)]).state;
        }
        g *= gamma;
        if (ldba.is_accepting(b)) {
            gp *= gamma_phi;
            pv.v += gp;
        }
    }
    return pv;
}

}  // namespace

TEST_SUITE("exact") {

TEST_CASE("closed forms match simulation") {
    int checked = 0;
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const auto fx = exact::random_gapped_fixture(seed);
        const auto options = exact::product_options(fx.grid, fx.ldba);
        const std::size_t n = exact::count_policies(options);
        for (std::size_t i = 0; i < n; i += std::max<std::size_t>(1, n / 25)) {
            const auto choices = exact::decode_policy(options, i);
            const auto lasso = exact::trace_lasso(fx.grid, fx.ldba, options, choices);
            const auto closed = exact::lasso_values(lasso, fx.ldba, 0.9, 0.8);
            // cycles hold at most 12 records, so 6000 steps leave a tail below 0.8^500
            const auto sim = simulate(fx.grid, fx.ldba, options, choices, 0.9, 0.8, 6000);
            CHECK(closed.r == doctest::Approx(sim.r).epsilon(1e-9));
            CHECK(closed.v == doctest::Approx(sim.v).epsilon(1e-9));
            ++checked;
        }
    }
    CHECK(checked > 300);
}

TEST_CASE("lasso structure") {
    const auto fx = exact::random_gapped_fixture(3);
    const auto options = exact::product_options(fx.grid, fx.ldba);
    const auto lasso = exact::trace_lasso(fx.grid, fx.ldba, options, exact::decode_policy(options, 0));
    CHECK(lasso.cycle >= 1);
    CHECK(lasso.records.size() == lasso.prefix + lasso.cycle + 1);
    CHECK(lasso.records.back() == lasso.records[lasso.prefix]);
    CHECK(lasso.rewards.size() == lasso.prefix + lasso.cycle);
}

TEST_CASE("jumps appear as options") {
    const auto ldba = automaton::load_ldba(kFixtures + "/fg_jump.ldba", {.allow_partial = true});
    const auto grid = envs::gridlab_build(io::gridlab_from_json(io::read_json_file(kFixtures + "/toy_gridlab.json")));
    const auto options = exact::product_options(grid, ldba);
    REQUIRE(options.size() == 9);
    CHECK(options[0].size() == 3);  // (s 0, b 0): two moves and the guess
    CHECK(options[1].size() == 2);
    // the sink adds guard edges, so the guess follows all of them
    CHECK(options[0][2].jump == std::optional<std::size_t>{ldba.edges.size()});
    // F(G(p)) is satisfiable on this grid: jump at state 1 and stay there
    const auto values = exact::exact_values(grid, ldba, 0.9, 0.9);
    double vmax = 0.0;
    for (const auto& v : values) vmax = std::max(vmax, v.v);
    CHECK(vmax == doctest::Approx(9.0));
}

TEST_CASE("dual argmax") {
    const std::vector<exact::PolicyValue> vals{{1.0, 5.0, {}}, {2.0, 1.0, {}}, {2.0, 3.0, {}}};
    CHECK(exact::dual_argmax(vals, 0.0) == std::vector<std::size_t>{0});
    CHECK(exact::dual_argmax(vals, 10.0) == std::vector<std::size_t>{2});
    CHECK(exact::dual_argmax(vals, 2.0) == std::vector<std::size_t>{0, 2});
}

TEST_CASE("lambda bound holds on gapped fixtures") {
    for (std::uint64_t seed = 100; seed < 120; ++seed) {
        const auto fx = exact::random_gapped_fixture(seed);
        const auto rep = exact::verify_lambda_bound(fx.grid, fx.ldba, 0.9, 0.9);
        REQUIRE(rep.gap_exists);
        CHECK(rep.gap > 0.0);
        CHECK(rep.lambda_star ==
              doctest::Approx(shaping::lambda_bound(rep.step_r_max, rep.step_r_min, rep.gap, 0.9)));
        CHECK(rep.holds());
        // the constrained optimum is reported among the dual maximizers
        for (const auto& chk : rep.checks) {
            for (std::size_t i : chk.argmax) {
                CHECK(std::find(rep.constrained_argmax.begin(), rep.constrained_argmax.end(), i) !=
                      rep.constrained_argmax.end());
            }
        }
    }
}

TEST_CASE("policy count limit") {
    std::vector<std::vector<exact::Option>> options(21, std::vector<exact::Option>(2));
    CHECK(exact::count_policies(std::vector<std::vector<exact::Option>>(19, std::vector<exact::Option>(2))) ==
          (std::size_t{1} << 19));
    CHECK_THROWS_AS(exact::count_policies(options), ltl::DomainError);
    CHECK_THROWS_AS(exact::exact_values(exact::random_gapped_fixture(0).grid, exact::random_gapped_fixture(0).ldba, 1.0, 0.9),
                    ltl::DomainError);
}

}  // TEST_SUITE
