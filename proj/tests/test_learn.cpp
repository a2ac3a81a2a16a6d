#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "cycler/cycles.hpp"
#include "cycler/io.hpp"
#include "cycler/learn.hpp"

using namespace cycler;
using learn::Mlp;

namespace {

const std::string kFixtures = CYCLER_FIXTURES;

std::filesystem::path scratch(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "cycler_tests";
    std::filesystem::create_directories(dir);
    return dir / name;
}

// Central-difference gradient of sum_k w_k * out_k.
std::vector<double> numeric_grad(Mlp net, const std::vector<double>& x, const std::vector<double>& w, double h) {
    std::vector<double> g(net.num_params());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double keep = net.params()[i];
        auto f = [&](double v) {
            net.params()[i] = v;
            const auto out = net.forward(x);
            double s = 0.0;
            for (std::size_t k = 0; k < out.size(); ++k) s += w[k] * out[k];
            return s;
        };
        g[i] = (f(keep + h) - f(keep - h)) / (2.0 * h);
        net.params()[i] = keep;
    }
    return g;
}

}  // namespace

TEST_SUITE("learn") {

TEST_CASE("mlp backward matches finite differences") {
    for (auto act : {learn::Activation::Tanh, learn::Activation::Relu}) {
        std::mt19937_64 rng(3);
        Mlp net({4, 7, 5, 3}, act);
        net.init(rng, 1.0);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (int trial = 0; trial < 5; ++trial) {
            std::vector<double> x(4);
            std::vector<double> w(3);
            for (double& v : x) v = u(rng);
            for (double& v : w) v = u(rng);
            Mlp::Cache cache;
            net.forward(x, &cache);
            std::vector<double> grad(net.num_params(), 0.0);
            net.backward(cache, w, grad);
            const auto num = numeric_grad(net, x, w, 1e-6);
            for (std::size_t i = 0; i < grad.size(); ++i) CHECK(grad[i] == doctest::Approx(num[i]).epsilon(1e-5));
        }
    }
}

TEST_CASE("mlp parameter layout") {
    Mlp net({2, 3, 1}, learn::Activation::Tanh);
    CHECK(net.num_params() == 2 * 3 + 3 + 3 * 1 + 1);
    std::fill(net.params().begin(), net.params().end(), 0.0);
    // weights of layer 0 are 0..5, biases 6..8, last weights 9..11, last bias 12
    net.params()[12] = 0.25;
    CHECK(net.forward(std::vector<double>{1.0, -1.0})[0] == 0.25);
    net.params()[6] = 10.0;  // saturate hidden unit 0
    net.params()[9] = 2.0;
    CHECK(net.forward(std::vector<double>{0.0, 0.0})[0] == doctest::Approx(0.25 + 2.0 * std::tanh(10.0)));
}

TEST_CASE("policy gradient check over twenty fixtures") {
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto fx = learn::make_gradcheck_fixture(seed, seed % 2 == 0);
        worst = std::max(worst, learn::policy_gradient_check(fx.net, fx.batch));
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("gradient check edge cases") {
    auto fx = learn::make_gradcheck_fixture(100, true, true);
    CHECK(learn::policy_gradient_check(fx.net, fx.batch) < 1e-4);
    fx = learn::make_gradcheck_fixture(101, false, false, true);
    CHECK(learn::policy_gradient_check(fx.net, fx.batch) < 1e-4);
}

TEST_CASE("surrogate loss at the old policy") {
    // ratio 1 everywhere: the clipped surrogate is minus the mean advantage
    const auto fx = learn::make_gradcheck_fixture(7);
    auto batch = fx.batch;
    double mean_adv = 0.0;
    for (auto& s : batch) {
        s.logp_old = fx.net.log_prob(fx.net.output(s.obs, s.mask), s.action);
        mean_adv += s.advantage;
    }
    mean_adv /= static_cast<double>(batch.size());
    CHECK(learn::surrogate_loss(fx.net, batch, 0.2, 0.0, nullptr) == doctest::Approx(-mean_adv).epsilon(1e-12));
}

TEST_CASE("gaussian log-prob and entropy") {
    learn::PolicyShape shape{3, 2, 0, 8};
    learn::PolicyNet net(shape, 1, -0.5);
    const std::vector<double> obs{0.1, 0.2, 0.3};
    const auto out = net.output(obs, {});
    learn::PolicyAction a{{out.mean[0] + 0.3, out.mean[1] - 0.1}, 0};
    double expect = 0.0;
    for (std::size_t k = 0; k < 2; ++k) {
        const double sd = std::exp(out.log_std[k]);
        const double z = (a.cont[k] - out.mean[k]) / sd;
        expect += -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * M_PI);
    }
    CHECK(net.log_prob(out, a) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(out.log_std[0] == -0.5);
    CHECK(net.entropy(out) == doctest::Approx(2.0 * (0.5 + 0.5 * std::log(2.0 * M_PI) - 0.5)).epsilon(1e-12));
    CHECK(net.mode(out).cont == out.mean);
}

TEST_CASE("masked choices are never sampled") {
    learn::PolicyShape shape{2, 0, 4, 8};
    learn::PolicyNet net(shape, 5);
    const std::vector<double> obs{0.5, -0.5};
    const std::vector<bool> mask{true, false, true, false};
    const auto out = net.output(obs, mask);
    CHECK(out.probs[1] == 0.0);
    CHECK(out.probs[3] == 0.0);
    CHECK(out.probs[0] + out.probs[2] == doctest::Approx(1.0));
    std::mt19937_64 rng(0);
    for (int i = 0; i < 500; ++i) {
        const auto a = net.sample(out, rng);
        CHECK(mask[a.choice]);
    }
}

TEST_CASE("value loss gradient") {
    learn::ValueNet v(3, 6, 2);
    std::vector<learn::Sample> batch(4);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (auto& s : batch) {
        s.critic_obs = {u(rng), u(rng), u(rng)};
        s.target = u(rng);
    }
    std::vector<double> grad(v.mlp().num_params(), 0.0);
    const double loss = v.loss(batch, &grad);
    double expect = 0.0;
    for (const auto& s : batch) expect += 0.5 * std::pow(v.value(s.critic_obs) - s.target, 2);
    CHECK(loss == doctest::Approx(expect / 4.0).epsilon(1e-12));
    for (std::size_t i = 0; i < grad.size(); i += 5) {
        const double keep = v.mlp().params()[i];
        v.mlp().params()[i] = keep + 1e-6;
        const double up = v.loss(batch, nullptr);
        v.mlp().params()[i] = keep - 1e-6;
        const double down = v.loss(batch, nullptr);
        v.mlp().params()[i] = keep;
        CHECK(grad[i] == doctest::Approx((up - down) / 2e-6).epsilon(1e-5));
    }
}

TEST_CASE("adam first step moves by the learning rate") {
    learn::Adam opt(3, 0.01);
    std::vector<double> p{1.0, 1.0, 1.0};
    opt.step(p, {2.0, -0.5, 0.0});
    CHECK(p[0] == doctest::Approx(0.99));
    CHECK(p[1] == doctest::Approx(1.01));
    CHECK(p[2] == 1.0);
}

TEST_CASE("observation encoding") {
    const auto ldba = automaton::load_ldba(kFixtures + "/fg_jump.ldba", {.allow_partial = true});
    const envs::GridLabEnv grid(envs::gridlab_build(io::gridlab_from_json(io::read_json_file(kFixtures + "/toy_gridlab.json"))));
    const learn::ObsEncoder enc(grid, ldba);
    // 3 grid states, 3 automaton states (with sink), 4 guard edges and one eps edge
    REQUIRE(ldba.num_elements() == 5);
    CHECK(enc.dim() == 11);
    CHECK(enc.num_choices() == 3);
    CHECK(enc.mask(0) == std::vector<bool>{true, true, true});
    CHECK(enc.mask(1) == std::vector<bool>{true, true, false});
    product::ProductState ps{{2.0}, 1, product::Frontier(5)};
    ps.e.set(0);
    CHECK(enc.encode(ps) == std::vector<double>{0, 0, 1, 0, 1, 0, 1, 0, 0, 0, 0});
    CHECK(enc.to_action({{}, 1}).env == std::vector<double>{1.0});
    const auto jump = enc.to_action({{}, 2});
    REQUIRE(jump.jump);
    CHECK(*jump.jump == 4);

    const auto fw_ldba = automaton::load_ldba(kFixtures + "/flatworld.ldba");
    const envs::FlatWorld fw(envs::FlatWorldConfig::defaults(0));
    const learn::ObsEncoder fenc(fw, fw_ldba);
    CHECK(fenc.num_choices() == 0);
    CHECK(fenc.dim() == 2 + 5 + 16);
    CHECK(fenc.to_action({{0.3, -0.2}, 0}).env == std::vector<double>{0.3, -0.2});
}

TEST_CASE("checkpoint roundtrip") {
    const envs::FlatWorld fw(envs::FlatWorldConfig::defaults(0));
    const auto ldba = automaton::load_ldba(kFixtures + "/flatworld.ldba");
    const learn::PolicyNet net(learn::policy_shape_for(fw, ldba, 16), 4);
    const auto path = scratch("roundtrip.ckpt").string();
    learn::save_checkpoint(path, net);
    const auto back = learn::load_checkpoint(path);
    CHECK(back.params() == net.params());
    CHECK(back.shape().obs_dim == net.shape().obs_dim);
    CHECK(back.shape().hidden == 16);
    CHECK_THROWS_AS(learn::load_checkpoint(scratch("missing.ckpt").string()), std::ios_base::failure);
    {
        std::ofstream f(scratch("bad.ckpt"));
        f << "{\"format\": \"other\"}\n";
    }
    CHECK_THROWS_AS(learn::load_checkpoint(scratch("bad.ckpt").string()), std::runtime_error);
}

TEST_CASE("train config validation") {
    learn::TrainConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.gamma = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ltl::DomainError);
    cfg = {};
    cfg.batch_size = 0;
    CHECK_THROWS_AS(cfg.validate(), ltl::DomainError);
    cfg = {};
    cfg.lambda = -1.0;
    CHECK_THROWS_AS(cfg.validate(), ltl::DomainError);
}

TEST_CASE("log rows") {
    learn::TrainLogRow row;
    row.iteration = 3;
    row.episodes = 48;
    row.accepting_visits = 1.5;
    CHECK(learn::log_csv_row(row) == "3,48,0,0,0,1.5,0,0");
    CHECK(learn::log_csv_header().find("accepting_visits") != std::string::npos);
}

TEST_CASE("short training run on a GridLab product") {
    // Visiting p infinitely often requires cycling 0 -> 1 -> 0 or staying at 1.
    const auto ldba = automaton::load_ldba(kFixtures + "/visit_p.ldba");
    const envs::GridLabEnv grid(envs::gridlab_build(io::gridlab_from_json(io::read_json_file(kFixtures + "/toy_gridlab.json"))));
    learn::TrainConfig cfg;
    cfg.batch_size = 8;
    cfg.horizon = 20;
    cfg.episodes = 400;
    cfg.lambda = 10.0;
    cfg.epochs = 4;
    cfg.hidden = 16;
    cfg.actor_lr = 3e-3;
    cfg.seed = 1;
    int rows = 0;
    const auto res = learn::train(grid, ldba, cycles::find_maips_from(ldba, 0), cycles::find_macs(ldba), cfg,
                                  [&](const learn::TrainLogRow&) { ++rows; });
    CHECK(rows == 50);
    CHECK(res.log.size() == 50);
    CHECK(res.log.back().episodes == 400);
    for (const auto& r : res.log) CHECK(std::isfinite(r.actor_loss));
    const learn::ObsEncoder enc(grid, ldba);
    const auto stats = learn::evaluate(learn::as_policy(res.policy, enc, true), grid, ldba, 20, 3, 0);
    CHECK(stats.rollouts == 3);
    CHECK(stats.mean_visits >= 15.0);
    CHECK(stats.std_visits == 0.0);  // greedy and deterministic
}

}  // TEST_SUITE
