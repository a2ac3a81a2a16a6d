#pragma once

// Desk-scale policy optimization on the product MDP: small fully connected
// networks with hand-written backpropagation, a clipped-ratio policy gradient
// (PPO-lite) with a value baseline, evaluation, and checkpoints.

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "cycler/cycles.hpp"
#include "cycler/envs.hpp"
#include "cycler/product.hpp"
#include "cycler/shaping.hpp"

namespace cycler::learn {

enum class Activation { Relu, Tanh };

/// Fully connected network; the last layer is linear. Parameters are stored
/// flat, layer by layer, weights (row-major, out x in) before biases.
class Mlp {
public:
    Mlp() = default;
    Mlp(std::vector<std::size_t> sizes, Activation act);

    struct Cache {
        std::vector<std::vector<double>> a;  // a[0] is the input
        std::vector<std::vector<double>> z;
    };

    std::size_t input_dim() const { return sizes_.front(); }
    std::size_t output_dim() const { return sizes_.back(); }
    std::size_t num_params() const { return params_.size(); }
    const std::vector<std::size_t>& sizes() const { return sizes_; }
    Activation activation() const { return act_; }

    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }

    /// Gaussian fan-in initialization; the last layer is scaled by `out_scale`.
    void init(std::mt19937_64& rng, double out_scale);

    std::vector<double> forward(std::span<const double> x, Cache* cache = nullptr) const;
    /// Adds d(loss)/d(params) to `grad` given d(loss)/d(output).
    void backward(const Cache& cache, std::span<const double> dout, std::span<double> grad) const;

private:
    std::vector<std::size_t> sizes_;
    Activation act_ = Activation::Relu;
    std::vector<double> params_;
};

struct PolicyShape {
    std::size_t obs_dim = 0;
    std::size_t action_dim = 0;   // Gaussian head size; zero for discrete environments
    std::size_t num_choices = 0;  // categorical head size; zero when there is nothing to choose
    std::size_t hidden = 64;
};

/// A sampled product action. `choice` indexes the categorical head: for
/// continuous environments 0 is "move" and 1.. are jumps; for discrete
/// environments 0..A-1 are moves and A.. are jumps.
struct PolicyAction {
    std::vector<double> cont;
    std::size_t choice = 0;
};

struct PolicyOutput {
    std::vector<double> mean;
    std::vector<double> log_std;  // clamped
    std::vector<double> probs;    // masked softmax; empty without a categorical head
};

class PolicyNet {
public:
    static constexpr double kLogStdMin = -5.0;
    static constexpr double kLogStdMax = 2.0;

    PolicyNet() = default;
    PolicyNet(const PolicyShape& shape, std::uint64_t seed, double init_log_std = -0.5);

    const PolicyShape& shape() const { return shape_; }
    std::size_t num_params() const { return body_.num_params() + log_std_.size(); }
    std::vector<double> params() const;
    void set_params(std::span<const double> p);

    PolicyOutput output(std::span<const double> obs, const std::vector<bool>& mask, Mlp::Cache* cache = nullptr) const;
    PolicyAction sample(const PolicyOutput& out, std::mt19937_64& rng) const;
    PolicyAction mode(const PolicyOutput& out) const;
    double log_prob(const PolicyOutput& out, const PolicyAction& a) const;
    double entropy(const PolicyOutput& out) const;

    const Mlp& body() const { return body_; }
    /// Unclamped log-std parameters; they follow the body in params().
    const std::vector<double>& raw_log_std() const { return log_std_; }

private:
    PolicyShape shape_;
    Mlp body_;
    std::vector<double> log_std_;
};

/// One decision in a collected batch.
struct Sample {
    std::vector<double> obs;
    std::vector<bool> mask;  // available categorical choices
    PolicyAction action;
    double logp_old = 0.0;
    double advantage = 0.0;
    double target = 0.0;              // value target
    std::vector<double> critic_obs;  // obs plus the time feature
};

/// Mean clipped-ratio surrogate with entropy bonus, as a loss to minimize.
/// Adds its gradient over PolicyNet::params() to `grad` when given.
double surrogate_loss(const PolicyNet& net, std::span<const Sample> batch, double clip, double entropy_coef,
                      std::vector<double>* grad);

/// Largest componentwise relative error between the analytic surrogate
/// gradient and central differences with step h.
double policy_gradient_check(const PolicyNet& net, std::span<const Sample> batch, double clip = 0.2,
                             double entropy_coef = 0.01, double h = 1e-5);

/// Small random network and batch for gradient checks.
struct GradCheckFixture {
    PolicyNet net;
    std::vector<Sample> batch;
};
GradCheckFixture make_gradcheck_fixture(std::uint64_t seed, bool with_choices = true, bool zero_advantage = false,
                                        bool constant_input = false);

class ValueNet {
public:
    ValueNet() = default;
    ValueNet(std::size_t input_dim, std::size_t hidden, std::uint64_t seed);

    double value(std::span<const double> x) const { return mlp_.forward(x)[0]; }
    /// Mean of 0.5 (V - target)^2; adds the gradient to `grad` when given.
    double loss(std::span<const Sample> batch, std::vector<double>* grad) const;

    Mlp& mlp() { return mlp_; }
    const Mlp& mlp() const { return mlp_; }

private:
    Mlp mlp_;
};

class Adam {
public:
    Adam() = default;
    Adam(std::size_t n, double lr) : lr_(lr), m_(n, 0.0), v_(n, 0.0) {}
    void step(std::vector<double>& params, const std::vector<double>& grad);

private:
    double lr_ = 1e-3;
    double beta1_ = 0.9;
    double beta2_ = 0.999;
    double eps_ = 1e-8;
    long t_ = 0;
    std::vector<double> m_;
    std::vector<double> v_;
};

/// Concatenates normalized s, one-hot b and the frontier bits.
class ObsEncoder {
public:
    ObsEncoder(const envs::Environment& env, const automaton::Ldba& ldba) : env_(env), ldba_(ldba) {}

    std::size_t dim() const;
    std::vector<double> encode(const product::ProductState& ps) const;
    /// Categorical choices available at b.
    std::vector<bool> mask(automaton::StateId b) const;
    std::size_t num_choices() const;
    product::Action to_action(const PolicyAction& a) const;

private:
    const envs::Environment& env_;
    const automaton::Ldba& ldba_;
};

PolicyShape policy_shape_for(const envs::Environment& env, const automaton::Ldba& ldba, std::size_t hidden = 64);

enum class RewardMode { Cycler, CyclerQs, Unshaped };

struct TrainConfig {
    double gamma = 0.98;
    double gamma_phi = 0.99;
    double lambda = 400.0;
    int batch_size = 128;  // trajectories per update
    int horizon = 120;
    double actor_lr = 3e-4;
    double critic_lr = 1e-3;
    int episodes = 2000;
    std::uint64_t seed = 0;
    RewardMode reward = RewardMode::Cycler;
    double entropy_coef = 0.0;
    int epochs = 1;
    int minibatch_size = 0;  // zero means the full batch
    double clip = 0.2;
    double max_grad_norm = 0.5;
    int hidden = 64;
    double init_log_std = -0.5;

    void validate() const;
};

struct TrainLogRow {
    int iteration = 0;
    int episodes = 0;
    double ltl_return = 0.0;     // unshaped, eventually discounted
    double shaped_return = 0.0;  // CyclER stream, eventually discounted
    double mdp_return = 0.0;     // undiscounted sum of r_MDP
    double accepting_visits = 0.0;
    double actor_loss = 0.0;
    double critic_loss = 0.0;
};

struct TrainResult {
    PolicyNet policy;
    ValueNet critic;
    std::vector<TrainLogRow> log;
};

using TrainCallback = std::function<void(const TrainLogRow&)>;

/// Iterates: collect a batch, shape each trajectory, form the dual reward,
/// update actor and critic. Throws std::runtime_error if a loss goes non-finite.
TrainResult train(const envs::Environment& env, const automaton::Ldba& ldba, const std::vector<cycles::CyclePath>& maips,
                  const std::vector<cycles::CyclePath>& macs, const TrainConfig& cfg, const TrainCallback& on_iter = {});

/// Wraps a network as a product policy (sampling, or the mode when greedy).
product::Policy as_policy(const PolicyNet& net, const ObsEncoder& enc, bool greedy = false);

struct EvalStats {
    double mean_visits = 0.0;
    double std_visits = 0.0;
    double mean_mdp = 0.0;
    double std_mdp = 0.0;
    int rollouts = 0;
};

EvalStats evaluate(const product::Policy& policy, const envs::Environment& env, const automaton::Ldba& ldba, int horizon,
                   int n_rollouts, std::uint64_t seed);

/// One JSON header line describing shapes, then the raw parameter doubles.
void save_checkpoint(const std::string& path, const PolicyNet& net);
PolicyNet load_checkpoint(const std::string& path);

std::string log_csv_header();
std::string log_csv_row(const TrainLogRow& row);

}  // namespace cycler::learn
