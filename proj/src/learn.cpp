#include "cycler/learn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace cycler::learn {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * log(2 pi)

double act_fn(Activation act, double z) { return act == Activation::Relu ? std::max(z, 0.0) : std::tanh(z); }

double act_grad(Activation act, double z, double a) {
    if (act == Activation::Relu) return z > 0.0 ? 1.0 : 0.0;
    return 1.0 - a * a;
}

double clamp_log_std(double v) { return std::clamp(v, PolicyNet::kLogStdMin, PolicyNet::kLogStdMax); }

}  // namespace

Mlp::Mlp(std::vector<std::size_t> sizes, Activation act) : sizes_(std::move(sizes)), act_(act) {
    if (sizes_.size() < 2) throw std::invalid_argument("an MLP needs an input and an output layer");
    std::size_t n = 0;
    for (std::size_t l = 1; l < sizes_.size(); ++l) n += sizes_[l] * sizes_[l - 1] + sizes_[l];
    params_.assign(n, 0.0);
}

void Mlp::init(std::mt19937_64& rng, double out_scale) {
    std::size_t off = 0;
    for (std::size_t l = 1; l < sizes_.size(); ++l) {
        const std::size_t in = sizes_[l - 1];
        const std::size_t out = sizes_[l];
        double sd = std::sqrt((act_ == Activation::Relu ? 2.0 : 1.0) / static_cast<double>(in));
        if (l + 1 == sizes_.size()) sd *= out_scale;
        std::normal_distribution<double> dist(0.0, sd);
        for (std::size_t k = 0; k < in * out; ++k) params_[off + k] = dist(rng);
        off += in * out;
        for (std::size_t k = 0; k < out; ++k) params_[off + k] = 0.0;
        off += out;
    }
}

std::vector<double> Mlp::forward(std::span<const double> x, Cache* cache) const {
    if (x.size() != input_dim()) throw std::invalid_argument("MLP input has the wrong size");
    std::vector<double> a(x.begin(), x.end());
    if (cache) {
        cache->a.assign(1, a);
        cache->z.clear();
    }
    std::size_t off = 0;
    for (std::size_t l = 1; l < sizes_.size(); ++l) {
        const std::size_t in = sizes_[l - 1];
        const std::size_t out = sizes_[l];
        const double* w = params_.data() + off;
        const double* b = w + in * out;
        std::vector<double> z(out);
        for (std::size_t i = 0; i < out; ++i) {
            double acc = b[i];
            const double* row = w + i * in;
            for (std::size_t k = 0; k < in; ++k) acc += row[k] * a[k];
            z[i] = acc;
        }
        off += in * out + out;
        const bool last = l + 1 == sizes_.size();
        std::vector<double> next(out);
        for (std::size_t i = 0; i < out; ++i) next[i] = last ? z[i] : act_fn(act_, z[i]);
        if (cache) {
            cache->z.push_back(std::move(z));
            cache->a.push_back(next);
        }
        a = std::move(next);
    }
    return a;
}

void Mlp::backward(const Cache& cache, std::span<const double> dout, std::span<double> grad) const {
    const std::size_t layers = sizes_.size() - 1;
    std::vector<std::size_t> offsets(layers);
    std::size_t off = 0;
    for (std::size_t l = 1; l < sizes_.size(); ++l) {
        offsets[l - 1] = off;
        off += sizes_[l] * sizes_[l - 1] + sizes_[l];
    }
    std::vector<double> delta(dout.begin(), dout.end());
    for (std::size_t l = layers; l-- > 0;) {
        const std::size_t in = sizes_[l];
        const std::size_t out = sizes_[l + 1];
        const double* w = params_.data() + offsets[l];
        double* gw = grad.data() + offsets[l];
        double* gb = gw + in * out;
        const std::vector<double>& a_prev = cache.a[l];
        for (std::size_t i = 0; i < out; ++i) {
            if (delta[i] == 0.0) continue;
            double* grow = gw + i * in;
            for (std::size_t k = 0; k < in; ++k) grow[k] += delta[i] * a_prev[k];
            gb[i] += delta[i];
        }
        if (l == 0) break;
        std::vector<double> prev(in, 0.0);
        for (std::size_t i = 0; i < out; ++i) {
            if (delta[i] == 0.0) continue;
            const double* row = w + i * in;
            for (std::size_t k = 0; k < in; ++k) prev[k] += row[k] * delta[i];
        }
        const std::vector<double>& z = cache.z[l - 1];
        for (std::size_t k = 0; k < in; ++k) prev[k] *= act_grad(act_, z[k], a_prev[k]);
        delta = std::move(prev);
    }
}

PolicyNet::PolicyNet(const PolicyShape& shape, std::uint64_t seed, double init_log_std)
    : shape_(shape),
      body_({shape.obs_dim, shape.hidden, shape.hidden, shape.action_dim + shape.num_choices}, Activation::Relu),
      log_std_(shape.action_dim, init_log_std) {
    if (shape.action_dim + shape.num_choices == 0) throw std::invalid_argument("policy has no outputs");
    std::mt19937_64 rng(seed);
    body_.init(rng, 0.01);
}

std::vector<double> PolicyNet::params() const {
    std::vector<double> p = body_.params();
    p.insert(p.end(), log_std_.begin(), log_std_.end());
    return p;
}

void PolicyNet::set_params(std::span<const double> p) {
    if (p.size() != num_params()) throw std::invalid_argument("parameter vector has the wrong size");
    std::copy(p.begin(), p.begin() + static_cast<long>(body_.num_params()), body_.params().begin());
    std::copy(p.begin() + static_cast<long>(body_.num_params()), p.end(), log_std_.begin());
}

PolicyOutput PolicyNet::output(std::span<const double> obs, const std::vector<bool>& mask, Mlp::Cache* cache) const {
    const std::vector<double> raw = body_.forward(obs, cache);
    PolicyOutput out;
    out.mean.assign(raw.begin(), raw.begin() + static_cast<long>(shape_.action_dim));
    for (double v : log_std_) out.log_std.push_back(clamp_log_std(v));
    if (shape_.num_choices > 0) {
        if (mask.size() != shape_.num_choices) throw std::invalid_argument("choice mask has the wrong size");
        double mx = -INFINITY;
        for (std::size_t k = 0; k < shape_.num_choices; ++k) {
            if (mask[k]) mx = std::max(mx, raw[shape_.action_dim + k]);
        }
        if (!std::isfinite(mx)) throw std::invalid_argument("no choice is available");
        out.probs.assign(shape_.num_choices, 0.0);
        double z = 0.0;
        for (std::size_t k = 0; k < shape_.num_choices; ++k) {
            if (!mask[k]) continue;
            out.probs[k] = std::exp(raw[shape_.action_dim + k] - mx);
            z += out.probs[k];
        }
        for (double& p : out.probs) p /= z;
    }
    return out;
}

PolicyAction PolicyNet::sample(const PolicyOutput& out, std::mt19937_64& rng) const {
    PolicyAction a;
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t i = 0; i < out.mean.size(); ++i) a.cont.push_back(out.mean[i] + std::exp(out.log_std[i]) * normal(rng));
    if (!out.probs.empty()) {
        std::discrete_distribution<std::size_t> pick(out.probs.begin(), out.probs.end());
        a.choice = pick(rng);
    }
    return a;
}

PolicyAction PolicyNet::mode(const PolicyOutput& out) const {
    PolicyAction a;
    a.cont = out.mean;
    if (!out.probs.empty()) {
        a.choice = static_cast<std::size_t>(std::max_element(out.probs.begin(), out.probs.end()) - out.probs.begin());
    }
    return a;
}

namespace {

/// The Gaussian part only matters when the sampled choice moves the
/// environment (choice 0 for continuous policies with a jump head).
bool uses_gaussian(const PolicyShape& shape, const PolicyAction& a) {
    return shape.action_dim > 0 && (shape.num_choices == 0 || a.choice == 0);
}

}  // namespace

double PolicyNet::log_prob(const PolicyOutput& out, const PolicyAction& a) const {
    double lp = 0.0;
    if (uses_gaussian(shape_, a)) {
        for (std::size_t i = 0; i < out.mean.size(); ++i) {
            const double u = (a.cont.at(i) - out.mean[i]) * std::exp(-out.log_std[i]);
            lp += -0.5 * u * u - out.log_std[i] - kHalfLog2Pi;
        }
    }
    if (!out.probs.empty()) lp += std::log(out.probs.at(a.choice));
    return lp;
}

double PolicyNet::entropy(const PolicyOutput& out) const {
    double h = 0.0;
    for (double ls : out.log_std) h += ls + kHalfLog2Pi + 0.5;
    for (double p : out.probs) {
        if (p > 0.0) h -= p * std::log(p);
    }
    return h;
}

double surrogate_loss(const PolicyNet& net, std::span<const Sample> batch, double clip, double entropy_coef,
                      std::vector<double>* grad) {
    if (batch.empty()) return 0.0;
    const PolicyShape& shape = net.shape();
    const std::size_t nb = net.body().num_params();
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    if (grad) grad->resize(net.num_params(), 0.0);

    double loss = 0.0;
    Mlp::Cache cache;
    std::vector<double> dout(shape.action_dim + shape.num_choices);
    for (const Sample& s : batch) {
        const PolicyOutput out = net.output(s.obs, s.mask, grad ? &cache : nullptr);
        const double lp = net.log_prob(out, s.action);
        const double ratio = std::exp(lp - s.logp_old);
        const double clipped = std::clamp(ratio, 1.0 - clip, 1.0 + clip);
        const double a = s.advantage;
        const bool unclipped = a >= 0.0 ? ratio <= 1.0 + clip : ratio >= 1.0 - clip;
        const double h = net.entropy(out);
        loss -= (std::min(ratio * a, clipped * a) + entropy_coef * h) * inv_n;
        if (!grad) continue;

        // d(loss)/d(log pi) and d(loss)/d(entropy)
        const double g_lp = unclipped ? -ratio * a * inv_n : 0.0;
        const double g_h = -entropy_coef * inv_n;
        std::fill(dout.begin(), dout.end(), 0.0);
        if (uses_gaussian(shape, s.action) && g_lp != 0.0) {
            for (std::size_t i = 0; i < shape.action_dim; ++i) {
                const double var = std::exp(2.0 * out.log_std[i]);
                const double diff = s.action.cont[i] - out.mean[i];
                dout[i] = g_lp * diff / var;
                const double raw = net.raw_log_std()[i];
                if (raw > PolicyNet::kLogStdMin && raw < PolicyNet::kLogStdMax) {
                    (*grad)[nb + i] += g_lp * (diff * diff / var - 1.0);
                }
            }
        }
        for (std::size_t i = 0; i < shape.action_dim; ++i) {
            const double raw = net.raw_log_std()[i];
            if (raw > PolicyNet::kLogStdMin && raw < PolicyNet::kLogStdMax) (*grad)[nb + i] += g_h;
        }
        if (!out.probs.empty()) {
            double ent = 0.0;
            for (double p : out.probs) {
                if (p > 0.0) ent -= p * std::log(p);
            }
            for (std::size_t k = 0; k < shape.num_choices; ++k) {
                const double p = out.probs[k];
                if (!s.mask[k]) continue;
                const double d_lp = (k == s.action.choice ? 1.0 : 0.0) - p;
                const double d_h = p > 0.0 ? -p * (std::log(p) + ent) : 0.0;
                dout[shape.action_dim + k] = g_lp * d_lp + g_h * d_h;
            }
        }
        net.body().backward(cache, dout, std::span<double>(grad->data(), nb));
    }
    return loss;
}

double policy_gradient_check(const PolicyNet& net, std::span<const Sample> batch, double clip, double entropy_coef,
                             double h) {
    std::vector<double> analytic(net.num_params(), 0.0);
    surrogate_loss(net, batch, clip, entropy_coef, &analytic);
    PolicyNet probe = net;
    std::vector<double> p = net.params();
    double worst = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double keep = p[i];
        p[i] = keep + h;
        probe.set_params(p);
        const double up = surrogate_loss(probe, batch, clip, entropy_coef, nullptr);
        p[i] = keep - h;
        probe.set_params(p);
        const double down = surrogate_loss(probe, batch, clip, entropy_coef, nullptr);
        p[i] = keep;
        const double fd = (up - down) / (2.0 * h);
        const double denom = std::max(std::abs(analytic[i]) + std::abs(fd), 1e-6);
        worst = std::max(worst, std::abs(analytic[i] - fd) / denom);
    }
    return worst;
}

GradCheckFixture make_gradcheck_fixture(std::uint64_t seed, bool with_choices, bool zero_advantage, bool constant_input) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    PolicyShape shape;
    shape.obs_dim = 5;
    shape.action_dim = 2;
    shape.num_choices = with_choices ? 3 : 0;
    shape.hidden = 8;
    GradCheckFixture fx{PolicyNet(shape, seed, -0.3), {}};
    // larger output weights than the training init so every term is exercised
    std::vector<double> p = fx.net.params();
    for (double& v : p) v = 0.5 * unit(rng);
    fx.net.set_params(p);

    std::vector<double> shared(shape.obs_dim);
    for (double& v : shared) v = unit(rng);
    for (int k = 0; k < 4; ++k) {
        Sample s;
        s.obs = constant_input ? shared : std::vector<double>(shape.obs_dim);
        if (!constant_input) {
            for (double& v : s.obs) v = unit(rng);
        }
        s.mask.assign(shape.num_choices, true);
        if (with_choices && k % 2 == 1) s.mask[2] = false;
        const PolicyOutput out = fx.net.output(s.obs, s.mask);
        s.action = fx.net.sample(out, rng);
        // old log-probabilities near the current ones keep ratios inside the clip range
        s.logp_old = fx.net.log_prob(out, s.action) + 0.05 * unit(rng);
        s.advantage = zero_advantage ? 0.0 : unit(rng);
        fx.batch.push_back(std::move(s));
    }
    return fx;
}

ValueNet::ValueNet(std::size_t input_dim, std::size_t hidden, std::uint64_t seed)
    : mlp_({input_dim, hidden, hidden, 1}, Activation::Tanh) {
    std::mt19937_64 rng(seed);
    mlp_.init(rng, 1.0);
}

double ValueNet::loss(std::span<const Sample> batch, std::vector<double>* grad) const {
    if (batch.empty()) return 0.0;
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    if (grad) grad->resize(mlp_.num_params(), 0.0);
    double loss = 0.0;
    Mlp::Cache cache;
    for (const Sample& s : batch) {
        const double v = mlp_.forward(s.critic_obs, grad ? &cache : nullptr)[0];
        const double diff = v - s.target;
        loss += 0.5 * diff * diff * inv_n;
        if (grad) {
            const double d = diff * inv_n;
            mlp_.backward(cache, std::span<const double>(&d, 1), *grad);
        }
    }
    return loss;
}

void Adam::step(std::vector<double>& params, const std::vector<double>& grad) {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
        params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
    }
}

std::size_t ObsEncoder::dim() const {
    return env_.observation_dim() + static_cast<std::size_t>(ldba_.num_states) + ldba_.num_elements();
}

std::vector<double> ObsEncoder::encode(const product::ProductState& ps) const {
    std::vector<double> x = env_.normalize(ps.s);
    const std::size_t b_off = x.size();
    x.resize(dim(), 0.0);
    x[b_off + static_cast<std::size_t>(ps.b)] = 1.0;
    const std::size_t e_off = b_off + static_cast<std::size_t>(ldba_.num_states);
    for (std::size_t k = 0; k < ps.e.size(); ++k) x[e_off + k] = ps.e.test(k) ? 1.0 : 0.0;
    return x;
}

std::size_t ObsEncoder::num_choices() const {
    const std::size_t jumps = ldba_.eps_edges.size();
    if (env_.num_discrete_actions() > 0) return env_.num_discrete_actions() + jumps;
    return jumps > 0 ? 1 + jumps : 0;
}

std::vector<bool> ObsEncoder::mask(automaton::StateId b) const {
    const std::size_t moves = env_.num_discrete_actions() > 0 ? env_.num_discrete_actions() : 1;
    std::vector<bool> m(num_choices(), false);
    if (m.empty()) return m;
    for (std::size_t k = 0; k < moves; ++k) m[k] = true;
    for (std::size_t j = 0; j < ldba_.eps_edges.size(); ++j) m[moves + j] = ldba_.eps_edges[j].from == b;
    return m;
}

product::Action ObsEncoder::to_action(const PolicyAction& a) const {
    product::Action out;
    const std::size_t moves = env_.num_discrete_actions() > 0 ? env_.num_discrete_actions() : 1;
    if (num_choices() > 0 && a.choice >= moves) {
        out.jump = ldba_.edges.size() + (a.choice - moves);
        return out;
    }
    if (env_.num_discrete_actions() > 0) {
        out.env = {static_cast<double>(a.choice)};
    } else {
        out.env = a.cont;
    }
    return out;
}

PolicyShape policy_shape_for(const envs::Environment& env, const automaton::Ldba& ldba, std::size_t hidden) {
    const ObsEncoder enc(env, ldba);
    PolicyShape shape;
    shape.obs_dim = enc.dim();
    shape.action_dim = env.num_discrete_actions() > 0 ? 0 : env.action_dim();
    shape.num_choices = enc.num_choices();
    shape.hidden = hidden;
    return shape;
}

void TrainConfig::validate() const {
    auto unit_open = [](double v) { return v > 0.0 && v < 1.0; };
    if (!unit_open(gamma)) throw ltl::DomainError("gamma must lie in (0, 1)");
    if (!unit_open(gamma_phi)) throw ltl::DomainError("gamma_phi must lie in (0, 1)");
    if (lambda < 0.0) throw ltl::DomainError("lambda must be non-negative");
    if (batch_size < 1 || horizon < 1 || episodes < 1 || epochs < 1 || hidden < 1) {
        throw ltl::DomainError("batch_size, horizon, episodes, epochs and hidden must be positive");
    }
    if (minibatch_size < 0) throw ltl::DomainError("minibatch_size must be non-negative");
    if (!(actor_lr > 0.0) || !(critic_lr > 0.0)) throw ltl::DomainError("learning rates must be positive");
    if (!(clip > 0.0) || !(max_grad_norm > 0.0)) throw ltl::DomainError("clip and max_grad_norm must be positive");
    if (entropy_coef < 0.0) throw ltl::DomainError("entropy_coef must be non-negative");
}

namespace {

void clip_norm(std::vector<double>& g, double max_norm) {
    double sq = 0.0;
    for (double v : g) sq += v * v;
    const double norm = std::sqrt(sq);
    if (!std::isfinite(norm)) throw std::runtime_error("non-finite gradient");
    if (norm > max_norm) {
        for (double& v : g) v *= max_norm / norm;
    }
}

struct Episode {
    product::ProductTrajectory traj;
    std::vector<Sample> samples;
};

}  // namespace

product::Policy as_policy(const PolicyNet& net, const ObsEncoder& enc, bool greedy) {
    return [&net, &enc, greedy](const product::ProductState& ps, std::mt19937_64& rng) {
        const PolicyOutput out = net.output(enc.encode(ps), enc.mask(ps.b));
        return enc.to_action(greedy ? net.mode(out) : net.sample(out, rng));
    };
}

TrainResult train(const envs::Environment& env, const automaton::Ldba& ldba, const std::vector<cycles::CyclePath>& maips,
                  const std::vector<cycles::CyclePath>& macs, const TrainConfig& cfg, const TrainCallback& on_iter) {
    cfg.validate();
    const product::Product prod(env, ldba);
    const ObsEncoder enc(env, ldba);
    const auto hidden = static_cast<std::size_t>(cfg.hidden);

    TrainResult res;
    res.policy = PolicyNet(policy_shape_for(env, ldba, hidden), cfg.seed, cfg.init_log_std);
    res.critic = ValueNet(enc.dim() + 1, hidden, cfg.seed + 1);
    Adam actor_opt(res.policy.num_params(), cfg.actor_lr);
    Adam critic_opt(res.critic.mlp().num_params(), cfg.critic_lr);

    shaping::ShapingConfig scfg;
    if (cfg.reward == RewardMode::CyclerQs) {
        scfg.mode = shaping::Mode::Qs;
        ltl::QSConfig qs = env.qs_config();
        qs.thresholds = product::LetterMap(env.aps(), ldba.aps).map(qs.thresholds);
        scfg.qs = qs;
    }
    const bool shaped = cfg.reward != RewardMode::Unshaped;
    // value targets are kept near unit scale
    const double scale = std::max(1.0, cfg.lambda);

    std::mt19937_64 rng(cfg.seed ^ 0x5eedULL);
    int episodes_done = 0;
    int iteration = 0;
    while (episodes_done < cfg.episodes) {
        const int n_eps = std::min(cfg.batch_size, cfg.episodes - episodes_done);
        TrainLogRow row;
        row.iteration = iteration;
        std::vector<Sample> batch;

        for (int ep = 0; ep < n_eps; ++ep) {
            std::vector<Sample> samples;
            const product::Policy recorder = [&](const product::ProductState& ps, std::mt19937_64& r) {
                Sample s;
                s.obs = enc.encode(ps);
                s.mask = enc.mask(ps.b);
                const PolicyOutput out = res.policy.output(s.obs, s.mask);
                s.action = res.policy.sample(out, r);
                s.logp_old = res.policy.log_prob(out, s.action);
                s.critic_obs = s.obs;
                s.critic_obs.push_back(static_cast<double>(samples.size()) / cfg.horizon);
                product::Action a = enc.to_action(s.action);
                samples.push_back(std::move(s));
                return a;
            };
            const product::ProductTrajectory traj = product::rollout(prod, recorder, cfg.horizon, rng());

            shaping::RewardTrace rt;
            if (shaped) {
                rt = shaping::cycler_assign(traj, ldba, maips, macs, scfg);
            } else {
                rt = shaping::cycler_assign(traj, ldba, {}, {}, {});
            }
            rt.gamma = cfg.gamma;
            rt.gamma_phi = cfg.gamma_phi;
            rt.lambda = cfg.lambda;
            const std::vector<double> r_hat = shaping::dual_stream(rt, shaped);

            double to_go = 0.0;
            for (std::size_t t = r_hat.size(); t-- > 0;) {
                to_go += r_hat[t];
                samples[t].target = to_go / scale;
            }
            row.ltl_return += shaping::eventual_discounted_value(rt, false);
            row.shaped_return += shaping::eventual_discounted_value(rt, true);
            row.mdp_return += std::accumulate(rt.r_mdp.begin(), rt.r_mdp.end(), 0.0);
            row.accepting_visits += product::accepting_visits(traj, ldba);
            for (auto& s : samples) batch.push_back(std::move(s));
        }
        episodes_done += n_eps;
        row.episodes = episodes_done;
        row.ltl_return /= n_eps;
        row.shaped_return /= n_eps;
        row.mdp_return /= n_eps;
        row.accepting_visits /= n_eps;

        // advantages from the pre-update critic, normalized over the batch
        double mean = 0.0;
        for (auto& s : batch) {
            s.advantage = s.target - res.critic.value(s.critic_obs);
            mean += s.advantage;
        }
        mean /= static_cast<double>(batch.size());
        double var = 0.0;
        for (const auto& s : batch) var += (s.advantage - mean) * (s.advantage - mean);
        const double sd = std::sqrt(var / static_cast<double>(batch.size())) + 1e-8;
        for (auto& s : batch) s.advantage = (s.advantage - mean) / sd;

        const std::size_t mb = cfg.minibatch_size > 0 ? static_cast<std::size_t>(cfg.minibatch_size) : batch.size();
        std::vector<std::size_t> order(batch.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::vector<Sample> chunk;
        for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
            std::shuffle(order.begin(), order.end(), rng);
            for (std::size_t start = 0; start < order.size(); start += mb) {
                chunk.clear();
                for (std::size_t k = start; k < std::min(order.size(), start + mb); ++k) chunk.push_back(batch[order[k]]);

                std::vector<double> g_actor(res.policy.num_params(), 0.0);
                const double la = surrogate_loss(res.policy, chunk, cfg.clip, cfg.entropy_coef, &g_actor);
                std::vector<double> g_critic(res.critic.mlp().num_params(), 0.0);
                const double lc = res.critic.loss(chunk, &g_critic);
                if (!std::isfinite(la) || !std::isfinite(lc)) throw std::runtime_error("training diverged: non-finite loss");
                clip_norm(g_actor, cfg.max_grad_norm);
                clip_norm(g_critic, cfg.max_grad_norm);
                std::vector<double> p = res.policy.params();
                actor_opt.step(p, g_actor);
                res.policy.set_params(p);
                critic_opt.step(res.critic.mlp().params(), g_critic);
                row.actor_loss = la;
                row.critic_loss = lc;
            }
        }
        res.log.push_back(row);
        if (on_iter) on_iter(row);
        ++iteration;
    }
    return res;
}

EvalStats evaluate(const product::Policy& policy, const envs::Environment& env, const automaton::Ldba& ldba, int horizon,
                   int n_rollouts, std::uint64_t seed) {
    if (n_rollouts < 1) throw ltl::DomainError("n_rollouts must be positive");
    const product::Product prod(env, ldba);
    std::vector<double> visits;
    std::vector<double> mdp;
    for (int k = 0; k < n_rollouts; ++k) {
        const product::ProductTrajectory traj = product::rollout(prod, policy, horizon, seed + static_cast<std::uint64_t>(k));
        visits.push_back(product::accepting_visits(traj, ldba));
        double r = 0.0;
        for (const auto& st : traj.steps) r += st.r_mdp;
        mdp.push_back(r);
    }
    auto stats = [](const std::vector<double>& v, double& mean, double& sd) {
        mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
        double acc = 0.0;
        for (double x : v) acc += (x - mean) * (x - mean);
        sd = std::sqrt(acc / static_cast<double>(v.size()));
    };
    EvalStats out;
    out.rollouts = n_rollouts;
    stats(visits, out.mean_visits, out.std_visits);
    stats(mdp, out.mean_mdp, out.std_mdp);
    return out;
}

void save_checkpoint(const std::string& path, const PolicyNet& net) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::ios_base::failure("cannot write checkpoint " + path);
    const std::vector<double> p = net.params();
    const nlohmann::json header = {
        {"format", "cycler-policy"}, {"version", 1},
        {"obs_dim", net.shape().obs_dim}, {"action_dim", net.shape().action_dim},
        {"num_choices", net.shape().num_choices}, {"hidden", net.shape().hidden},
        {"num_params", p.size()}, {"dtype", "float64-le"},
    };
    f << header.dump() << '\n';
    f.write(reinterpret_cast<const char*>(p.data()), static_cast<std::streamsize>(p.size() * sizeof(double)));
    if (!f) throw std::runtime_error("failed writing checkpoint " + path);
}

PolicyNet load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::ios_base::failure("cannot open checkpoint " + path);
    std::string line;
    std::getline(f, line);
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("bad checkpoint header: " + std::string(e.what()));
    }
    if (header.value("format", "") != "cycler-policy" || header.value("version", 0) != 1) {
        throw std::runtime_error("not a cycler policy checkpoint");
    }
    PolicyShape shape;
    shape.obs_dim = header.at("obs_dim").get<std::size_t>();
    shape.action_dim = header.at("action_dim").get<std::size_t>();
    shape.num_choices = header.at("num_choices").get<std::size_t>();
    shape.hidden = header.at("hidden").get<std::size_t>();
    PolicyNet net(shape, 0);
    const auto n = header.at("num_params").get<std::size_t>();
    if (n != net.num_params()) throw std::runtime_error("checkpoint parameter count does not match its shapes");
    std::vector<double> p(n);
    f.read(reinterpret_cast<char*>(p.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (f.gcount() != static_cast<std::streamsize>(n * sizeof(double))) throw std::runtime_error("truncated checkpoint");
    net.set_params(p);
    return net;
}

std::string log_csv_header() {
    return "iteration,episodes,ltl_return,shaped_return,mdp_return,accepting_visits,actor_loss,critic_loss";
}

std::string log_csv_row(const TrainLogRow& r) {
    std::ostringstream os;
    os.precision(10);
    os << r.iteration << ',' << r.episodes << ',' << r.ltl_return << ',' << r.shaped_return << ',' << r.mdp_return << ','
       << r.accepting_visits << ',' << r.actor_loss << ',' << r.critic_loss;
    return os.str();
}

}  // namespace cycler::learn
