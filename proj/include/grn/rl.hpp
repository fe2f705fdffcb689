#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "grn/optim.hpp"
#include "grn/rl_types.hpp"

namespace grn {

struct Transition {
  EnvState state;
  int action = 0;
  real log_prob = 0;  // behavior policy log-prob at collection time
  real reward = 0;
  real value = 0;
  bool done = false;
};

struct TrajectoryBuffer {
  std::vector<Transition> transitions;
  std::vector<std::size_t> episode_starts;  // index of the first transition
  std::vector<real> returns;                // rewards-to-go, discounted
  std::vector<real> advantages;             // GAE, normalized before updates
  bool finalized = false;

  std::size_t size() const { return transitions.size(); }
  std::size_t episodes() const { return episode_starts.size(); }

  void begin_episode() { episode_starts.push_back(transitions.size()); }

  // Episode [start, stop) half-open transition ranges.
  std::vector<std::pair<std::size_t, std::size_t>> episode_ranges() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t e = 0; e < episode_starts.size(); ++e) {
      std::size_t stop = e + 1 < episode_starts.size() ? episode_starts[e + 1]
                                                       : transitions.size();
      if (stop > episode_starts[e]) out.emplace_back(episode_starts[e], stop);
    }
    return out;
  }

  real total_reward(std::size_t start, std::size_t stop) const {
    real r = 0;
    for (std::size_t i = start; i < stop; ++i) r += transitions[i].reward;
    return r;
  }
};

struct VolleyConfig {
  int episodes_per_volley = 0;  // exactly one of these two is positive
  int steps_per_volley = 0;
  int volleys = 10;
  int max_episode_len = 10;
  real gamma = 0.99;
  real lambda = 0.95;
  real ppo_clip = 0.2;
  int ppo_epochs = 10;
  real kl_stop = 0.015;
  int minibatch = 64;
  real policy_lr = 1e-3;
  real value_lr = 1e-3;
  real value_coef = 0.5;   // weight of the value regression term
  real entropy_coef = 0.0;
  int value_iters = 10;    // value regression passes in VPG
  std::uint64_t seed = 0;

  void validate() const {
    if ((episodes_per_volley > 0) == (steps_per_volley > 0))
      throw std::invalid_argument(
          "VolleyConfig: exactly one of episodes_per_volley / steps_per_volley "
          "must be set");
    if (gamma < 0 || gamma > 1 || lambda < 0 || lambda > 1 || ppo_clip <= 0)
      throw std::invalid_argument("VolleyConfig: invalid gamma/lambda/clip");
  }
};

// ---------------------------------------------------------------------------
// Collection
// ---------------------------------------------------------------------------

// Runs one episode; appends its transitions and returns (total reward, len).
// Episodes aborted by an EpisodeFault are rolled back and reported with a
// negative length.
inline std::pair<real, int> rollout_episode(Environment& env, PolicyModel& policy,
                                            int max_episode_len, Rng& rng,
                                            TrajectoryBuffer& buffer,
                                            std::ostream* log = nullptr) {
  std::size_t mark = buffer.transitions.size();
  buffer.begin_episode();
  try {
    EnvState state = env.reset(rng);
    real total = 0;
    int len = 0;
    for (int t = 0; t < max_episode_len; ++t) {
      ActResult a = policy.act(state, rng);
      StepResult sr = env.step(state, a.action, rng);
      bool done = sr.done || t + 1 == max_episode_len;
      buffer.transitions.push_back(
          {state, a.action, a.log_prob, sr.reward, a.value, done});
      total += sr.reward;
      ++len;
      if (done) break;
      state = sr.state;
    }
    return {total, len};
  } catch (const EpisodeFault& fault) {
    buffer.transitions.resize(mark);
    buffer.episode_starts.pop_back();
    if (log) *log << "episode discarded: " << fault.what() << '\n';
    return {0, -1};
  }
}

// ---------------------------------------------------------------------------
// Returns and advantages
// ---------------------------------------------------------------------------

inline std::vector<real> rewards_to_go(const std::vector<real>& rewards, real gamma) {
  std::vector<real> g(rewards.size());
  real acc = 0;
  for (std::size_t i = rewards.size(); i-- > 0;) {
    acc = rewards[i] + gamma * acc;
    g[i] = acc;
  }
  return g;
}

// GAE backward recursion A_t = delta_t + gamma*lambda*A_{t+1}, with
// V(s_{T}) = bootstrap (0 for terminal states).
inline std::vector<real> gae(const std::vector<real>& rewards,
                             const std::vector<real>& values, real bootstrap,
                             real gamma, real lambda) {
  if (rewards.size() != values.size())
    throw std::invalid_argument("gae: rewards/values length mismatch");
  std::vector<real> adv(rewards.size());
  real next_v = bootstrap;
  real acc = 0;
  for (std::size_t i = rewards.size(); i-- > 0;) {
    real delta = rewards[i] + gamma * next_v - values[i];
    acc = delta + gamma * lambda * acc;
    adv[i] = acc;
    next_v = values[i];
  }
  return adv;
}

// Whole-buffer normalization to mean 0, std 1; constant advantages go to 0.
inline void normalize_advantages(std::vector<real>& adv) {
  if (adv.empty()) return;
  real mean = std::accumulate(adv.begin(), adv.end(), real(0)) /
              static_cast<real>(adv.size());
  real var = 0;
  for (real a : adv) var += (a - mean) * (a - mean);
  real std_dev = std::sqrt(var / static_cast<real>(adv.size()));
  if (std_dev < 1e-12) {
    std::fill(adv.begin(), adv.end(), real(0));
    return;
  }
  for (real& a : adv) a = (a - mean) / std_dev;
}

// Computes returns and normalized GAE advantages for every episode.
inline void finalize_buffer(TrajectoryBuffer& buffer, real gamma, real lambda) {
  buffer.returns.assign(buffer.size(), 0);
  buffer.advantages.assign(buffer.size(), 0);
  for (auto [start, stop] : buffer.episode_ranges()) {
    std::vector<real> rewards, values;
    for (std::size_t i = start; i < stop; ++i) {
      rewards.push_back(buffer.transitions[i].reward);
      values.push_back(buffer.transitions[i].value);
    }
    auto g = rewards_to_go(rewards, gamma);
    auto adv = gae(rewards, values, /*bootstrap=*/0, gamma, lambda);
    for (std::size_t i = start; i < stop; ++i) {
      buffer.returns[i] = g[i - start];
      buffer.advantages[i] = adv[i - start];
    }
  }
  normalize_advantages(buffer.advantages);
  buffer.finalized = true;
}

// ---------------------------------------------------------------------------
// Updates
// ---------------------------------------------------------------------------

struct UpdateDiagnostics {
  real policy_loss = 0;
  real value_loss = 0;
  real entropy = 0;
  real approx_kl = 0;
  int stop_epoch = 0;  // PPO: epochs actually applied
};

// Single ascent step on the score-function surrogate mean(logp * A), plus
// value regression to the rewards-to-go.
inline UpdateDiagnostics vpg_update(TrajectoryBuffer& buffer, PolicyModel& policy,
                                    const VolleyConfig& cfg, Adam& policy_adam,
                                    Adam& value_adam) {
  if (!buffer.finalized)
    throw std::logic_error("vpg_update: buffer not finalized");
  UpdateDiagnostics diag;
  std::size_t n = buffer.size();
  if (n == 0) return diag;

  policy.policy_params().zero_grad();
  real policy_loss = 0, entropy_sum = 0;
  for (std::size_t i = 0; i < n; ++i) {
    EvalResult ev = policy.evaluate(buffer.transitions[i].state,
                                    buffer.transitions[i].action);
    // loss = -(logp * A + entropy_coef * H) / n
    Value term = scalar_mul(ev.log_prob, buffer.advantages[i]);
    if (cfg.entropy_coef > 0)
      term = add(term, scalar_mul(ev.entropy, cfg.entropy_coef));
    Value loss = scalar_mul(term, real(-1) / static_cast<real>(n));
    policy_loss += loss->scalar();
    entropy_sum += ev.entropy->data[0];
    backward(loss);
  }
  {
    bool ok = true;
    for (const auto& p : policy.policy_params().items())
      for (real g : p->grad)
        if (!std::isfinite(g)) ok = false;
    if (!ok) throw std::runtime_error("vpg_update: non-finite policy gradient, update aborted");
  }
  policy_adam.step(policy.policy_params());
  policy.on_params_updated();

  real value_loss = 0;
  for (int it = 0; it < cfg.value_iters; ++it) {
    policy.value_params().zero_grad();
    value_loss = 0;
    for (std::size_t i = 0; i < n; ++i) {
      EvalResult ev = policy.evaluate(buffer.transitions[i].state,
                                      buffer.transitions[i].action);
      Value err = sub(ev.value, scalar_const(buffer.returns[i]));
      Value loss = scalar_mul(mul(err, err), real(1) / static_cast<real>(n));
      value_loss += loss->scalar();
      backward(loss);
    }
    value_adam.step(policy.value_params());
  }
  diag.policy_loss = policy_loss;
  diag.value_loss = value_loss;
  diag.entropy = entropy_sum / static_cast<real>(n);
  diag.stop_epoch = 1;
  return diag;
}

// PPO clipped-surrogate update with post-epoch approximate-KL early stop.
inline UpdateDiagnostics ppo_update(TrajectoryBuffer& buffer, PolicyModel& policy,
                                    const VolleyConfig& cfg, Adam& policy_adam,
                                    Adam& value_adam, Rng& rng) {
  if (!buffer.finalized)
    throw std::logic_error("ppo_update: buffer not finalized");
  UpdateDiagnostics diag;
  std::size_t n = buffer.size();
  if (n == 0) return diag;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < cfg.ppo_epochs; ++epoch) {
    for (std::size_t i = n; i > 1; --i)
      std::swap(order[i - 1], order[rng.index(i)]);

    real policy_loss = 0, value_loss = 0, entropy_sum = 0;
    std::size_t mb = cfg.minibatch > 0 ? static_cast<std::size_t>(cfg.minibatch) : n;
    for (std::size_t start = 0; start < n; start += mb) {
      std::size_t stop = std::min(n, start + mb);
      std::size_t bsz = stop - start;
      policy.policy_params().zero_grad();
      policy.value_params().zero_grad();
      for (std::size_t k = start; k < stop; ++k) {
        const Transition& tr = buffer.transitions[order[k]];
        real adv = buffer.advantages[order[k]];
        EvalResult ev = policy.evaluate(tr.state, tr.action);
        Value ratio = exp_v(sub(ev.log_prob, scalar_const(tr.log_prob)));
        real r = ratio->data[0];
        real lo = 1 - cfg.ppo_clip, hi = 1 + cfg.ppo_clip;
        // min(r*A, clip(r)*A): the clipped branch is constant, so the
        // gradient flows only when the unclipped branch is active.
        Value surrogate;
        real clipped = std::clamp(r, lo, hi) * adv;
        if (r * adv <= clipped)
          surrogate = scalar_mul(ratio, adv);
        else
          surrogate = scalar_const(clipped);
        Value obj = surrogate;
        if (cfg.entropy_coef > 0)
          obj = add(obj, scalar_mul(ev.entropy, cfg.entropy_coef));
        Value ploss = scalar_mul(obj, real(-1) / static_cast<real>(bsz));
        Value verr = sub(ev.value, scalar_const(buffer.returns[order[k]]));
        Value vloss = scalar_mul(mul(verr, verr),
                                 cfg.value_coef / static_cast<real>(bsz));
        policy_loss += ploss->scalar();
        value_loss += vloss->scalar();
        entropy_sum += ev.entropy->data[0];
        backward(add(ploss, vloss));
      }
      {
        bool ok = true;
        for (const auto* ps : {&policy.policy_params(), &policy.value_params()})
          for (const auto& p : ps->items())
            for (real g : p->grad)
              if (!std::isfinite(g)) ok = false;
        if (!ok)
          throw std::runtime_error("ppo_update: non-finite gradient, update aborted");
      }
      policy_adam.step(policy.policy_params());
      value_adam.step(policy.value_params());
      policy.on_params_updated();
    }
    diag.policy_loss = policy_loss;
    diag.value_loss = value_loss;
    diag.entropy = entropy_sum / static_cast<real>(n);
    diag.stop_epoch = epoch + 1;

    // approx KL = mean(logp_old - logp_new) over the whole buffer.
    real kl = 0;
    {
      NoGradGuard ng;
      for (std::size_t i = 0; i < n; ++i) {
        EvalResult ev = policy.evaluate(buffer.transitions[i].state,
                                        buffer.transitions[i].action);
        kl += buffer.transitions[i].log_prob - ev.log_prob->data[0];
      }
      kl /= static_cast<real>(n);
    }
    diag.approx_kl = kl;
    if (kl > cfg.kl_stop) break;
  }
  return diag;
}

// ---------------------------------------------------------------------------
// Volley loop
// ---------------------------------------------------------------------------

enum class Algo { Vpg, Ppo };

struct VolleyRow {
  int volley = 0;
  int episodes = 0;
  real mean_reward = 0;
  real median_reward = 0;
  real min_reward = 0;
  real max_reward = 0;
  real mean_length = 0;
  real policy_loss = 0;
  real value_loss = 0;
  real approx_kl = 0;
  int stop_epoch = 0;
};

inline std::string volley_csv_header() {
  return "volley,episodes,mean_reward,median_reward,min_reward,max_reward,"
         "mean_length,policy_loss,value_loss,approx_kl,stop_epoch";
}

inline std::string to_csv(const VolleyRow& r) {
  std::ostringstream os;
  os.precision(17);
  os << r.volley << ',' << r.episodes << ',' << r.mean_reward << ','
     << r.median_reward << ',' << r.min_reward << ',' << r.max_reward << ','
     << r.mean_length << ',' << r.policy_loss << ',' << r.value_loss << ','
     << r.approx_kl << ',' << r.stop_epoch;
  return os.str();
}

// One collect-then-update cycle per volley. Reports mean total undiscounted
// episode reward per volley.
inline std::vector<VolleyRow> train_volleys(
    Environment& env, PolicyModel& policy, const VolleyConfig& cfg, Algo algo,
    const std::function<void(int, const VolleyRow&)>& per_volley = {},
    const std::function<void(real, int)>& per_episode = {}) {
  cfg.validate();
  Rng rng(cfg.seed);
  Adam policy_adam(cfg.policy_lr);
  Adam value_adam(cfg.value_lr);
  std::vector<VolleyRow> rows;
  for (int volley = 0; volley < cfg.volleys; ++volley) {
    TrajectoryBuffer buffer;
    std::vector<real> episode_rewards;
    std::vector<int> episode_lengths;
    if (cfg.episodes_per_volley > 0) {
      for (int e = 0; e < cfg.episodes_per_volley; ++e) {
        auto [r, len] = rollout_episode(env, policy, cfg.max_episode_len, rng, buffer);
        if (len < 0) continue;
        episode_rewards.push_back(r);
        episode_lengths.push_back(len);
        if (per_episode) per_episode(r, len);
      }
    } else {
      while (static_cast<int>(buffer.size()) < cfg.steps_per_volley) {
        auto [r, len] = rollout_episode(env, policy, cfg.max_episode_len, rng, buffer);
        if (len < 0) continue;
        episode_rewards.push_back(r);
        episode_lengths.push_back(len);
        if (per_episode) per_episode(r, len);
      }
    }
    if (episode_rewards.empty())
      throw std::runtime_error("train_volleys: no usable episodes collected");
    finalize_buffer(buffer, cfg.gamma, cfg.lambda);
    UpdateDiagnostics diag;
    if (algo == Algo::Vpg)
      diag = vpg_update(buffer, policy, cfg, policy_adam, value_adam);
    else
      diag = ppo_update(buffer, policy, cfg, policy_adam, value_adam, rng);
    policy.on_params_updated();

    VolleyRow row;
    row.volley = volley;
    row.episodes = static_cast<int>(episode_rewards.size());
    std::vector<real> sorted = episode_rewards;
    std::sort(sorted.begin(), sorted.end());
    row.mean_reward = std::accumulate(sorted.begin(), sorted.end(), real(0)) /
                      static_cast<real>(sorted.size());
    row.median_reward = sorted[sorted.size() / 2];
    row.min_reward = sorted.front();
    row.max_reward = sorted.back();
    row.mean_length =
        std::accumulate(episode_lengths.begin(), episode_lengths.end(), 0) /
        static_cast<real>(episode_lengths.size());
    row.policy_loss = diag.policy_loss;
    row.value_loss = diag.value_loss;
    row.approx_kl = diag.approx_kl;
    row.stop_epoch = diag.stop_epoch;
    rows.push_back(row);
    if (per_volley) per_volley(volley, row);
  }
  return rows;
}

}  // namespace grn
