#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "grn/checkpoint.hpp"
#include "grn/poem_encoder.hpp"
#include "grn/rl_types.hpp"

namespace grn {

struct DetectorConfig {
  int num_authors = 1;
  int num_schemes = 1;
  int author_dim = 128;
  int scheme_dim = 256;
  int mlp_hidden = 512;
  int attn_dim = 256;
  int n_max = 50;  // fixed output width; do-nothing sits at index n_max
  // Freeze the (shared, pretrained) encoder during RL. When frozen, poem
  // encodings are memoized, which makes PPO's repeated re-evaluation cheap.
  bool freeze_encoder = true;
};

// Masked distribution over word positions plus do-nothing, with a value
// estimate from the same pooled poem embedding.
struct PolicyOutput {
  std::vector<real> probs;      // length n_max+1, masked entries exactly 0
  Value log_probs;              // masked entries at kMaskedLogProb
  Value value;                  // scalar
  std::vector<bool> mask;       // valid actions
  int valid_count = 0;
};

class Detector : public PolicyModel {
 public:
  Detector(DetectorConfig cfg, std::shared_ptr<PoemEncoder> encoder, Rng& rng)
      : cfg_(cfg), enc_(std::move(encoder)) {
    author_emb_ = head_params_.add("det.author", {cfg_.num_authors, cfg_.author_dim});
    scheme_emb_ = head_params_.add("det.scheme", {cfg_.num_schemes, cfg_.scheme_dim});
    init_embedding(author_emb_, rng);
    init_embedding(scheme_emb_, rng);
    attn_ = AdditiveAttention(head_params_, "det.attn",
                              cfg_.author_dim + cfg_.scheme_dim, enc_->out_dim(),
                              cfg_.attn_dim, rng);
    mlp_ = Mlp(head_params_, "det.mlp", enc_->out_dim(), cfg_.mlp_hidden,
               cfg_.n_max + 1, rng);
    value_head_ = Linear(value_params_, "det.value", enc_->out_dim(), 1, rng);
    policy_params_.adopt(head_params_);
    if (!cfg_.freeze_encoder) policy_params_.adopt(enc_->params());
    all_params_.adopt(head_params_);
    all_params_.adopt(value_params_);
    all_params_.adopt(enc_->params());
  }

  const DetectorConfig& config() const { return cfg_; }
  PoemEncoder& encoder() { return *enc_; }

  PolicyOutput policy_forward(const EnvState& state) const {
    const Quatrain& o = state.poem;
    int n_words = o.word_count();
    if (n_words > cfg_.n_max)
      throw std::invalid_argument("Detector: poem has " + std::to_string(n_words) +
                                  " words, exceeding N_max " + std::to_string(cfg_.n_max));
    auto tokens = o.flatten();
    const EncoderOutput* enc_ptr;
    EncoderOutput enc_local;
    if (cfg_.freeze_encoder) {
      enc_ptr = &enc_->encode_cached(tokens);
    } else {
      enc_local = enc_->encode(tokens);
      enc_ptr = &enc_local;
    }
    // Keys are the word-position encodings; markers provide context inside
    // the bi-LSTM but are not attended to or actionable.
    std::vector<Value> keys;
    keys.reserve(n_words);
    int flat = 0;
    for (const auto& verse : o.verses) {
      for (std::size_t i = 0; i < verse.size(); ++i) keys.push_back(enc_ptr->H[flat + i]);
      flat += static_cast<int>(verse.size()) + 1;
    }
    Value query = concat({author_vec(state.cond), scheme_vec(state.cond)});
    Value pooled = attn_.attend(query, keys).context;
    Value logits = mlp_(pooled);

    PolicyOutput out;
    out.mask.assign(cfg_.n_max + 1, false);
    for (int i = 0; i < n_words; ++i) out.mask[i] = true;
    out.mask[cfg_.n_max] = true;  // do-nothing is always valid
    out.valid_count = n_words + 1;
    out.log_probs = masked_log_softmax(logits, out.mask);
    out.probs.assign(cfg_.n_max + 1, real(0));
    for (int i = 0; i <= cfg_.n_max; ++i)
      if (out.mask[i]) out.probs[i] = std::exp(out.log_probs->data[i]);
    out.value = pick(value_head_(pooled), 0);
    return out;
  }

  // Categorical draw over the valid actions.
  static std::pair<int, real> select_action(const PolicyOutput& po, Rng& rng) {
    int action = static_cast<int>(rng.categorical(po.probs));
    return {action, po.log_probs->data[action]};
  }

  ActResult act(const EnvState& state, Rng& rng) override {
    NoGradGuard ng;
    PolicyOutput po = policy_forward(state);
    auto [action, logp] = select_action(po, rng);
    return {action, logp, po.value->data[0]};
  }

  EvalResult evaluate(const EnvState& state, int action) override {
    PolicyOutput po = policy_forward(state);
    if (action < 0 || action > cfg_.n_max || !po.mask[action])
      throw std::invalid_argument("Detector::evaluate: stored action " +
                                  std::to_string(action) +
                                  " is invalid under the current mask");
    EvalResult r;
    r.log_prob = pick(po.log_probs, action);
    r.value = po.value;
    // Entropy over valid entries only.
    std::vector<Value> terms;
    for (int i = 0; i <= cfg_.n_max; ++i)
      if (po.mask[i]) {
        Value lp = pick(po.log_probs, i);
        terms.push_back(mul(exp_v(lp), lp));
      }
    r.entropy = neg(sum(concat(terms)));
    return r;
  }

  ParamSet& policy_params() override { return policy_params_; }
  ParamSet& value_params() override { return value_params_; }
  ParamSet& all_params() { return all_params_; }

  void on_params_updated() override {
    if (!cfg_.freeze_encoder) enc_->invalidate_cache();
  }

  void save(const std::string& path) const { save_checkpoint(all_params_, path); }
  void load(const std::string& path) { load_checkpoint(all_params_, path); }

 private:
  Value author_vec(const Conditioning& c) const {
    int id = c.author_id >= 0 && c.author_id < cfg_.num_authors ? c.author_id : 0;
    return embedding_lookup(author_emb_, id);
  }
  Value scheme_vec(const Conditioning& c) const {
    int id = c.scheme_id >= 0 && c.scheme_id < cfg_.num_schemes ? c.scheme_id : 0;
    return embedding_lookup(scheme_emb_, id);
  }

  DetectorConfig cfg_;
  std::shared_ptr<PoemEncoder> enc_;
  ParamSet head_params_;    // attention + MLP + conditioning tables
  ParamSet value_params_;   // value head only
  ParamSet policy_params_;  // head (+ encoder when unfrozen)
  ParamSet all_params_;     // everything, for checkpoints
  Value author_emb_, scheme_emb_;
  AdditiveAttention attn_;
  Mlp mlp_;
  Linear value_head_;
};

}  // namespace grn
