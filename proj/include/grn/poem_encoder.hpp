#pragma once

#include <memory>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "grn/corpus.hpp"
#include "grn/layers.hpp"
#include "grn/text_input.hpp"

namespace grn {

struct PoemEncoderConfig {
  int vocab = 0;
  int emb_dim = 300;
  int hidden = 1024;  // per direction
  int r_char = 100;
  int char_emb_dim = 25;
  int char_hidden = 50;
};

// Bi-LSTM poem encoder with learned boundary states, shared between the
// prompter and the detector by default.
class PoemEncoder {
 public:
  PoemEncoder(PoemEncoderConfig cfg, const Vocab& vocab, Rng& rng,
              const std::string& prefix = "shared.enc")
      : cfg_(cfg), vocab_(&vocab), chars_(CharVocab::from_vocab(vocab)) {
    if (cfg_.vocab == 0) cfg_.vocab = static_cast<int>(vocab.size());
    emb_ = params_.add(prefix + ".emb", {cfg_.vocab, cfg_.emb_dim});
    init_embedding(emb_, rng);
    char_enc_ = CharWordEncoder(params_, prefix + ".char", chars_.size,
                                cfg_.char_emb_dim, cfg_.char_hidden, cfg_.r_char, rng);
    bilstm_ = BiLstm(params_, prefix + ".lstm", cfg_.emb_dim + cfg_.r_char,
                     cfg_.hidden, rng, /*learned_boundaries=*/true);
  }

  const PoemEncoderConfig& config() const { return cfg_; }
  const Vocab& vocab() const { return *vocab_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }
  int out_dim() const { return 2 * cfg_.hidden; }

  EncoderOutput encode(const std::vector<std::string>& tokens) const {
    std::vector<Value> inputs;
    inputs.reserve(tokens.size());
    for (const auto& tok : tokens) {
      Value w = embedding_lookup(emb_, vocab_->id(tok));
      Value u = char_enc_.encode(chars_.encode(tok));
      inputs.push_back(concat({w, u}));
    }
    return bilstm_.encode(inputs);
  }

  // Frozen-weights encoding memoized by token sequence. Returned states
  // are constants (no graph), so this is only valid while the encoder
  // parameters stay fixed; call `invalidate_cache` after any update.
  const EncoderOutput& encode_cached(const std::vector<std::string>& tokens) const {
    std::ostringstream key;
    for (const auto& t : tokens) key << t << '\x1f';
    auto it = cache_.find(key.str());
    if (it != cache_.end()) return it->second;
    if (cache_.size() > kCacheCap) cache_.clear();
    NoGradGuard ng;
    EncoderOutput enc = encode(tokens);
    // Detach: re-wrap the activations as plain constants.
    auto detach = [](std::vector<Value>& vs) {
      for (auto& v : vs) v = constant(v->shape, v->data);
    };
    detach(enc.H);
    detach(enc.fwd);
    detach(enc.bwd);
    return cache_.emplace(key.str(), std::move(enc)).first->second;
  }

  void invalidate_cache() { cache_.clear(); }

 private:
  static constexpr std::size_t kCacheCap = 4096;

  PoemEncoderConfig cfg_;
  const Vocab* vocab_;
  CharVocab chars_;
  ParamSet params_;
  Value emb_;
  CharWordEncoder char_enc_;
  BiLstm bilstm_;
  mutable std::unordered_map<std::string, EncoderOutput> cache_;
};

}  // namespace grn
