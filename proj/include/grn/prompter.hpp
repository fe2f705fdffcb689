#pragma once

#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "grn/checkpoint.hpp"
#include "grn/optim.hpp"
#include "grn/poem_encoder.hpp"
#include "grn/sampling.hpp"

namespace grn {

struct PrompterConfig {
  int vocab = 0;
  int num_authors = 1;
  int num_schemes = 1;
  int author_dim = 128;
  int scheme_dim = 256;
  int top_k = 50;
  bool use_author = true;
  bool use_scheme = true;
};

// Bidirectional-context word model p(o_i | o_<i, o_>i, a, r). The gap
// representation at position j is [h_fwd(j-1) ; h_bwd(j+1)], so it never
// sees the token currently at j.
class Prompter {
 public:
  Prompter(PrompterConfig cfg, std::shared_ptr<PoemEncoder> encoder, Rng& rng)
      : cfg_(cfg), enc_(std::move(encoder)) {
    if (cfg_.vocab == 0) cfg_.vocab = enc_->config().vocab;
    author_emb_ = own_params_.add("pro.author", {cfg_.num_authors, cfg_.author_dim});
    scheme_emb_ = own_params_.add("pro.scheme", {cfg_.num_schemes, cfg_.scheme_dim});
    init_embedding(author_emb_, rng);
    init_embedding(scheme_emb_, rng);
    out_ = Linear(own_params_, "pro.out",
                  enc_->out_dim() + cfg_.author_dim + cfg_.scheme_dim, cfg_.vocab, rng);
    all_params_.adopt(own_params_);
    all_params_.adopt(enc_->params());
  }

  const PrompterConfig& config() const { return cfg_; }
  PoemEncoder& encoder() { return *enc_; }
  ParamSet& params() { return all_params_; }

  Value author_vec(const Conditioning& c) const {
    if (!cfg_.use_author) return make_tensor({cfg_.author_dim});
    int id = c.author_id >= 0 && c.author_id < cfg_.num_authors ? c.author_id : 0;
    return embedding_lookup(author_emb_, id);
  }

  Value scheme_vec(const Conditioning& c) const {
    if (!cfg_.use_scheme) return make_tensor({cfg_.scheme_dim});
    int id = c.scheme_id >= 0 && c.scheme_id < cfg_.num_schemes ? c.scheme_id : 0;
    return embedding_lookup(scheme_emb_, id);
  }

  // Gap vector for flat position j of an already-encoded token sequence.
  Value encode_gap(const EncoderOutput& enc, int j, const Conditioning& cond) const {
    int n = static_cast<int>(enc.H.size());
    if (j < 0 || j >= n)
      throw std::invalid_argument("Prompter::encode_gap: position " +
                                  std::to_string(j) + " out of range");
    // fwd[j] = state after tokens < j; bwd[j+1] = state after tokens > j.
    return concat({enc.fwd[j], enc.bwd[j + 1], author_vec(cond), scheme_vec(cond)});
  }

  Value gap_logits(const EncoderOutput& enc, int j, const Conditioning& cond) const {
    return out_(encode_gap(enc, j, cond));
  }

  // Distribution over the vocabulary for the token at flat position j.
  std::vector<real> predict_word(const Quatrain& o, int j, const Conditioning& cond) const {
    NoGradGuard ng;
    auto tokens = o.flatten();
    EncoderOutput enc = enc_->encode(tokens);
    Value logp = log_softmax(gap_logits(enc, j, cond));
    std::vector<real> probs(logp->data.size());
    for (std::size_t i = 0; i < probs.size(); ++i) probs[i] = std::exp(logp->data[i]);
    return probs;
  }

  // Candidate replacement for word position `word_index` (not a flat
  // index): renormalized top-k with special tokens masked out.
  std::string suggest(const Quatrain& o, int word_index, const Conditioning& cond,
                      Rng& rng, int k = 0) const {
    if (k <= 0) k = cfg_.top_k;
    int flat = flat_index_of_word(o, word_index);
    const Vocab& vocab = vocab_ref();
    auto probs = predict_word(o, flat, cond);
    for (int s = 0; s < kNumSpecial; ++s) probs[s] = 0;
    int id = sample_top_k(probs, k, rng);
    return vocab.token(id);
  }

  // Mean NLL over all word positions of a quatrain (one encode pass).
  std::pair<Value, int> quatrain_nll(const Quatrain& o, const Conditioning& cond) const {
    auto tokens = o.flatten();
    EncoderOutput enc = enc_->encode(tokens);
    std::vector<Value> nlls;
    int flat = 0;
    for (const auto& verse : o.verses) {
      for (const auto& tok : verse) {
        Value logp = log_softmax(gap_logits(enc, flat, cond));
        nlls.push_back(neg(pick(logp, vocab_ref().id(tok))));
        ++flat;
      }
      ++flat;  // skip the verse marker
    }
    return {sum(concat(nlls)), static_cast<int>(nlls.size())};
  }

  void save(const std::string& path) const { save_checkpoint(all_params_, path); }
  void load(const std::string& path) { load_checkpoint(all_params_, path); }

  static int flat_index_of_word(const Quatrain& o, int word_index) {
    auto [v, i] = o.locate_word(word_index);
    int flat = i;
    for (int k = 0; k < v; ++k)
      flat += static_cast<int>(o.verses[k].size()) + 1;  // +1 for the marker
    return flat;
  }

 private:
  const Vocab& vocab_ref() const { return enc_->vocab(); }

  PrompterConfig cfg_;
  std::shared_ptr<PoemEncoder> enc_;
  ParamSet own_params_;   // prompter head only
  ParamSet all_params_;   // head + (possibly shared) encoder
  Value author_emb_, scheme_emb_;
  Linear out_;
};

inline real prompter_perplexity(const Prompter& p, const std::vector<DatasetRecord>& records);

struct PrompterTrainReport {
  std::vector<real> epoch_loss;
  std::vector<real> epoch_val_ppl;
  int steps = 0;
};

inline PrompterTrainReport train_prompter(Prompter& prompter,
                                          const std::vector<DatasetRecord>& train,
                                          const std::vector<DatasetRecord>& val,
                                          const TrainOptions& opts) {
  if (train.empty()) throw std::invalid_argument("train_prompter: empty dataset");
  Adam adam(opts.lr);
  PrompterTrainReport report;
  Rng shuffle_rng(opts.shuffle_seed);
  real best_ppl = std::numeric_limits<real>::infinity();
  int bad_epochs = 0;
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.index(i)]);
    real epoch_nll = 0;
    long epoch_positions = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(opts.batch_size)) {
      std::size_t stop = std::min(order.size(), start + opts.batch_size);
      prompter.params().zero_grad();
      for (std::size_t k = start; k < stop; ++k) {
        const auto& r = train[order[k]];
        Conditioning c{r.author_id, r.scheme_id};
        auto [nll, n] = prompter.quatrain_nll(r.quatrain, c);
        epoch_nll += nll->scalar();
        epoch_positions += n;
        Value loss = scalar_mul(nll, real(1) / (n * static_cast<real>(stop - start)));
        backward(loss);
      }
      clip_grad_norm(prompter.params(), opts.clip_norm);
      adam.step(prompter.params());
      ++report.steps;
    }
    prompter.encoder().invalidate_cache();
    report.epoch_loss.push_back(epoch_nll / std::max<long>(1, epoch_positions));
    if (!val.empty()) {
      real ppl = prompter_perplexity(prompter, val);
      report.epoch_val_ppl.push_back(ppl);
      if (ppl < best_ppl - 1e-6) {
        best_ppl = ppl;
        bad_epochs = 0;
      } else if (++bad_epochs >= opts.patience) {
        break;
      }
    }
  }
  return report;
}

inline real prompter_perplexity(const Prompter& p, const std::vector<DatasetRecord>& records) {
  if (records.empty()) throw std::invalid_argument("prompter_perplexity: empty dataset");
  NoGradGuard ng;
  real total = 0;
  long count = 0;
  for (const auto& r : records) {
    auto [nll, n] = p.quatrain_nll(r.quatrain, {r.author_id, r.scheme_id});
    total += nll->scalar();
    count += n;
  }
  return std::exp(total / static_cast<real>(count));
}

}  // namespace grn
