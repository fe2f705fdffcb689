#pragma once

#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "grn/checkpoint.hpp"
#include "grn/corpus.hpp"
#include "grn/layers.hpp"
#include "grn/optim.hpp"
#include "grn/sampling.hpp"
#include "grn/text_input.hpp"

namespace grn {

struct GeneratorConfig {
  int vocab = 0;         // filled from the dataset
  int num_authors = 1;   // including the unknown row
  int num_schemes = 1;
  int emb_dim = 300;
  int hidden = 512;      // encoder bi-LSTM, decoder LSTM and GRU state
  int author_dim = 128;
  int scheme_dim = 256;
  int r_char = 100;
  int char_emb_dim = 25;
  int char_hidden = 50;
  int max_len = 50;
  bool use_author = true;
  bool use_scheme = true;
  // The decoder GRU recurrence: default uses its own previous output as
  // state; `literal` re-reads the first-layer LSTM state instead.
  bool gru_state_literal = false;
};

struct DecodeState {
  LstmState z;   // first decoder layer
  Value q_prev;  // GRU state
};

// Conditional quatrain generator p(y_i | y_<i, x, a, r).
class Generator {
 public:
  Generator(GeneratorConfig cfg, Vocab vocab, Rng& rng)
      : cfg_(cfg), vocab_(std::move(vocab)), chars_(CharVocab::from_vocab(vocab_)) {
    if (cfg_.vocab == 0) cfg_.vocab = static_cast<int>(vocab_.size());
    emb_ = params_.add("gen.emb", {cfg_.vocab, cfg_.emb_dim});
    init_embedding(emb_, rng);
    char_enc_ = CharWordEncoder(params_, "gen.char", chars_.size, cfg_.char_emb_dim,
                                cfg_.char_hidden, cfg_.r_char, rng);
    encoder_ = BiLstm(params_, "gen.encx", cfg_.emb_dim + cfg_.r_char, cfg_.hidden, rng);
    sentinel_ = params_.add("gen.sentinel", {2 * cfg_.hidden});
    init_vector_uniform(sentinel_, rng, 0.1);
    author_emb_ = params_.add("gen.author", {cfg_.num_authors, cfg_.author_dim});
    scheme_emb_ = params_.add("gen.scheme", {cfg_.num_schemes, cfg_.scheme_dim});
    init_embedding(author_emb_, rng);
    init_embedding(scheme_emb_, rng);
    decoder_ = LstmCell(params_, "gen.dec",
                        cfg_.emb_dim + cfg_.r_char + cfg_.author_dim + cfg_.scheme_dim,
                        cfg_.hidden, rng);
    attn_ = AdditiveAttention(params_, "gen.attn", cfg_.hidden, 2 * cfg_.hidden,
                              cfg_.hidden, rng);
    gru_ = GruCell(params_, "gen.gru", 2 * cfg_.hidden + cfg_.hidden, cfg_.hidden, rng);
    bridge_ = Linear(params_, "gen.bridge", cfg_.hidden, cfg_.emb_dim, rng);
  }

  const GeneratorConfig& config() const { return cfg_; }
  const Vocab& vocab() const { return vocab_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }

  Value word_input(const std::string& token) const {
    Value w = embedding_lookup(emb_, vocab_.id(token));
    Value u = char_enc_.encode(chars_.encode(token));
    return concat({w, u});
  }

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

  // Contextual encoding H_x; empty context yields the learned sentinel so
  // attention stays well-defined.
  std::vector<Value> encode_context(const std::vector<std::string>& x) const {
    if (x.empty()) return {sentinel_};
    std::vector<Value> inputs;
    inputs.reserve(x.size());
    for (const auto& tok : x) inputs.push_back(word_input(tok));
    return encoder_.encode(inputs).H;
  }

  DecodeState init_state() const {
    return {decoder_.zero_state(), gru_.zero_state()};
  }

  // One decoder step; returns log-probabilities over the vocabulary.
  Value decode_step(const std::string& prev_token, const Conditioning& cond,
                    DecodeState& state, const std::vector<Value>& H) const {
    Value in = concat({word_input(prev_token), author_vec(cond), scheme_vec(cond)});
    LstmState z = decoder_.step(in, state.z);
    Value ctx = attn_.attend(z.h, H).context;
    Value gru_state = cfg_.gru_state_literal ? state.z.h : state.q_prev;
    Value q = gru_.step(concat({ctx, z.h}), gru_state);
    state.z = z;
    state.q_prev = q;
    Value logits = matmul(emb_, bridge_(q));  // tied output projection
    return log_softmax(logits);
  }

  // Teacher-forced negative log-likelihood of the flattened target
  // sequence (markers included). Returns (summed NLL, token count).
  std::pair<Value, int> sequence_nll(const std::vector<std::string>& x,
                                     const Quatrain& y,
                                     const Conditioning& cond) const {
    auto H = encode_context(x);
    auto targets = y.flatten();
    DecodeState st = init_state();
    std::string prev = special_token_text(kBos);
    std::vector<Value> nlls;
    nlls.reserve(targets.size());
    for (const auto& tok : targets) {
      Value logp = decode_step(prev, cond, st, H);
      nlls.push_back(neg(pick(logp, vocab_.id(tok))));
      prev = tok;
    }
    return {sum(concat(nlls)), static_cast<int>(targets.size())};
  }

  struct DraftResult {
    Quatrain poem;
    bool well_formed = false;
    int tokens = 0;
  };

  // Samples a draft; well-formed means 4 verses, each with at least one
  // alphabetic token, closed by the end-of-quatrain marker.
  DraftResult generate_draft(const std::vector<std::string>& x,
                             const Conditioning& cond,
                             const SamplingStrategy& strategy, Rng& rng,
                             int max_len = 0) const {
    NoGradGuard ng;
    if (max_len <= 0) max_len = cfg_.max_len;
    auto H = encode_context(x);
    DecodeState st = init_state();
    std::string prev = special_token_text(kBos);
    DraftResult out;
    std::vector<std::string> verse;
    bool closed = false;
    for (int i = 0; i < max_len && !closed; ++i) {
      Value logp = decode_step(prev, cond, st, H);
      std::vector<real> probs(logp->data.size());
      for (std::size_t j = 0; j < probs.size(); ++j) probs[j] = std::exp(logp->data[j]);
      probs[kPad] = probs[kUnk] = probs[kBos] = 0;
      real z = 0;
      for (real p : probs) z += p;
      for (real& p : probs) p /= z;
      int id = sample_token(probs, strategy, rng);
      ++out.tokens;
      const std::string& tok = vocab_.token(id);
      if (id == kEov) {
        out.poem.verses.push_back(verse);
        verse.clear();
      } else if (id == kEoq) {
        out.poem.verses.push_back(verse);
        verse.clear();
        closed = true;
      } else {
        verse.push_back(tok);
      }
      prev = tok;
    }
    out.well_formed = closed && out.poem.verses.size() == 4;
    if (out.well_formed)
      for (const auto& v : out.poem.verses) {
        bool has_word = false;
        for (const auto& t : v)
          if (has_letter(t)) has_word = true;
        if (v.empty() || !has_word) out.well_formed = false;
      }
    return out;
  }

  // Draft with bounded retries on malformed output.
  DraftResult generate_draft_retrying(const std::vector<std::string>& x,
                                      const Conditioning& cond,
                                      const SamplingStrategy& strategy, Rng& rng,
                                      int retries = 5) const {
    DraftResult r;
    for (int attempt = 0; attempt <= retries; ++attempt) {
      r = generate_draft(x, cond, strategy, rng);
      if (r.well_formed) return r;
    }
    return r;
  }

  void save(const std::string& path) const { save_checkpoint(params_, path); }
  void load(const std::string& path) { load_checkpoint(params_, path); }

 private:
  GeneratorConfig cfg_;
  Vocab vocab_;
  CharVocab chars_;
  ParamSet params_;
  Value emb_, sentinel_, author_emb_, scheme_emb_;
  CharWordEncoder char_enc_;
  BiLstm encoder_;
  LstmCell decoder_;
  AdditiveAttention attn_;
  GruCell gru_;
  Linear bridge_;
};

// A (context, target) training pair; context is the previous quatrain of
// the same author in corpus order, or empty.
struct GenPair {
  std::vector<std::string> context;
  const DatasetRecord* target = nullptr;
};

inline std::vector<GenPair> make_generator_pairs(const std::vector<DatasetRecord>& records) {
  std::vector<GenPair> pairs;
  pairs.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    GenPair p;
    p.target = &records[i];
    if (i > 0 && records[i - 1].author_id == records[i].author_id)
      p.context = records[i - 1].quatrain.flatten();
    pairs.push_back(std::move(p));
  }
  return pairs;
}

inline real generator_perplexity(const Generator& gen, const std::vector<GenPair>& pairs) {
  if (pairs.empty()) throw std::invalid_argument("generator_perplexity: empty dataset");
  NoGradGuard ng;
  real total = 0;
  long count = 0;
  for (const auto& p : pairs) {
    Conditioning c{p.target->author_id, p.target->scheme_id};
    auto [nll, n] = gen.sequence_nll(p.context, p.target->quatrain, c);
    total += nll->scalar();
    count += n;
  }
  return std::exp(total / static_cast<real>(count));
}

struct TrainReport {
  std::vector<real> epoch_loss;      // mean training NLL per token
  std::vector<real> epoch_val_ppl;   // empty slots = no validation set
  int steps = 0;
};

inline TrainReport train_generator(Generator& gen, const std::vector<GenPair>& train,
                                   const std::vector<GenPair>& val,
                                   const TrainOptions& opts, Adam* adam_inout = nullptr) {
  if (train.empty()) throw std::invalid_argument("train_generator: empty dataset");
  Adam local(opts.lr);
  Adam& adam = adam_inout ? *adam_inout : local;
  TrainReport report;
  Rng shuffle_rng(opts.shuffle_seed);
  real best_ppl = std::numeric_limits<real>::infinity();
  int bad_epochs = 0;
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.index(i)]);
    real epoch_nll = 0;
    long epoch_tokens = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(opts.batch_size)) {
      std::size_t stop = std::min(order.size(), start + opts.batch_size);
      gen.params().zero_grad();
      for (std::size_t k = start; k < stop; ++k) {
        const auto& p = train[order[k]];
        Conditioning c{p.target->author_id, p.target->scheme_id};
        auto [nll, n] = gen.sequence_nll(p.context, p.target->quatrain, c);
        epoch_nll += nll->scalar();
        epoch_tokens += n;
        // Per-token loss averaged over the batch.
        Value loss = scalar_mul(nll, real(1) / (n * static_cast<real>(stop - start)));
        backward(loss);
      }
      clip_grad_norm(gen.params(), opts.clip_norm);
      adam.step(gen.params());
      ++report.steps;
    }
    report.epoch_loss.push_back(epoch_nll / std::max<long>(1, epoch_tokens));
    if (!val.empty()) {
      real ppl = generator_perplexity(gen, val);
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

}  // namespace grn
