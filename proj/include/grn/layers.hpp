#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "grn/params.hpp"

namespace grn {

struct Linear {
  Value w, b;
  int in = 0, out = 0;

  Linear() = default;
  Linear(ParamSet& ps, const std::string& prefix, int in_dim, int out_dim, Rng& rng)
      : in(in_dim), out(out_dim) {
    w = ps.add(prefix + ".w", {out_dim, in_dim});
    b = ps.add(prefix + ".b", {out_dim});
    init_matrix(w, rng);
  }

  Value operator()(const Value& x) const { return add(matmul(w, x), b); }
};

struct LstmState {
  Value h, c;
};

// Standard LSTM cell; gate order in the stacked weight matrices is
// input, forget, candidate, output. Forget-gate bias starts at 1.
struct LstmCell {
  Value wx, wh, b;
  int in = 0, hidden = 0;

  LstmCell() = default;
  LstmCell(ParamSet& ps, const std::string& prefix, int in_dim, int hidden_dim, Rng& rng)
      : in(in_dim), hidden(hidden_dim) {
    wx = ps.add(prefix + ".wx", {4 * hidden_dim, in_dim});
    wh = ps.add(prefix + ".wh", {4 * hidden_dim, hidden_dim});
    b = ps.add(prefix + ".b", {4 * hidden_dim});
    init_matrix(wx, rng);
    init_matrix(wh, rng);
    for (int i = hidden_dim; i < 2 * hidden_dim; ++i) b->data[i] = real(1);
  }

  LstmState zero_state() const {
    return {make_tensor({hidden}), make_tensor({hidden})};
  }

  LstmState step(const Value& x, const LstmState& s) const {
    if (x->size() != in)
      throw std::invalid_argument("LstmCell: input dim " + shape_str(x->shape) +
                                  " does not match " + std::to_string(in));
    Value pre = add(add(matmul(wx, x), matmul(wh, s.h)), b);
    Value i = sigmoid_v(slice(pre, 0, hidden));
    Value f = sigmoid_v(slice(pre, hidden, hidden));
    Value g = tanh_v(slice(pre, 2 * hidden, hidden));
    Value o = sigmoid_v(slice(pre, 3 * hidden, hidden));
    Value c = add(mul(f, s.c), mul(i, g));
    Value h = mul(o, tanh_v(c));
    return {h, c};
  }
};

// GRU cell; gate order update, reset, candidate. h' = z*h + (1-z)*n.
struct GruCell {
  Value wx, wh, b;
  int in = 0, hidden = 0;

  GruCell() = default;
  GruCell(ParamSet& ps, const std::string& prefix, int in_dim, int hidden_dim, Rng& rng)
      : in(in_dim), hidden(hidden_dim) {
    wx = ps.add(prefix + ".wx", {3 * hidden_dim, in_dim});
    wh = ps.add(prefix + ".wh", {3 * hidden_dim, hidden_dim});
    b = ps.add(prefix + ".b", {3 * hidden_dim});
    init_matrix(wx, rng);
    init_matrix(wh, rng);
  }

  Value zero_state() const { return make_tensor({hidden}); }

  Value step(const Value& x, const Value& h) const {
    if (x->size() != in)
      throw std::invalid_argument("GruCell: input dim " + shape_str(x->shape) +
                                  " does not match " + std::to_string(in));
    Value px = matmul(wx, x);
    Value ph = matmul(wh, h);
    Value z = sigmoid_v(add(add(slice(px, 0, hidden), slice(ph, 0, hidden)),
                            slice(b, 0, hidden)));
    Value r = sigmoid_v(add(add(slice(px, hidden, hidden), slice(ph, hidden, hidden)),
                            slice(b, hidden, hidden)));
    Value n = tanh_v(add(add(slice(px, 2 * hidden, hidden),
                             mul(r, slice(ph, 2 * hidden, hidden))),
                         slice(b, 2 * hidden, hidden)));
    Value one_minus_z = sub(constant({hidden}, std::vector<real>(hidden, real(1))), z);
    return add(mul(z, h), mul(one_minus_z, n));
  }
};

struct EncoderOutput {
  // H[j] = [h_fwd_j ; h_bwd_j], each of dim 2*hidden.
  std::vector<Value> H;
  // Directional states including the initial ones:
  // fwd[j] = forward state after consuming tokens 0..j-1 (fwd[0] = init),
  // bwd[j] = backward state after consuming tokens n-1..j (bwd[n] = init).
  std::vector<Value> fwd, bwd;
};

// Bidirectional LSTM over a sequence of input vectors. Initial states are
// zero unless learned boundary states are configured.
struct BiLstm {
  LstmCell fwd_cell, bwd_cell;
  Value init_fwd_h, init_fwd_c, init_bwd_h, init_bwd_c;  // optional, learned
  int hidden = 0;

  BiLstm() = default;
  BiLstm(ParamSet& ps, const std::string& prefix, int in_dim, int hidden_dim,
         Rng& rng, bool learned_boundaries = false)
      : hidden(hidden_dim) {
    fwd_cell = LstmCell(ps, prefix + ".fwd", in_dim, hidden_dim, rng);
    bwd_cell = LstmCell(ps, prefix + ".bwd", in_dim, hidden_dim, rng);
    if (learned_boundaries) {
      init_fwd_h = ps.add(prefix + ".fwd.h0", {hidden_dim});
      init_fwd_c = ps.add(prefix + ".fwd.c0", {hidden_dim});
      init_bwd_h = ps.add(prefix + ".bwd.h0", {hidden_dim});
      init_bwd_c = ps.add(prefix + ".bwd.c0", {hidden_dim});
    }
  }

  EncoderOutput encode(const std::vector<Value>& inputs) const {
    if (inputs.empty())
      throw std::invalid_argument("BiLstm: empty input sequence");
    std::size_t n = inputs.size();
    EncoderOutput out;
    out.fwd.resize(n + 1);
    out.bwd.resize(n + 1);

    LstmState sf = init_fwd_h ? LstmState{init_fwd_h, init_fwd_c} : fwd_cell.zero_state();
    out.fwd[0] = sf.h;
    for (std::size_t j = 0; j < n; ++j) {
      sf = fwd_cell.step(inputs[j], sf);
      out.fwd[j + 1] = sf.h;
    }
    LstmState sb = init_bwd_h ? LstmState{init_bwd_h, init_bwd_c} : bwd_cell.zero_state();
    out.bwd[n] = sb.h;
    for (std::size_t j = n; j-- > 0;) {
      sb = bwd_cell.step(inputs[j], sb);
      out.bwd[j] = sb.h;
    }
    out.H.resize(n);
    for (std::size_t j = 0; j < n; ++j)
      out.H[j] = concat({out.fwd[j + 1], out.bwd[j]});
    return out;
  }
};

// Character-level bi-LSTM summary of a word, projected to r_char dims.
struct CharWordEncoder {
  Value char_emb;  // {char_vocab, char_emb_dim}
  BiLstm bilstm;
  Linear proj;  // {r_char, 2*char_hidden}
  int char_vocab = 0;

  CharWordEncoder() = default;
  CharWordEncoder(ParamSet& ps, const std::string& prefix, int char_vocab_size,
                  int char_emb_dim, int char_hidden, int r_char, Rng& rng)
      : char_vocab(char_vocab_size) {
    char_emb = ps.add(prefix + ".emb", {char_vocab_size, char_emb_dim});
    init_embedding(char_emb, rng);
    bilstm = BiLstm(ps, prefix + ".lstm", char_emb_dim, char_hidden, rng);
    proj = Linear(ps, prefix + ".proj", 2 * char_hidden, r_char, rng);
  }

  // char_ids must be non-empty; out-of-vocabulary ids are the caller's
  // responsibility (mapped to char-UNK upstream).
  Value encode(const std::vector<int>& char_ids) const {
    if (char_ids.empty())
      throw std::invalid_argument("CharWordEncoder: empty word");
    std::vector<Value> xs;
    xs.reserve(char_ids.size());
    for (int id : char_ids) xs.push_back(embedding_lookup(char_emb, id));
    EncoderOutput enc = bilstm.encode(xs);
    std::size_t n = char_ids.size();
    return proj(concat({enc.fwd[n], enc.bwd[0]}));
  }
};

struct AttentionResult {
  Value context;  // convex combination of the key vectors
  Value weights;  // softmax scores, length |H|
};

// Additive (Bahdanau-style) attention: e_j = v^T tanh(W q + U h_j).
struct AdditiveAttention {
  Value w, u, v;
  int score_dim = 0;

  AdditiveAttention() = default;
  AdditiveAttention(ParamSet& ps, const std::string& prefix, int query_dim,
                    int key_dim, int score_dim_, Rng& rng)
      : score_dim(score_dim_) {
    w = ps.add(prefix + ".w", {score_dim_, query_dim});
    u = ps.add(prefix + ".u", {score_dim_, key_dim});
    v = ps.add(prefix + ".v", {score_dim_});
    init_matrix(w, rng);
    init_matrix(u, rng);
    init_vector_uniform(v, rng, real(1) / std::sqrt(static_cast<real>(score_dim_)));
  }

  AttentionResult attend(const Value& query, const std::vector<Value>& keys) const {
    if (keys.empty())
      throw std::invalid_argument("AdditiveAttention: empty key set");
    Value wq = matmul(w, query);
    std::vector<Value> scores;
    scores.reserve(keys.size());
    for (const auto& h : keys) {
      Value t = tanh_v(add(wq, matmul(u, h)));
      scores.push_back(sum(mul(v, t)));
    }
    Value alpha = softmax(concat(scores));
    Value ctx;
    for (std::size_t j = 0; j < keys.size(); ++j) {
      Value term = mul(keys[j], broadcast(pick(alpha, static_cast<int>(j)), keys[j]->size()));
      ctx = ctx ? add(ctx, term) : term;
    }
    return {ctx, alpha};
  }

 private:
  static Value broadcast(const Value& s, int n) {
    auto out = make_tensor({n});
    for (int i = 0; i < n; ++i) out->data[i] = s->data[0];
    attach(out, {s}, [s, n, o = out.get()] {
      if (!s->requires_grad) return;
      real acc = 0;
      for (int i = 0; i < n; ++i) acc += o->grad[i];
      s->grad[0] += acc;
    });
    return out;
  }
};

// Single-hidden-layer MLP with tanh activation.
struct Mlp {
  Linear l1, l2;

  Mlp() = default;
  Mlp(ParamSet& ps, const std::string& prefix, int in_dim, int hidden_dim,
      int out_dim, Rng& rng) {
    l1 = Linear(ps, prefix + ".l1", in_dim, hidden_dim, rng);
    l2 = Linear(ps, prefix + ".l2", hidden_dim, out_dim, rng);
  }

  Value operator()(const Value& x) const { return l2(tanh_v(l1(x))); }
};

}  // namespace grn
