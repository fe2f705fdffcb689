#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "grn/generator.hpp"
#include "grn/prompter.hpp"
#include "grn/rhyme.hpp"
#include "grn/rl_types.hpp"

namespace grn {

// One line of a qualitative episode trace.
struct TraceStep {
  int step = 0;
  int action = 0;
  int changed_position = -1;  // -1 = no change / do-nothing
  std::string old_token;
  std::string new_token;
  real reward = 0;
};

inline std::ostream& operator<<(std::ostream& os, const TraceStep& t) {
  os << t.step << '\t' << t.action << '\t' << t.changed_position << '\t'
     << (t.old_token.empty() ? "-" : t.old_token) << '\t'
     << (t.new_token.empty() ? "-" : t.new_token) << '\t' << t.reward;
  return os;
}

// ---------------------------------------------------------------------------
// Poem corruption (reconstruction task)
// ---------------------------------------------------------------------------

// Replaces exactly k distinct word positions with unigram-frequency-weighted
// samples from the vocabulary; a replacement always differs from the
// original word at its position.
inline std::pair<Quatrain, std::vector<int>> corrupt_poem(
    const Quatrain& poem, int k, const std::vector<double>& freq_weights,
    const Vocab& vocab, Rng& rng) {
  int n = poem.word_count();
  if (k < 1 || k > n)
    throw std::invalid_argument("corrupt_poem: k=" + std::to_string(k) +
                                " out of range for a " + std::to_string(n) +
                                "-word poem");
  std::vector<int> positions(n);
  std::iota(positions.begin(), positions.end(), 0);
  for (int i = 0; i < k; ++i)
    std::swap(positions[i], positions[i + static_cast<int>(rng.index(n - i))]);
  positions.resize(k);
  std::sort(positions.begin(), positions.end());

  Quatrain corrupted = poem;
  std::vector<real> weights(freq_weights.begin(), freq_weights.end());
  for (int pos : positions) {
    const std::string& original = corrupted.word(pos);
    for (int attempt = 0;; ++attempt) {
      int id = static_cast<int>(rng.categorical(weights));
      if (vocab.token(id) != original) {
        corrupted.set_word(pos, vocab.token(id));
        break;
      }
      if (attempt > 10000)
        throw std::runtime_error("corrupt_poem: cannot draw a differing word");
    }
  }
  return {corrupted, positions};
}

// ---------------------------------------------------------------------------
// Reconstruction environment (oracle prompter)
// ---------------------------------------------------------------------------

struct ReconstructionPoolEntry {
  Quatrain poem;
  Conditioning cond;
};

struct ReconstructionConfig {
  int corruptions = 1;
  int max_episode_len = 10;
  int n_max = 50;  // do-nothing action index
};

// Episodes start from a freshly corrupted pool poem; picking a corrupted
// position restores the original word, picking a correct one changes
// nothing. Goal: the full token sequence equals the original.
class ReconstructionEnv : public Environment {
 public:
  ReconstructionEnv(std::vector<ReconstructionPoolEntry> pool,
                    ReconstructionConfig cfg, std::vector<double> freq_weights,
                    const Vocab& vocab)
      : pool_(std::move(pool)), cfg_(cfg),
        freq_weights_(std::move(freq_weights)), vocab_(&vocab) {
    if (pool_.empty())
      throw std::invalid_argument("ReconstructionEnv: empty poem pool");
  }

  EnvState reset(Rng& rng) override {
    current_index_ = rng.index(pool_.size());
    const auto& entry = pool_[current_index_];
    auto [corrupted, _] =
        corrupt_poem(entry.poem, cfg_.corruptions, freq_weights_, *vocab_, rng);
    EnvState s;
    s.poem = std::move(corrupted);
    s.cond = entry.cond;
    return s;
  }

  StepResult step(const EnvState& state, int action, Rng&) override {
    const Quatrain& original = pool_[current_index_].poem;
    int n = state.poem.word_count();
    if (action < 0 || action > cfg_.n_max || (action >= n && action != cfg_.n_max))
      throw std::invalid_argument("ReconstructionEnv: invalid action " +
                                  std::to_string(action));
    StepResult out;
    out.state = state;
    ++out.state.step;
    if (action < n)  // oracle replacement: restore the original word
      out.state.poem.set_word(action, original.word(action));
    bool at_goal = out.state.poem == original;
    out.reward = at_goal ? real(1) : real(-1);
    out.done = at_goal || out.state.step >= cfg_.max_episode_len;
    return out;
  }

  int max_positions() const override { return cfg_.n_max; }
  int max_episode_len() const override { return cfg_.max_episode_len; }

  const Quatrain& current_original() const { return pool_[current_index_].poem; }

 private:
  std::vector<ReconstructionPoolEntry> pool_;
  ReconstructionConfig cfg_;
  std::vector<double> freq_weights_;
  const Vocab* vocab_;
  std::size_t current_index_ = 0;
};

// ---------------------------------------------------------------------------
// Rhyme-matching environment (full generate-and-revise)
// ---------------------------------------------------------------------------

struct RhymeConfig {
  int pool_size = 0;        // 0 = dynamic mode (fresh draft every reset)
  int max_episode_len = 30;
  int n_max = 50;
  int suggest_k = 50;
  int draft_retries = 5;
  int goal_resamples = 20;  // re-draft attempts when starting at the goal
  std::vector<std::string> target_schemes = {"AABB", "ABAB", "ABBA"};
};

// Episodes start from generator drafts; replacements come from the
// prompter; goal is matching the target rhyme scheme of the episode.
// Draft and suggestion providers are injectable so tests can use
// deterministic stand-ins.
class RhymeEnv : public Environment {
 public:
  // nullopt = a well-formed draft could not be produced.
  using DraftFn = std::function<std::optional<std::pair<Quatrain, Conditioning>>(Rng&)>;
  using SuggestFn =
      std::function<std::string(const Quatrain&, int, const Conditioning&, Rng&)>;

  RhymeEnv(RhymeConfig cfg, const RhymeJudge& judge,
           std::vector<std::string> scheme_labels, DraftFn draft, SuggestFn suggest)
      : cfg_(cfg), judge_(&judge), scheme_labels_(std::move(scheme_labels)),
        draft_(std::move(draft)), suggest_(std::move(suggest)) {
    if (scheme_labels_.empty())
      throw std::invalid_argument("RhymeEnv: no scheme labels");
  }

  static RhymeEnv make(RhymeConfig cfg, const Generator& generator,
                       Prompter& prompter, const RhymeJudge& judge,
                       const Dataset& dataset,
                       SamplingStrategy draft_strategy = SamplingStrategy::nucleus(0.9)) {
    if (cfg.target_schemes.empty())
      throw std::invalid_argument("RhymeEnv: no target schemes configured");
    std::vector<int> scheme_ids;
    for (const auto& s : cfg.target_schemes) scheme_ids.push_back(dataset.scheme_id(s));
    int num_authors = static_cast<int>(dataset.authors.size());
    int n_max = cfg.n_max;
    int retries = cfg.draft_retries;
    DraftFn draft = [&generator, scheme_ids, num_authors, n_max, retries,
                     draft_strategy](Rng& rng)
        -> std::optional<std::pair<Quatrain, Conditioning>> {
      Conditioning cond;
      cond.scheme_id = scheme_ids[rng.index(scheme_ids.size())];
      cond.author_id = static_cast<int>(rng.index(num_authors));
      auto d = generator.generate_draft_retrying({}, cond, draft_strategy, rng, retries);
      if (!d.well_formed || d.poem.word_count() > n_max) return std::nullopt;
      return std::make_pair(std::move(d.poem), cond);
    };
    int k = cfg.suggest_k;
    SuggestFn suggest = [&prompter, k](const Quatrain& o, int word_index,
                                       const Conditioning& cond, Rng& rng) {
      return prompter.suggest(o, word_index, cond, rng, k);
    };
    return RhymeEnv(cfg, judge, dataset.schemes, std::move(draft), std::move(suggest));
  }

  // Pool mode pre-generates its drafts with a dedicated rng.
  void build_pool(Rng& rng) {
    pool_.clear();
    for (int i = 0; i < cfg_.pool_size; ++i) {
      auto entry = make_draft(rng);
      if (entry) pool_.push_back(*entry);
    }
    if (cfg_.pool_size > 0 && pool_.empty())
      throw std::runtime_error("RhymeEnv: could not generate any pool drafts");
  }

  EnvState reset(Rng& rng) override {
    for (int attempt = 0; attempt <= cfg_.goal_resamples; ++attempt) {
      std::optional<PoolEntry> entry;
      if (cfg_.pool_size > 0) {
        if (pool_.empty()) build_pool(rng);
        entry = pool_[rng.index(pool_.size())];
      } else {
        entry = make_draft(rng);
        if (!entry)
          throw EpisodeFault("draft generation retries exhausted");
      }
      EnvState s;
      s.poem = entry->first;
      s.cond = entry->second;
      if (!matches(s))
        return s;
      if (attempt == cfg_.goal_resamples) {
        s.starts_at_goal = true;  // accept; first step terminates at +1
        return s;
      }
    }
    throw EpisodeFault("unreachable");
  }

  StepResult step(const EnvState& state, int action, Rng& rng) override {
    StepResult out;
    out.state = state;
    ++out.state.step;
    if (state.starts_at_goal) {
      out.reward = 1;
      out.done = true;
      return out;
    }
    int n = state.poem.word_count();
    if (action < 0 || action > cfg_.n_max || (action >= n && action != cfg_.n_max))
      throw std::invalid_argument("RhymeEnv: invalid action " + std::to_string(action));
    if (action < n) {
      std::string replacement = suggest_(out.state.poem, action, state.cond, rng);
      out.state.poem.set_word(action, replacement);
    }
    bool at_goal = matches(out.state);
    out.reward = at_goal ? real(1) : real(-1);
    out.done = at_goal || out.state.step >= cfg_.max_episode_len;
    return out;
  }

  int max_positions() const override { return cfg_.n_max; }
  int max_episode_len() const override { return cfg_.max_episode_len; }

  const std::string& scheme_label(int scheme_id) const {
    return scheme_labels_.at(static_cast<std::size_t>(scheme_id));
  }

  bool matches(const EnvState& s) const {
    return matches_scheme(*judge_, s.poem.end_words(), scheme_label(s.cond.scheme_id));
  }

  const std::vector<std::pair<Quatrain, Conditioning>>& pool() const { return pool_; }

 private:
  using PoolEntry = std::pair<Quatrain, Conditioning>;

  std::optional<PoolEntry> make_draft(Rng& rng) { return draft_(rng); }

  RhymeConfig cfg_;
  const RhymeJudge* judge_;
  std::vector<std::string> scheme_labels_;
  DraftFn draft_;
  SuggestFn suggest_;
  std::vector<PoolEntry> pool_;
};

}  // namespace grn
