#pragma once

#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace grn {

// Flat key=value run configuration. Every tunable is addressable as a
// dotted key; unknown keys are rejected. Precedence: defaults < config
// file < command-line overrides, with GRNP_SEED trumping the seed.
class RunConfig {
 public:
  RunConfig() {
    // Defaults double as the known-key registry.
    set_default("seed", "1");
    set_default("threads", "1");
    set_default("workdir", ".");
    set_default("paths.corpus", "");
    set_default("paths.dict", "");
    set_default("paths.dataset", "");
    set_default("paths.gen_ckpt", "gen.grnp");
    set_default("paths.prompter_ckpt", "prompter.grnp");
    set_default("paths.detector_ckpt", "detector.grnp");
    set_default("paths.log", "");

    set_default("corpus.vocab_cap", "50000");
    set_default("corpus.max_len", "50");
    set_default("corpus.top_authors", "768");
    set_default("corpus.discard_abcd", "1");
    set_default("corpus.split_train", "0.903");
    set_default("corpus.split_val", "0.047");
    set_default("corpus.split_test", "0.050");

    set_default("gen.emb_dim", "300");
    set_default("gen.hidden", "512");
    set_default("gen.author_dim", "128");
    set_default("gen.scheme_dim", "256");
    set_default("gen.char_dim", "50");
    set_default("gen.char_hidden", "50");
    set_default("gen.r_char", "100");
    set_default("gen.use_author", "1");
    set_default("gen.use_scheme", "1");
    set_default("gen.gru_state_literal", "0");

    set_default("prompter.hidden", "1024");
    set_default("prompter.author_dim", "128");
    set_default("prompter.scheme_dim", "256");
    set_default("prompter.top_k", "50");
    set_default("prompter.use_author", "1");
    set_default("prompter.use_scheme", "1");

    set_default("det.mlp_hidden", "512");
    set_default("det.attn_dim", "256");
    set_default("det.author_dim", "128");
    set_default("det.scheme_dim", "256");
    set_default("det.n_max", "50");
    set_default("det.freeze_encoder", "1");

    set_default("train.epochs", "10");
    set_default("train.batch_size", "8");
    set_default("train.lr", "0.001");
    set_default("train.clip_norm", "5.0");
    set_default("train.patience", "3");

    set_default("rl.gamma", "0.99");
    set_default("rl.lambda", "0.95");
    set_default("rl.clip", "0.2");
    set_default("rl.epochs", "10");
    set_default("rl.kl_stop", "0.015");
    set_default("rl.minibatch", "64");
    set_default("rl.policy_lr", "0.0003");
    set_default("rl.value_lr", "0.001");
    set_default("rl.value_coef", "0.5");
    set_default("rl.entropy_coef", "0.0");
    set_default("rl.value_iters", "10");
    set_default("rl.volleys", "10");
    set_default("rl.episodes_per_volley", "1000");
    set_default("rl.steps_per_volley", "0");

    set_default("env.corrupt", "1");
    set_default("env.poems", "1");
    set_default("env.max_episode_len.reconstruction", "10");
    set_default("env.max_episode_len.rhyme", "30");
    set_default("env.nucleus_p", "0.9");
    set_default("env.schemes", "AABB,ABAB,ABBA");

    set_default("sample.nucleus_p", "0.9");
    set_default("sample.top_k", "50");
  }

  bool known(const std::string& key) const { return values_.count(key) > 0; }

  void set(const std::string& key, const std::string& value) {
    auto it = values_.find(key);
    if (it == values_.end())
      throw std::invalid_argument("unknown config key: " + key);
    it->second = value;
  }

  const std::string& get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end())
      throw std::invalid_argument("unknown config key: " + key);
    return it->second;
  }

  long get_int(const std::string& key) const {
    try {
      return std::stol(get(key));
    } catch (const std::exception&) {
      throw std::invalid_argument("config key " + key + " is not an integer: " + get(key));
    }
  }

  double get_real(const std::string& key) const {
    try {
      return std::stod(get(key));
    } catch (const std::exception&) {
      throw std::invalid_argument("config key " + key + " is not a number: " + get(key));
    }
  }

  bool get_bool(const std::string& key) const {
    const std::string& v = get(key);
    if (v == "1" || v == "true" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "no") return false;
    throw std::invalid_argument("config key " + key + " is not a boolean: " + v);
  }

  // key=value lines; '#' starts a comment; blank lines ignored.
  void load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file: " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos) continue;
      auto last = line.find_last_not_of(" \t\r");
      line = line.substr(first, last - first + 1);
      auto eq = line.find('=');
      if (eq == std::string::npos)
        throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                    ": expected key=value, got '" + line + "'");
      std::string key = line.substr(0, eq);
      std::string value = line.substr(eq + 1);
      while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) key.pop_back();
      auto vstart = value.find_first_not_of(" \t");
      value = vstart == std::string::npos ? "" : value.substr(vstart);
      set(key, value);
    }
  }

  // "key=value" strings from the command line.
  void apply_overrides(const std::vector<std::string>& overrides) {
    for (const auto& kv : overrides) {
      auto eq = kv.find('=');
      if (eq == std::string::npos)
        throw std::invalid_argument("expected key=value override, got '" + kv + "'");
      set(kv.substr(0, eq), kv.substr(eq + 1));
    }
  }

  // GRNP_SEED trumps everything else for the seed.
  void apply_env() {
    if (const char* s = std::getenv("GRNP_SEED")) set("seed", s);
  }

  // Fully resolved configuration, sorted, one key=value per line.
  void dump(std::ostream& os) const {
    for (const auto& [k, v] : values_) os << k << '=' << v << '\n';
  }

  std::string dump_string() const {
    std::ostringstream os;
    dump(os);
    return os.str();
  }

 private:
  void set_default(const std::string& key, const std::string& value) {
    values_[key] = value;
  }

  std::map<std::string, std::string> values_;
};

}  // namespace grn
