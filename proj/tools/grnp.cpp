// grnp: operator CLI — corpus ingestion, model training, RL experiments,
// generate-and-revise runs, and the gradient-check oracle.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "grn/config.hpp"
#include "grn/corpus.hpp"
#include "grn/detector.hpp"
#include "grn/env.hpp"
#include "grn/generator.hpp"
#include "grn/gradcheck.hpp"
#include "grn/prompter.hpp"
#include "grn/rhyme.hpp"
#include "grn/rl.hpp"

namespace fs = std::filesystem;
using namespace grn;

namespace {

// Exit code 1: usage/config errors; 2: runtime failures.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Ctx {
  RunConfig cfg;
  std::string workdir = ".";

  std::string path(const std::string& p) const {
    if (p.empty() || fs::path(p).is_absolute()) return p;
    return (fs::path(workdir) / p).string();
  }

  std::string input_path(const std::string& p, const std::string& what) const {
    std::string full = path(p);
    if (full.empty() || !fs::exists(full))
      throw UsageError(what + " not found: " + (full.empty() ? "(unset)" : full));
    return full;
  }

  std::uint64_t seed() const {
    return static_cast<std::uint64_t>(cfg.get_int("seed"));
  }
};

void log_resolved_config(const Ctx& ctx) {
  std::string log_path = ctx.cfg.get("paths.log");
  if (!log_path.empty()) {
    std::ofstream os(ctx.path(log_path));
    ctx.cfg.dump(os);
  }
  std::cerr << "-- resolved config --\n";
  ctx.cfg.dump(std::cerr);
  std::cerr << "---------------------\n";
}

GeneratorConfig generator_config(const RunConfig& c, const Dataset& ds) {
  GeneratorConfig g;
  g.emb_dim = static_cast<int>(c.get_int("gen.emb_dim"));
  g.hidden = static_cast<int>(c.get_int("gen.hidden"));
  g.author_dim = static_cast<int>(c.get_int("gen.author_dim"));
  g.scheme_dim = static_cast<int>(c.get_int("gen.scheme_dim"));
  g.r_char = static_cast<int>(c.get_int("gen.r_char"));
  g.char_emb_dim = static_cast<int>(c.get_int("gen.char_dim"));
  g.char_hidden = static_cast<int>(c.get_int("gen.char_hidden"));
  g.max_len = static_cast<int>(c.get_int("corpus.max_len"));
  g.use_author = c.get_bool("gen.use_author");
  g.use_scheme = c.get_bool("gen.use_scheme");
  g.gru_state_literal = c.get_bool("gen.gru_state_literal");
  g.num_authors = static_cast<int>(ds.authors.size());
  g.num_schemes = static_cast<int>(ds.schemes.size());
  return g;
}

PoemEncoderConfig encoder_config(const RunConfig& c) {
  PoemEncoderConfig e;
  e.emb_dim = static_cast<int>(c.get_int("gen.emb_dim"));
  e.hidden = static_cast<int>(c.get_int("prompter.hidden"));
  e.r_char = static_cast<int>(c.get_int("gen.r_char"));
  e.char_emb_dim = static_cast<int>(c.get_int("gen.char_dim"));
  e.char_hidden = static_cast<int>(c.get_int("gen.char_hidden"));
  return e;
}

PrompterConfig prompter_config(const RunConfig& c, const Dataset& ds) {
  PrompterConfig p;
  p.num_authors = static_cast<int>(ds.authors.size());
  p.num_schemes = static_cast<int>(ds.schemes.size());
  p.author_dim = static_cast<int>(c.get_int("prompter.author_dim"));
  p.scheme_dim = static_cast<int>(c.get_int("prompter.scheme_dim"));
  p.top_k = static_cast<int>(c.get_int("prompter.top_k"));
  p.use_author = c.get_bool("prompter.use_author");
  p.use_scheme = c.get_bool("prompter.use_scheme");
  return p;
}

DetectorConfig detector_config(const RunConfig& c, const Dataset& ds) {
  DetectorConfig d;
  d.num_authors = static_cast<int>(ds.authors.size());
  d.num_schemes = static_cast<int>(ds.schemes.size());
  d.author_dim = static_cast<int>(c.get_int("det.author_dim"));
  d.scheme_dim = static_cast<int>(c.get_int("det.scheme_dim"));
  d.mlp_hidden = static_cast<int>(c.get_int("det.mlp_hidden"));
  d.attn_dim = static_cast<int>(c.get_int("det.attn_dim"));
  d.n_max = static_cast<int>(c.get_int("det.n_max"));
  d.freeze_encoder = c.get_bool("det.freeze_encoder");
  return d;
}

TrainOptions train_options(const Ctx& ctx) {
  TrainOptions t;
  t.epochs = static_cast<int>(ctx.cfg.get_int("train.epochs"));
  t.batch_size = static_cast<int>(ctx.cfg.get_int("train.batch_size"));
  t.lr = static_cast<real>(ctx.cfg.get_real("train.lr"));
  t.clip_norm = static_cast<real>(ctx.cfg.get_real("train.clip_norm"));
  t.patience = static_cast<int>(ctx.cfg.get_int("train.patience"));
  t.shuffle_seed = ctx.seed();
  return t;
}

VolleyConfig volley_config(const Ctx& ctx, bool rhyme_env) {
  VolleyConfig v;
  v.episodes_per_volley = static_cast<int>(ctx.cfg.get_int("rl.episodes_per_volley"));
  v.steps_per_volley = static_cast<int>(ctx.cfg.get_int("rl.steps_per_volley"));
  if (v.steps_per_volley > 0) v.episodes_per_volley = 0;
  v.volleys = static_cast<int>(ctx.cfg.get_int("rl.volleys"));
  v.max_episode_len = static_cast<int>(ctx.cfg.get_int(
      rhyme_env ? "env.max_episode_len.rhyme" : "env.max_episode_len.reconstruction"));
  v.gamma = static_cast<real>(ctx.cfg.get_real("rl.gamma"));
  v.lambda = static_cast<real>(ctx.cfg.get_real("rl.lambda"));
  v.ppo_clip = static_cast<real>(ctx.cfg.get_real("rl.clip"));
  v.ppo_epochs = static_cast<int>(ctx.cfg.get_int("rl.epochs"));
  v.kl_stop = static_cast<real>(ctx.cfg.get_real("rl.kl_stop"));
  v.minibatch = static_cast<int>(ctx.cfg.get_int("rl.minibatch"));
  v.policy_lr = static_cast<real>(ctx.cfg.get_real("rl.policy_lr"));
  v.value_lr = static_cast<real>(ctx.cfg.get_real("rl.value_lr"));
  v.value_coef = static_cast<real>(ctx.cfg.get_real("rl.value_coef"));
  v.entropy_coef = static_cast<real>(ctx.cfg.get_real("rl.entropy_coef"));
  v.value_iters = static_cast<int>(ctx.cfg.get_int("rl.value_iters"));
  v.seed = ctx.seed();
  return v;
}

std::array<std::vector<DatasetRecord>, 3> configured_split(const Ctx& ctx,
                                                           const Dataset& ds) {
  return split_dataset(ds.records, ctx.cfg.get_real("corpus.split_train"),
                       ctx.cfg.get_real("corpus.split_val"),
                       ctx.cfg.get_real("corpus.split_test"), ctx.seed());
}

long read_step_meta(const std::string& ckpt_path) {
  std::ifstream is(ckpt_path + ".steps");
  long steps = 0;
  if (is >> steps) return steps;
  return 0;
}

void write_step_meta(const std::string& ckpt_path, long steps) {
  std::ofstream os(ckpt_path + ".steps");
  os << steps << '\n';
}

std::string format_quatrain(const Quatrain& q) {
  std::ostringstream os;
  for (const auto& verse : q.verses) {
    for (std::size_t i = 0; i < verse.size(); ++i) os << (i ? " " : "") << verse[i];
    os << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// ingest
// ---------------------------------------------------------------------------

int cmd_ingest(const Ctx& ctx) {
  std::string corpus_path = ctx.input_path(ctx.cfg.get("paths.corpus"), "corpus file");
  std::string dict_path = ctx.input_path(ctx.cfg.get("paths.dict"), "phonetic dictionary");
  std::string out_dir = ctx.path(ctx.cfg.get("paths.dataset"));
  if (out_dir.empty()) throw UsageError("ingest: output dataset directory not set");
  fs::create_directories(out_dir);

  auto corpus = parse_corpus_file(corpus_path);
  RhymeJudge judge(PhoneticDict::load(dict_path));
  IngestOptions opts;
  opts.vocab_cap = static_cast<int>(ctx.cfg.get_int("corpus.vocab_cap"));
  opts.max_len = static_cast<int>(ctx.cfg.get_int("corpus.max_len"));
  opts.top_authors = static_cast<int>(ctx.cfg.get_int("corpus.top_authors"));
  opts.discard_abcd = ctx.cfg.get_bool("corpus.discard_abcd");
  IngestStats stats;
  Dataset ds = build_dataset(corpus, judge, opts, &stats);
  save_dataset(ds, out_dir);

  std::cout << "quatrains kept: " << stats.quatrains_kept << '\n';
  std::cout << "quatrains discarded: " << stats.quatrains_discarded << '\n';
  std::cout << "vocab size: " << ds.vocab.size() << '\n';
  std::cout << "authors: " << ds.authors.size() << '\n';
  std::cout << "scheme histogram:\n";
  for (const auto& [scheme, n] : stats.scheme_histogram)
    std::cout << "  " << scheme << ' ' << n << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

int cmd_train(const Ctx& ctx, const std::string& model, const std::string& resume,
              const std::string& metrics_path) {
  Dataset ds = load_dataset(ctx.input_path(ctx.cfg.get("paths.dataset"), "dataset"));
  auto split = configured_split(ctx, ds);
  TrainOptions opts = train_options(ctx);
  Rng init_rng(ctx.seed());

  std::string metrics = ctx.path(metrics_path);
  std::ofstream csv;
  if (!metrics.empty()) {
    csv.open(metrics);
    if (!csv) throw std::runtime_error("cannot open metrics file " + metrics);
    csv << "epoch,steps,train_loss,val_ppl\n";
    csv.precision(17);
  }

  if (model == "gen") {
    std::string out = ctx.path(ctx.cfg.get("paths.gen_ckpt"));
    Generator gen(generator_config(ctx.cfg, ds), ds.vocab, init_rng);
    long prev_steps = 0;
    if (!resume.empty()) {
      gen.load(ctx.input_path(resume, "checkpoint"));
      prev_steps = read_step_meta(ctx.path(resume));
    }
    auto train_pairs = make_generator_pairs(split[0]);
    auto val_pairs = make_generator_pairs(split[1]);
    TrainReport rep = train_generator(gen, train_pairs, val_pairs, opts);
    gen.save(out);
    write_step_meta(out, prev_steps + rep.steps);
    long per_epoch = static_cast<long>(rep.steps / std::max<std::size_t>(1, rep.epoch_loss.size()));
    for (std::size_t e = 0; e < rep.epoch_loss.size(); ++e) {
      real ppl = e < rep.epoch_val_ppl.size() ? rep.epoch_val_ppl[e] : real(0);
      if (csv.is_open())
        csv << e << ',' << prev_steps + per_epoch * static_cast<long>(e + 1) << ','
            << rep.epoch_loss[e] << ',' << ppl << '\n';
      std::cout << "epoch " << e << " loss " << rep.epoch_loss[e] << " val_ppl "
                << ppl << '\n';
    }
    std::cout << "steps: " << prev_steps + rep.steps << '\n';
    return 0;
  }
  if (model == "prompter") {
    std::string out = ctx.path(ctx.cfg.get("paths.prompter_ckpt"));
    auto enc = std::make_shared<PoemEncoder>(encoder_config(ctx.cfg), ds.vocab, init_rng);
    Prompter prompter(prompter_config(ctx.cfg, ds), enc, init_rng);
    long prev_steps = 0;
    if (!resume.empty()) {
      prompter.load(ctx.input_path(resume, "checkpoint"));
      prev_steps = read_step_meta(ctx.path(resume));
    }
    PrompterTrainReport rep = train_prompter(prompter, split[0], split[1], opts);
    prompter.save(out);
    write_step_meta(out, prev_steps + rep.steps);
    long per_epoch = static_cast<long>(rep.steps / std::max<std::size_t>(1, rep.epoch_loss.size()));
    for (std::size_t e = 0; e < rep.epoch_loss.size(); ++e) {
      real ppl = e < rep.epoch_val_ppl.size() ? rep.epoch_val_ppl[e] : real(0);
      if (csv.is_open())
        csv << e << ',' << prev_steps + per_epoch * static_cast<long>(e + 1) << ','
            << rep.epoch_loss[e] << ',' << ppl << '\n';
      std::cout << "epoch " << e << " loss " << rep.epoch_loss[e] << " val_ppl "
                << ppl << '\n';
    }
    std::cout << "steps: " << prev_steps + rep.steps << '\n';
    return 0;
  }
  throw UsageError("train: unknown model '" + model + "' (expected gen or prompter)");
}

// ---------------------------------------------------------------------------
// rl
// ---------------------------------------------------------------------------

int cmd_rl(const Ctx& ctx, const std::string& env_name, const std::string& algo_name,
           int poems, bool poems_given, bool dynamic, const std::string& metrics_path) {
  if (dynamic && poems_given)
    throw UsageError("rl: --dynamic forbids --poems");
  if (dynamic && env_name != "rhyme")
    throw UsageError("rl: --dynamic requires --env rhyme");
  Algo algo;
  if (algo_name == "vpg")
    algo = Algo::Vpg;
  else if (algo_name == "ppo")
    algo = Algo::Ppo;
  else
    throw UsageError("rl: unknown algorithm '" + algo_name + "'");

  Dataset ds = load_dataset(ctx.input_path(ctx.cfg.get("paths.dataset"), "dataset"));
  bool rhyme = env_name == "rhyme";
  if (!rhyme && env_name != "reconstruction")
    throw UsageError("rl: unknown environment '" + env_name + "'");

  VolleyConfig vcfg = volley_config(ctx, rhyme);
  Rng init_rng(ctx.seed());

  std::string metrics = ctx.path(metrics_path);
  std::ofstream csv;
  if (!metrics.empty()) {
    csv.open(metrics);
    if (!csv) throw std::runtime_error("cannot open metrics file " + metrics);
    csv << volley_csv_header() << '\n';
  }
  std::string det_out = ctx.path(ctx.cfg.get("paths.detector_ckpt"));

  std::unique_ptr<Environment> env;
  std::unique_ptr<Generator> gen;
  std::unique_ptr<Prompter> prompter;
  std::unique_ptr<RhymeJudge> judge;

  auto enc = std::make_shared<PoemEncoder>(encoder_config(ctx.cfg), ds.vocab, init_rng);
  Detector detector(detector_config(ctx.cfg, ds), enc, init_rng);

  if (rhyme) {
    std::string gen_ckpt = ctx.cfg.get("paths.gen_ckpt");
    std::string pro_ckpt = ctx.cfg.get("paths.prompter_ckpt");
    if (gen_ckpt.empty() || !fs::exists(ctx.path(gen_ckpt)))
      throw UsageError("rl: rhyme environment requires a generator checkpoint");
    if (pro_ckpt.empty() || !fs::exists(ctx.path(pro_ckpt)))
      throw UsageError("rl: rhyme environment requires a prompter checkpoint");
    gen = std::make_unique<Generator>(generator_config(ctx.cfg, ds), ds.vocab, init_rng);
    gen->load(ctx.path(gen_ckpt));
    // The prompter shares the detector's encoder; its checkpoint restores
    // the shared weights.
    prompter = std::make_unique<Prompter>(prompter_config(ctx.cfg, ds), enc, init_rng);
    prompter->load(ctx.path(pro_ckpt));
    enc->invalidate_cache();
    judge = std::make_unique<RhymeJudge>(
        PhoneticDict::load(ctx.input_path(ctx.cfg.get("paths.dict"), "phonetic dictionary")));
    RhymeConfig rcfg;
    rcfg.pool_size = dynamic ? 0 : (poems_given ? poems : 10);
    rcfg.max_episode_len = vcfg.max_episode_len;
    rcfg.n_max = detector.config().n_max;
    rcfg.suggest_k = static_cast<int>(ctx.cfg.get_int("prompter.top_k"));
    rcfg.target_schemes.clear();
    {
      std::istringstream ss(ctx.cfg.get("env.schemes"));
      std::string s;
      while (std::getline(ss, s, ','))
        if (!s.empty()) rcfg.target_schemes.push_back(s);
    }
    SamplingStrategy strat =
        SamplingStrategy::nucleus(static_cast<real>(ctx.cfg.get_real("env.nucleus_p")));
    env = std::make_unique<RhymeEnv>(
        RhymeEnv::make(rcfg, *gen, *prompter, *judge, ds, strat));
  } else {
    int pool_n = poems_given ? poems : static_cast<int>(ctx.cfg.get_int("env.poems"));
    if (pool_n < 1 || pool_n > static_cast<int>(ds.records.size()))
      throw UsageError("rl: --poems out of range for this dataset");
    std::vector<ReconstructionPoolEntry> pool;
    for (int i = 0; i < pool_n; ++i)
      pool.push_back({ds.records[i].quatrain,
                      {ds.records[i].author_id, ds.records[i].scheme_id}});
    ReconstructionConfig rcfg;
    rcfg.corruptions = static_cast<int>(ctx.cfg.get_int("env.corrupt"));
    rcfg.max_episode_len = vcfg.max_episode_len;
    rcfg.n_max = detector.config().n_max;
    env = std::make_unique<ReconstructionEnv>(std::move(pool), rcfg,
                                              ds.vocab.unigram_weights(), ds.vocab);
  }

  auto rows = train_volleys(*env, detector, vcfg, algo,
                            [&](int volley, const VolleyRow& row) {
                              if (csv.is_open()) csv << to_csv(row) << '\n';
                              if (!det_out.empty()) detector.save(det_out);
                              std::cout << "volley " << volley << " mean_reward "
                                        << row.mean_reward << " episodes "
                                        << row.episodes << '\n';
                            });
  std::cout << "R first volley: " << rows.front().mean_reward << '\n';
  std::cout << "R last volley: " << rows.back().mean_reward << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// revise
// ---------------------------------------------------------------------------

int cmd_revise(const Ctx& ctx, const std::string& draft_path, bool generate,
               const std::string& scheme, int max_steps) {
  if (draft_path.empty() == !generate)
    throw UsageError("revise: exactly one of --draft and --generate is required");
  if (scheme.empty()) throw UsageError("revise: --scheme is required");

  Dataset ds = load_dataset(ctx.input_path(ctx.cfg.get("paths.dataset"), "dataset"));
  RhymeJudge judge(PhoneticDict::load(
      ctx.input_path(ctx.cfg.get("paths.dict"), "phonetic dictionary")));
  Rng init_rng(ctx.seed());
  Rng run_rng = init_rng.split();

  Generator gen(generator_config(ctx.cfg, ds), ds.vocab, init_rng);
  gen.load(ctx.input_path(ctx.cfg.get("paths.gen_ckpt"), "generator checkpoint"));
  auto enc = std::make_shared<PoemEncoder>(encoder_config(ctx.cfg), ds.vocab, init_rng);
  Prompter prompter(prompter_config(ctx.cfg, ds), enc, init_rng);
  prompter.load(ctx.input_path(ctx.cfg.get("paths.prompter_ckpt"), "prompter checkpoint"));
  Detector detector(detector_config(ctx.cfg, ds), enc, init_rng);
  detector.load(ctx.input_path(ctx.cfg.get("paths.detector_ckpt"), "detector checkpoint"));
  enc->invalidate_cache();

  Conditioning cond;
  cond.scheme_id = ds.scheme_id(scheme);

  Quatrain draft;
  if (generate) {
    SamplingStrategy strat =
        SamplingStrategy::nucleus(static_cast<real>(ctx.cfg.get_real("env.nucleus_p")));
    auto d = gen.generate_draft_retrying({}, cond, strat, run_rng);
    if (!d.well_formed) throw std::runtime_error("revise: draft generation failed");
    draft = d.poem;
  } else {
    std::ifstream is(ctx.input_path(draft_path, "draft file"));
    std::string line;
    while (std::getline(is, line)) {
      auto toks = tokenize(line);
      if (!toks.empty()) draft.verses.push_back(toks);
    }
    if (draft.verses.size() != 4)
      throw UsageError("revise: draft file must contain exactly 4 verses");
  }

  std::cout << "draft:\n" << format_quatrain(draft);
  EnvState state;
  state.poem = draft;
  state.cond = cond;
  int n_max = detector.config().n_max;
  std::vector<TraceStep> trace;
  bool matched = matches_scheme(judge, state.poem.end_words(), scheme);
  while (!matched && static_cast<int>(trace.size()) < max_steps) {
    ActResult a = detector.act(state, run_rng);
    TraceStep step;
    step.step = static_cast<int>(trace.size()) + 1;
    step.action = a.action;
    if (a.action < state.poem.word_count() && a.action != n_max) {
      step.changed_position = a.action;
      step.old_token = state.poem.word(a.action);
      std::string repl = prompter.suggest(state.poem, a.action, cond, run_rng);
      state.poem.set_word(a.action, repl);
      step.new_token = repl;
    }
    matched = matches_scheme(judge, state.poem.end_words(), scheme);
    step.reward = matched ? real(1) : real(-1);
    trace.push_back(step);
    std::cout << "step " << step << '\n';
  }
  std::cout << "final:\n" << format_quatrain(state.poem);
  std::cout << "steps: " << trace.size() << '\n';
  std::cout << "verdict: " << (matched ? "matched" : "unmatched") << ' ' << scheme << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// gradcheck
// ---------------------------------------------------------------------------

int cmd_gradcheck() {
  Rng rng(1234);
  bool all_ok = true;
  const real tol = 1e-4;

  auto report = [&](const std::string& op, real err) {
    bool ok = err <= tol;
    all_ok = all_ok && ok;
    std::cout << (ok ? "PASS" : "FAIL") << ' ' << op << " max_rel_err "
              << std::scientific << std::setprecision(3) << err << '\n';
    std::cout.unsetf(std::ios::scientific);
  };

  auto randomize = [&](ParamSet& ps) {
    for (const auto& p : ps.items())
      for (auto& v : p->data) v = rng.uniform(-0.7, 0.7);
  };

  // Elementary ops through a smooth scalar reduction.
  {
    ParamSet ps;
    Value a = ps.add("a", {5});
    Value b = ps.add("b", {5});
    randomize(ps);
    report("add", grad_check([&] { return sum(tanh_v(add(a, b))); }, ps));
    report("mul", grad_check([&] { return sum(tanh_v(mul(a, b))); }, ps));
    report("concat_slice",
           grad_check([&] { return sum(tanh_v(slice(concat({a, b}), 2, 6))); }, ps));
    report("sigmoid", grad_check([&] { return mean(sigmoid_v(mul(a, b))); }, ps));
    report("exp", grad_check([&] { return mean(exp_v(sub(a, b))); }, ps));
    report("softmax", grad_check([&] { return sum(mul(softmax(a), b)); }, ps));
    report("log_softmax", grad_check([&] { return pick(log_softmax(a), 2); }, ps));
    std::vector<bool> mask = {true, false, true, true, false};
    report("masked_log_softmax",
           grad_check([&] { return pick(masked_log_softmax(a, mask), 3); }, ps));
  }
  {
    ParamSet ps;
    Value m = ps.add("m", {4, 3});
    Value x = ps.add("x", {3});
    randomize(ps);
    report("matmul", grad_check([&] { return sum(tanh_v(matmul(m, x))); }, ps));
    report("embedding",
           grad_check([&] { return sum(tanh_v(embedding_lookup(m, 1))); }, ps));
  }
  {
    ParamSet ps;
    Linear lin(ps, "lin", 4, 3, rng);
    Value x = ps.add("x", {4});
    randomize(ps);
    report("linear", grad_check([&] { return sum(tanh_v(lin(x))); }, ps));
  }
  {
    ParamSet ps;
    LstmCell cell(ps, "lstm", 3, 4, rng);
    Value x0 = ps.add("x0", {3});
    Value x1 = ps.add("x1", {3});
    randomize(ps);
    report("lstm", grad_check(
                       [&] {
                         auto s = cell.step(x1, cell.step(x0, cell.zero_state()));
                         return sum(s.h);
                       },
                       ps));
  }
  {
    ParamSet ps;
    GruCell cell(ps, "gru", 3, 4, rng);
    Value x0 = ps.add("x0", {3});
    Value x1 = ps.add("x1", {3});
    randomize(ps);
    report("gru", grad_check(
                      [&] {
                        return sum(cell.step(x1, cell.step(x0, cell.zero_state())));
                      },
                      ps));
  }
  {
    ParamSet ps;
    BiLstm bi(ps, "bi", 3, 4, rng, /*learned_boundaries=*/true);
    Value x0 = ps.add("x0", {3});
    Value x1 = ps.add("x1", {3});
    Value x2 = ps.add("x2", {3});
    randomize(ps);
    report("bilstm", grad_check(
                         [&] {
                           auto enc = bi.encode({x0, x1, x2});
                           Value acc = sum(enc.H[0]);
                           for (std::size_t i = 1; i < enc.H.size(); ++i)
                             acc = add(acc, sum(enc.H[i]));
                           return acc;
                         },
                         ps, 1e-5, 16));
  }
  {
    ParamSet ps;
    CharWordEncoder cw(ps, "char", 6, 3, 4, 5, rng);
    randomize(ps);
    report("char_encoder",
           grad_check([&] { return sum(tanh_v(cw.encode({2, 4, 3}))); }, ps, 1e-5, 16));
  }
  {
    ParamSet ps;
    AdditiveAttention attn(ps, "attn", 3, 4, 5, rng);
    Value q = ps.add("q", {3});
    Value k0 = ps.add("k0", {4});
    Value k1 = ps.add("k1", {4});
    randomize(ps);
    report("attention",
           grad_check([&] { return sum(tanh_v(attn.attend(q, {k0, k1}).context)); }, ps));
  }
  {
    ParamSet ps;
    Mlp mlp(ps, "mlp", 4, 6, 3, rng);
    Value x = ps.add("x", {4});
    randomize(ps);
    report("mlp", grad_check([&] { return pick(log_softmax(mlp(x)), 1); }, ps));
  }
  // Policy log-prob and value through a full detector forward pass.
  {
    std::map<std::string, long> counts = {{"one", 5}, {"two", 4}, {"red", 3},
                                          {"blue", 2}, {"sky", 2}, {"hill", 1}};
    Vocab vocab = Vocab::build(counts);
    PoemEncoderConfig ecfg;
    ecfg.emb_dim = 6;
    ecfg.hidden = 5;
    ecfg.r_char = 4;
    ecfg.char_emb_dim = 3;
    ecfg.char_hidden = 3;
    auto enc = std::make_shared<PoemEncoder>(ecfg, vocab, rng);
    DetectorConfig dcfg;
    dcfg.author_dim = 4;
    dcfg.scheme_dim = 4;
    dcfg.mlp_hidden = 8;
    dcfg.attn_dim = 5;
    dcfg.n_max = 12;
    dcfg.freeze_encoder = false;
    Detector det(dcfg, enc, rng);
    EnvState state;
    state.poem.verses = {{"one", "two"}, {"red", "blue"}, {"sky"}, {"hill"}};
    report("policy_log_prob",
           grad_check([&] { return det.evaluate(state, 2).log_prob; },
                      det.all_params(), 1e-5, 8));
    report("policy_value",
           grad_check([&] { return det.evaluate(state, 2).value; },
                      det.all_params(), 1e-5, 8));
    // PPO clipped surrogate on the same policy, in its unclipped regime.
    real adv = 0.8;
    real logp_old;
    {
      NoGradGuard ng;
      logp_old = det.evaluate(state, 2).log_prob->data[0];
    }
    report("ppo_surrogate",
           grad_check(
               [&] {
                 Value ratio =
                     exp_v(sub(det.evaluate(state, 2).log_prob, scalar_const(logp_old)));
                 return scalar_mul(ratio, adv);
               },
               det.all_params(), 1e-5, 8));
    report("vpg_surrogate",
           grad_check(
               [&] {
                 return neg(scalar_mul(det.evaluate(state, 2).log_prob, adv));
               },
               det.all_params(), 1e-5, 8));
  }
  std::cout << (all_ok ? "all checks passed" : "checks FAILED") << '\n';
  return all_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"generate-and-revise poetry toolkit"};
  app.require_subcommand(1);

  Ctx ctx;
  std::string config_file;
  std::vector<std::string> overrides;
  long seed_flag = -1;
  int threads = 1;

  app.add_option("--workdir", ctx.workdir, "base directory for relative paths");
  app.add_option("--config", config_file, "key=value config file");
  app.add_option("--set", overrides, "config override key=value (repeatable)");
  app.add_option("--seed", seed_flag, "random seed");
  app.add_option("--threads", threads, "worker threads (1 = deterministic)");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "build a dataset from corpus files");
  std::string arg_corpus, arg_dict, arg_out;
  long arg_vocab_cap = -1, arg_max_len = -1, arg_top_authors = -1;
  bool arg_keep_abcd = false;
  ingest->add_option("--corpus", arg_corpus, "corpus text file");
  ingest->add_option("--dict", arg_dict, "phonetic dictionary file");
  ingest->add_option("--out", arg_out, "output dataset directory");
  ingest->add_option("--vocab-cap", arg_vocab_cap, "vocabulary cap");
  ingest->add_option("--max-len", arg_max_len, "quatrain truncation length");
  ingest->add_option("--top-authors", arg_top_authors, "author bucket count");
  ingest->add_flag("--keep-abcd", arg_keep_abcd, "keep ABCD quatrains");

  // train
  auto* train = app.add_subcommand("train", "train the generator or prompter");
  std::string arg_model, arg_data, arg_ckpt, arg_metrics, arg_resume;
  bool arg_no_author = false, arg_no_scheme = false;
  long arg_epochs = -1, arg_batch = -1;
  double arg_lr = -1;
  std::string arg_hidden;
  train->add_option("model", arg_model, "gen or prompter")->required();
  train->add_option("--data", arg_data, "dataset directory");
  train->add_option("--out", arg_ckpt, "output checkpoint");
  train->add_option("--metrics", arg_metrics, "metrics CSV path");
  train->add_option("--resume", arg_resume, "checkpoint to resume from");
  train->add_flag("--no-author", arg_no_author, "disable author conditioning");
  train->add_flag("--no-scheme", arg_no_scheme, "disable scheme conditioning");
  train->add_option("--epochs", arg_epochs, "training epochs");
  train->add_option("--batch", arg_batch, "minibatch size");
  train->add_option("--lr", arg_lr, "learning rate");
  train->add_option("--hidden", arg_hidden, "hidden size");

  // rl
  auto* rl = app.add_subcommand("rl", "run an RL experiment");
  std::string arg_env, arg_algo, arg_rl_data, arg_rl_metrics, arg_rl_out;
  std::string arg_gen_ckpt, arg_pro_ckpt, arg_rl_dict;
  long arg_poems = -1, arg_corrupt = -1, arg_volleys = -1, arg_episodes = -1,
       arg_steps = -1;
  bool arg_dynamic = false;
  rl->add_option("--env", arg_env, "reconstruction or rhyme")->required();
  rl->add_option("--algo", arg_algo, "vpg or ppo")->required();
  rl->add_option("--poems", arg_poems, "poem pool size");
  rl->add_option("--corrupt", arg_corrupt, "corruptions per episode");
  rl->add_flag("--dynamic", arg_dynamic, "fresh draft per episode (rhyme only)");
  rl->add_option("--data", arg_rl_data, "dataset directory");
  rl->add_option("--dict", arg_rl_dict, "phonetic dictionary file");
  rl->add_option("--gen-ckpt", arg_gen_ckpt, "generator checkpoint");
  rl->add_option("--prompter-ckpt", arg_pro_ckpt, "prompter checkpoint");
  rl->add_option("--out", arg_rl_out, "detector checkpoint output");
  rl->add_option("--metrics", arg_rl_metrics, "volley CSV path");
  rl->add_option("--volleys", arg_volleys, "number of volleys");
  rl->add_option("--episodes", arg_episodes, "episodes per volley");
  rl->add_option("--steps", arg_steps, "steps per volley");

  // revise
  auto* revise = app.add_subcommand("revise", "revise a draft toward a scheme");
  std::string arg_draft, arg_scheme, arg_rev_data, arg_rev_dict;
  std::string arg_rev_gen, arg_rev_pro, arg_rev_det;
  bool arg_generate = false;
  long arg_max_steps = 30;
  revise->add_option("--draft", arg_draft, "draft file (4 verses)");
  revise->add_flag("--generate", arg_generate, "generate the draft instead");
  revise->add_option("--scheme", arg_scheme, "target rhyme scheme");
  revise->add_option("--data", arg_rev_data, "dataset directory");
  revise->add_option("--dict", arg_rev_dict, "phonetic dictionary file");
  revise->add_option("--gen-ckpt", arg_rev_gen, "generator checkpoint");
  revise->add_option("--prompter-ckpt", arg_rev_pro, "prompter checkpoint");
  revise->add_option("--det-ckpt", arg_rev_det, "detector checkpoint");
  revise->add_option("--max-steps", arg_max_steps, "revision step cap");

  // gradcheck
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient oracle");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    try {
      if (!config_file.empty()) ctx.cfg.load_file(ctx.path(config_file));
      ctx.cfg.apply_overrides(overrides);
      if (seed_flag >= 0) ctx.cfg.set("seed", std::to_string(seed_flag));
      ctx.cfg.set("threads", std::to_string(threads));
      ctx.cfg.set("workdir", ctx.workdir);
      ctx.cfg.apply_env();

      if (*ingest) {
        if (!arg_corpus.empty()) ctx.cfg.set("paths.corpus", arg_corpus);
        if (!arg_dict.empty()) ctx.cfg.set("paths.dict", arg_dict);
        if (!arg_out.empty()) ctx.cfg.set("paths.dataset", arg_out);
        if (arg_vocab_cap >= 0) ctx.cfg.set("corpus.vocab_cap", std::to_string(arg_vocab_cap));
        if (arg_max_len >= 0) ctx.cfg.set("corpus.max_len", std::to_string(arg_max_len));
        if (arg_top_authors >= 0)
          ctx.cfg.set("corpus.top_authors", std::to_string(arg_top_authors));
        if (arg_keep_abcd) ctx.cfg.set("corpus.discard_abcd", "0");
        log_resolved_config(ctx);
        return cmd_ingest(ctx);
      }
      if (*train) {
        if (!arg_data.empty()) ctx.cfg.set("paths.dataset", arg_data);
        if (arg_epochs >= 0) ctx.cfg.set("train.epochs", std::to_string(arg_epochs));
        if (arg_batch >= 0) ctx.cfg.set("train.batch_size", std::to_string(arg_batch));
        if (arg_lr >= 0) ctx.cfg.set("train.lr", std::to_string(arg_lr));
        if (arg_model == "gen") {
          if (!arg_ckpt.empty()) ctx.cfg.set("paths.gen_ckpt", arg_ckpt);
          if (!arg_hidden.empty()) ctx.cfg.set("gen.hidden", arg_hidden);
          if (arg_no_author) ctx.cfg.set("gen.use_author", "0");
          if (arg_no_scheme) ctx.cfg.set("gen.use_scheme", "0");
        } else {
          if (!arg_ckpt.empty()) ctx.cfg.set("paths.prompter_ckpt", arg_ckpt);
          if (!arg_hidden.empty()) ctx.cfg.set("prompter.hidden", arg_hidden);
          if (arg_no_author) ctx.cfg.set("prompter.use_author", "0");
          if (arg_no_scheme) ctx.cfg.set("prompter.use_scheme", "0");
        }
        log_resolved_config(ctx);
        return cmd_train(ctx, arg_model, arg_resume, arg_metrics);
      }
      if (*rl) {
        if (!arg_rl_data.empty()) ctx.cfg.set("paths.dataset", arg_rl_data);
        if (!arg_rl_dict.empty()) ctx.cfg.set("paths.dict", arg_rl_dict);
        if (!arg_gen_ckpt.empty()) ctx.cfg.set("paths.gen_ckpt", arg_gen_ckpt);
        if (!arg_pro_ckpt.empty()) ctx.cfg.set("paths.prompter_ckpt", arg_pro_ckpt);
        if (!arg_rl_out.empty()) ctx.cfg.set("paths.detector_ckpt", arg_rl_out);
        if (arg_corrupt >= 0) ctx.cfg.set("env.corrupt", std::to_string(arg_corrupt));
        if (arg_volleys >= 0) ctx.cfg.set("rl.volleys", std::to_string(arg_volleys));
        if (arg_episodes >= 0)
          ctx.cfg.set("rl.episodes_per_volley", std::to_string(arg_episodes));
        if (arg_steps >= 0) ctx.cfg.set("rl.steps_per_volley", std::to_string(arg_steps));
        log_resolved_config(ctx);
        return cmd_rl(ctx, arg_env, arg_algo, static_cast<int>(arg_poems),
                      arg_poems >= 0, arg_dynamic, arg_rl_metrics);
      }
      if (*revise) {
        if (!arg_rev_data.empty()) ctx.cfg.set("paths.dataset", arg_rev_data);
        if (!arg_rev_dict.empty()) ctx.cfg.set("paths.dict", arg_rev_dict);
        if (!arg_rev_gen.empty()) ctx.cfg.set("paths.gen_ckpt", arg_rev_gen);
        if (!arg_rev_pro.empty()) ctx.cfg.set("paths.prompter_ckpt", arg_rev_pro);
        if (!arg_rev_det.empty()) ctx.cfg.set("paths.detector_ckpt", arg_rev_det);
        log_resolved_config(ctx);
        return cmd_revise(ctx, arg_draft, arg_generate, arg_scheme,
                          static_cast<int>(arg_max_steps));
      }
      if (*gradcheck) {
        log_resolved_config(ctx);
        return cmd_gradcheck();
      }
      throw UsageError("no subcommand given");
    } catch (const UsageError&) {
      throw;
    } catch (const std::invalid_argument& e) {
      // Config/validation errors surface as invalid_argument.
      throw UsageError(e.what());
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
