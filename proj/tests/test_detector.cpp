#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "grn/detector.hpp"
#include "grn/gradcheck.hpp"
#include "support.hpp"

using namespace grn;

namespace {

std::shared_ptr<PoemEncoder> small_encoder(const Dataset& ds, Rng& rng) {
  PoemEncoderConfig cfg;
  cfg.emb_dim = 12;
  cfg.hidden = 16;
  cfg.r_char = 6;
  cfg.char_emb_dim = 5;
  cfg.char_hidden = 5;
  return std::make_shared<PoemEncoder>(cfg, ds.vocab, rng);
}

Detector small_detector(const Dataset& ds, std::shared_ptr<PoemEncoder> enc,
                        Rng& rng, bool freeze = true, int n_max = 30) {
  DetectorConfig cfg;
  cfg.num_authors = static_cast<int>(ds.authors.size());
  cfg.num_schemes = static_cast<int>(ds.schemes.size());
  cfg.author_dim = 4;
  cfg.scheme_dim = 4;
  cfg.mlp_hidden = 16;
  cfg.attn_dim = 8;
  cfg.n_max = n_max;
  cfg.freeze_encoder = freeze;
  return Detector(cfg, std::move(enc), rng);
}

// A 20-word state so the valid action count is 21.
EnvState twenty_word_state() {
  EnvState s;
  s.poem.verses = {{"the", "wind", "has", "turned", "chill"},
                   {"we", "wander", "far", "from", "play"},
                   {"a", "voice", "calls", "out", "ill"},
                   {"my", "heart", "will", "find", "way"}};
  s.cond = {1, 0};
  return s;
}

}  // namespace

TEST_CASE("policy output is a masked distribution") {
  Dataset ds = fixtures::desk_dataset(12, 51);
  Rng rng(1);
  Detector det = small_detector(ds, small_encoder(ds, rng), rng);
  EnvState s = twenty_word_state();
  PolicyOutput po = det.policy_forward(s);
  CHECK(po.valid_count == 21);
  REQUIRE(po.probs.size() == 31);
  real total = 0;
  for (int i = 0; i <= 30; ++i) {
    if (i < 20 || i == 30) {
      CHECK(po.mask[i]);
      CHECK(po.probs[i] > 0);
    } else {
      CHECK(!po.mask[i]);
      CHECK(po.probs[i] == real(0));
      CHECK(po.log_probs->data[i] == kMaskedLogProb);
    }
    total += po.probs[i];
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("uniform logits give a uniform valid-action distribution") {
  Dataset ds = fixtures::desk_dataset(12, 51);
  Rng rng(2);
  Detector det = small_detector(ds, small_encoder(ds, rng), rng);
  // Zero the MLP: logits identically 0 -> uniform over valid actions.
  for (const auto& p : det.all_params().items())
    if (p->name.rfind("det.mlp", 0) == 0)
      std::fill(p->data.begin(), p->data.end(), real(0));
  EnvState s = twenty_word_state();
  PolicyOutput po = det.policy_forward(s);
  for (int i = 0; i <= 30; ++i)
    if (po.mask[i]) CHECK(po.probs[i] == doctest::Approx(1.0 / 21).epsilon(1e-12));

  SUBCASE("sampled frequencies approach 1/21 within 0.005") {
    Rng draw(31);
    std::vector<long> hits(31, 0);
    const int N = 100000;
    for (int i = 0; i < N; ++i) ++hits[Detector::select_action(po, draw).first];
    for (int i = 0; i <= 30; ++i) {
      if (!po.mask[i]) {
        CHECK(hits[i] == 0);
        continue;
      }
      CHECK(std::abs(static_cast<double>(hits[i]) / N - 1.0 / 21) < 0.005);
    }
  }

  SUBCASE("entropy of the uniform policy equals ln 21") {
    auto er = det.evaluate(s, 0);
    CHECK(er.entropy->scalar() == doctest::Approx(std::log(21.0)).epsilon(1e-10));
  }
}

TEST_CASE("select_action reports the log-prob of the drawn action bitwise") {
  Dataset ds = fixtures::desk_dataset(12, 51);
  Rng rng(3);
  Detector det = small_detector(ds, small_encoder(ds, rng), rng);
  EnvState s = twenty_word_state();
  PolicyOutput po = det.policy_forward(s);
  Rng draw(7);
  for (int i = 0; i < 100; ++i) {
    auto [action, logp] = Detector::select_action(po, draw);
    CHECK(po.mask[action]);
    CHECK(logp == po.log_probs->data[action]);
  }
}

TEST_CASE("evaluate reproduces the acted log-prob and value") {
  Dataset ds = fixtures::desk_dataset(12, 51);
  Rng rng(4);
  Detector det = small_detector(ds, small_encoder(ds, rng), rng);
  EnvState s = twenty_word_state();
  Rng draw(9);
  ActResult ar = det.act(s, draw);
  EvalResult er = det.evaluate(s, ar.action);
  CHECK(er.log_prob->scalar() == ar.log_prob);
  CHECK(er.value->scalar() == ar.value);
  CHECK_THROWS_AS(det.evaluate(s, 25), std::invalid_argument);   // masked gap
  CHECK_THROWS_AS(det.evaluate(s, 31), std::invalid_argument);   // out of range
  CHECK_THROWS_AS(det.evaluate(s, -1), std::invalid_argument);
}

TEST_CASE("untrained policy entropy stays near uniform") {
  Dataset ds = fixtures::desk_dataset(12, 51);
  Rng rng(5);
  Detector det = small_detector(ds, small_encoder(ds, rng), rng);
  EnvState s = twenty_word_state();
  auto er = det.evaluate(s, 0);
  CHECK(er.entropy->scalar() >= 0.9 * std::log(21.0));
}

TEST_CASE("oversized poems are rejected") {
  Dataset ds = fixtures::desk_dataset(12, 51);
  Rng rng(6);
  Detector det = small_detector(ds, small_encoder(ds, rng), rng, true, 10);
  EnvState s = twenty_word_state();  // 20 words > n_max 10
  CHECK_THROWS_AS(det.policy_forward(s), std::invalid_argument);
}

TEST_CASE("frozen encoder caching is transparent") {
  Dataset ds = fixtures::desk_dataset(12, 51);
  Rng rng(7);
  auto enc = small_encoder(ds, rng);
  Detector det = small_detector(ds, enc, rng, true);
  EnvState s = twenty_word_state();
  PolicyOutput a = det.policy_forward(s);  // populates the cache
  PolicyOutput b = det.policy_forward(s);  // served from the cache
  CHECK(a.probs == b.probs);
  // The cached copy matches a fresh, uncached encoding.
  enc->invalidate_cache();
  PolicyOutput c = det.policy_forward(s);
  for (std::size_t i = 0; i < a.probs.size(); ++i)
    CHECK(c.probs[i] == doctest::Approx(a.probs[i]).epsilon(1e-12));
}

TEST_CASE("policy and value gradients pass the finite-difference check") {
  Dataset ds = fixtures::desk_dataset(6, 51);
  Rng rng(8);
  Detector det = small_detector(ds, small_encoder(ds, rng), rng, /*freeze=*/false);
  EnvState s;
  s.poem.verses = {{"the", "snow"}, {"we", "play"}, {"a", "way"}, {"to", "go"}};
  s.cond = {1, 0};
  real e1 = grad_check([&] { return det.evaluate(s, 3).log_prob; },
                       det.policy_params(), 1e-5, 8);
  CHECK(e1 <= 1e-4);
  real e2 = grad_check([&] { return det.evaluate(s, 3).value; },
                       det.value_params(), 1e-5, 8);
  CHECK(e2 <= 1e-4);
}

TEST_CASE("checkpoint round-trip preserves the policy distribution") {
  Dataset ds = fixtures::desk_dataset(12, 51);
  Rng rng(9);
  Detector det = small_detector(ds, small_encoder(ds, rng), rng);
  EnvState s = twenty_word_state();
  PolicyOutput before = det.policy_forward(s);
  std::string path = "/tmp/grn_det_test.ckpt";
  det.save(path);
  Rng rng2(777);
  Detector back = small_detector(ds, small_encoder(ds, rng2), rng2);
  back.load(path);
  PolicyOutput after = back.policy_forward(s);
  for (std::size_t i = 0; i < before.probs.size(); ++i)
    CHECK(after.probs[i] == doctest::Approx(before.probs[i]).epsilon(1e-4));
  std::remove(path.c_str());
}
