#include "doctest.h"

#include <random>

#include "support.hpp"
#include "xvoice/checkpoint.hpp"
#include "xvoice/training.hpp"

using namespace xvoice;

namespace {

struct Small {
  ToyWorld world = make_world({});
  std::vector<TrainingUtterance> utts;
  Small() {
    CorpusSpec spec;
    spec.utterances_per_lang = 24;
    spec.train_speakers_per_lang = 4;
    spec.heldout_speakers_per_lang = 0;
    utts = xvt::training_set(gen_corpus(world, spec).train, world);
  }
  Checkpoint init(std::uint64_t seed = 3) const {
    ModelDims dims;
    dims.hidden = 24;
    return init_checkpoint(world.vocab, world.languages, dims, true, seed);
  }
};

TrainConfig quick(int steps) {
  TrainConfig c;
  c.steps = steps;
  c.batch_size = 4;
  c.warmup_steps = steps / 5;
  c.seed = 17;
  return c;
}

}  // namespace

TEST_CASE("learning-rate schedule") {
  TrainConfig c;
  c.steps = 100;
  c.warmup_steps = 20;
  c.lr_peak = 1e-2;
  CHECK(learning_rate(0, c) == 0.0);
  CHECK(learning_rate(10, c) == doctest::Approx(5e-3));
  CHECK(learning_rate(20, c) == 1e-2);
  CHECK(learning_rate(60, c) == doctest::Approx(5e-3));
  CHECK(learning_rate(100, c) == 0.0);
  for (int s = 0; s < 100; ++s) {
    CHECK(learning_rate(s, c) <= learning_rate(20, c));
    CHECK(std::abs(learning_rate(s + 1, c) - learning_rate(s, c)) <= c.lr_peak / 20 + 1e-15);
  }
  c.warmup_steps = 0;
  CHECK(learning_rate(0, c) == c.lr_peak);
}

TEST_CASE("optimizer step with zero gradient and no decay is the identity") {
  xvt::MiniWorld w;
  const FieldNet net = xvt::perturbed_net(w, 2);
  FieldNetParams p = net.params;
  auto adam = init_adam(p);
  for (int i = 0; i < 3; ++i) adamw_step(p, zeros_like(p), adam, 1e-2, 0.0);
  for_each_tensor([](const char* name, const auto& a, const auto& b) { CHECK_MESSAGE(a == b, name); }, p, net.params);

  adamw_step(p, zeros_like(p), adam, 1e-2, 0.1);
  CHECK(p.w1 == (1.0 - 1e-3) * net.params.w1);
}

TEST_CASE("first optimizer step moves each weight by the learning rate") {
  xvt::MiniWorld w;
  const FieldNet net = xvt::perturbed_net(w, 4);
  FieldNetParams p = net.params, g = zeros_like(p);
  g.b_out.setConstant(3.0);
  g.w_out.setConstant(-0.25);
  auto adam = init_adam(p);
  adamw_step(p, g, adam, 0.5, 0.0);
  CHECK(((p.b_out - net.params.b_out).array() + 0.5).abs().maxCoeff() < 1e-6);
  CHECK(((p.w_out - net.params.w_out).array() - 0.5).abs().maxCoeff() < 1e-6);
}

TEST_CASE("condition drop frequencies") {
  TrainConfig c;
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const int n = 100000;
  int text = 0, none = 0;
  for (int i = 0; i < n; ++i) {
    const auto b = drop_branch(U(rng), c);
    text += b == Branch::text_only;
    none += b == Branch::unconditional;
  }
  auto within = [&](int k, double p) { return std::abs(k - n * p) <= 3.0 * std::sqrt(n * p * (1 - p)); };
  CHECK(within(text, c.cond_drop_audio_p));
  CHECK(within(none, c.cond_drop_all_p));
  TrainConfig bad;
  bad.cond_drop_audio_p = 0.7;
  bad.cond_drop_all_p = 0.4;
  CHECK_THROWS_AS(bad.validate(), RangeError);
}

TEST_CASE("training is reproducible and its first loss matches the saved initial checkpoint") {
  Small s;
  const auto init = s.init();
  const auto cfg = quick(12);
  const auto a = train_stage1(init, s.utts, cfg);
  const auto b = train_stage1(init, s.utts, cfg);
  CHECK(checkpoint_to_bytes(a.checkpoint) == checkpoint_to_bytes(b.checkpoint));
  CHECK(a.losses == b.losses);

  const auto reloaded = checkpoint_from_bytes(checkpoint_to_bytes(init));
  const auto batch = stage1_batch(reloaded, s.utts, cfg, 0);
  CHECK(batch_loss(reloaded.net, batch) == a.losses.front());
  CHECK(a.checkpoint.train_config == to_json(cfg));
}

TEST_CASE("stage-1 training lowers the loss") {
  Small s;
  auto cfg = quick(300);
  cfg.lr_peak = 4e-3;
  const auto r = train_stage1(s.init(), s.utts, cfg);
  const auto probe = stage1_batch(s.init(), s.utts, cfg, 0);
  CHECK(batch_loss(r.checkpoint.net, probe) < 0.6 * batch_loss(s.init().net, probe));
}

TEST_CASE("stage-2 batches and zero-step training") {
  Small s;
  std::vector<TrainingPair> pairs;
  std::mt19937_64 rng(1);
  for (std::size_t i = 0; i < 6; ++i) {
    const auto& u = s.utts[i];
    pairs.push_back({u.speaker, u.lid, xvt::rand_seq(10 + i, 8, rng), u.features, u.tokens});
  }
  auto cfg = quick(0);
  const auto init = s.init();
  CHECK(checkpoint_to_bytes(train_stage2(init, pairs, cfg).checkpoint) == checkpoint_to_bytes(init));

  cfg.steps = 1;
  for (int step = 0; step < 5; ++step) {
    for (const auto& item : stage2_batch(init, pairs, cfg, step)) {
      const auto& z = item.example.z;
      const int N = item.example.num_prompt_tokens;
      for (int k = 0; k < N; ++k) CHECK(z[k] == Vocabulary::kPrompt);
      CHECK(z[N] == Vocabulary::kEosPeriod);
      CHECK(z[N + 1] == Vocabulary::kEosSpace);
      CHECK(item.cond.time_lid == item.example.l[N + 2]);
    }
  }
  // The placeholder embedding learns.
  const auto r = train_stage2(init, pairs, cfg);
  CHECK(r.checkpoint.stage == Stage::s2);
  CHECK(r.checkpoint.net.params.token_embedding.row(Vocabulary::kPrompt) !=
        init.net.params.token_embedding.row(Vocabulary::kPrompt));
}

TEST_CASE("training errors") {
  Small s;
  CHECK_THROWS_WITH(train_stage1(s.init(), std::span<const TrainingUtterance>{}, quick(3)), "empty corpus");
  auto cfg = quick(3);
  cfg.lr_peak = 1e300;
  CHECK_THROWS_AS(train_stage1(s.init(), s.utts, cfg), NumericError);
}

TEST_CASE("checkpoint round trip") {
  Small s;
  const auto r = train_stage1(s.init(), s.utts, quick(3));
  const auto bytes = checkpoint_to_bytes(r.checkpoint);
  const auto back = checkpoint_from_bytes(bytes);
  CHECK(checkpoint_to_bytes(back) == bytes);
  CHECK(back.stage == Stage::s1);
  CHECK(back.net.dims == r.checkpoint.net.dims);
  CHECK(back.vocab.tokens() == r.checkpoint.vocab.tokens());
  CHECK(back.languages.codes() == r.checkpoint.languages.codes());
  for_each_tensor([](const char* name, const auto& a, const auto& b) { CHECK_MESSAGE(a == b, name); },
                  back.net.params, r.checkpoint.net.params);

  const auto path = std::filesystem::temp_directory_path() / "xvoice_test_roundtrip.ckpt";
  write_checkpoint(path, r.checkpoint);
  const auto loaded = read_checkpoint(path);
  CHECK(checkpoint_to_bytes(loaded) == bytes);
  // Training provenance travels in the sidecar.
  CHECK(loaded.train_config == r.checkpoint.train_config);
  std::filesystem::remove(path.string() + ".json");
  std::filesystem::remove(path);
  CHECK_THROWS(checkpoint_from_bytes(bytes.substr(0, bytes.size() / 2)));
  CHECK_THROWS(checkpoint_from_bytes("XVCKjunk"));
}

TEST_CASE("train config JSON") {
  TrainConfig c;
  c.steps = 77;
  c.seed = 123456789012345ull;
  c.cond_drop_all_p = 0.2;
  CHECK(to_json(train_config_from_json(to_json(c))) == to_json(c));
}
