#include "doctest.h"

#include <filesystem>
#include <random>

#include "support.hpp"
#include "xvoice/checkpoint.hpp"
#include "xvoice/synth_pairs.hpp"

using namespace xvoice;

namespace {

struct Fixture {
  ToyWorld world = make_world({});
  ToyCorpus corpus;
  std::vector<RealUtterance> reals;
  Fixture() {
    CorpusSpec spec;
    spec.utterances_per_lang = 48;
    spec.train_speakers_per_lang = 6;
    spec.heldout_speakers_per_lang = 0;
    corpus = gen_corpus(world, spec);
    for (const auto& u : corpus.train) reals.push_back({u.record, u.features});
  }
  Checkpoint untrained() const {
    ModelDims dims;
    dims.hidden = 16;
    return init_checkpoint(world.vocab, world.languages, dims, true, 2);
  }
};

PairConfig small_budget(double hours) {
  PairConfig c;
  c.per_lang_budget_hours = hours;
  c.seed = 4;
  c.solver.nfe = 4;
  return c;
}

}  // namespace

TEST_CASE("pool text choice respects the length window") {
  PairConfig cfg;
  std::mt19937_64 rng(1);
  const std::vector<std::size_t> lens{3, 10, 12, 40};
  for (int i = 0; i < 50; ++i) {
    const auto k = pick_pool_text(lens, 10, cfg, rng);
    CHECK((k == 1 || k == 2));
  }
  // Nothing fits: closest in log ratio.
  CHECK(pick_pool_text({1, 100}, 20, cfg, rng) == 1);
  CHECK(pick_pool_text({1, 400}, 20, cfg, rng) == 0);
}

TEST_CASE("pair selection follows the ranking") {
  Fixture f;
  const auto ckpt = f.untrained();
  CHECK(make_pairs(ckpt, f.world.lexica, f.reals, f.corpus.text_pool, small_budget(0.0)).empty());

  std::vector<CorpusRecord> records;
  for (const auto& r : f.reals) records.push_back(r.record);
  const auto cfg = small_budget(0.005);
  const auto selected = rank_top_hours(records, cfg.per_lang_budget_hours);
  const auto pairs = make_pairs(ckpt, f.world.lexica, f.reals, f.corpus.text_pool, cfg);
  REQUIRE(pairs.size() == selected.size());
  REQUIRE(!pairs.empty());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    CHECK(pairs[i].id == selected[i].id);
    CHECK(pairs[i].speaker == selected[i].speaker);
    CHECK(pairs[i].target.num_frames() > 0);
    CHECK(pairs[i].prompt.dim() == 8);
    CHECK_FALSE(to_json(pairs[i]).contains("prompt_transcript"));
    CHECK_FALSE(to_json(pairs[i]).contains("transcript"));
  }
}

TEST_CASE("pairs are reproducible and independent of the job count") {
  Fixture f;
  const auto ckpt = f.untrained();
  auto cfg = small_budget(0.004);
  const auto a = make_pairs(ckpt, f.world.lexica, f.reals, f.corpus.text_pool, cfg);
  cfg.jobs = 3;
  const auto b = make_pairs(ckpt, f.world.lexica, f.reals, f.corpus.text_pool, cfg);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].target_transcript == b[i].target_transcript);
    CHECK(a[i].prompt.frames == b[i].prompt.frames);
  }
}

TEST_CASE("synthesis failures name the record") {
  Fixture f;
  auto ckpt = f.untrained();
  ckpt.stage = Stage::s2;
  CHECK_THROWS(make_pairs(ckpt, f.world.lexica, f.reals, f.corpus.text_pool, small_budget(0.01)));
  ckpt.stage = Stage::s1;
  TextPool empty;
  CHECK_THROWS(make_pairs(ckpt, f.world.lexica, f.reals, empty, small_budget(0.01)));
}

TEST_CASE("paired manifest round trip") {
  Fixture f;
  auto pairs = make_pairs(f.untrained(), f.world.lexica, f.reals, f.corpus.text_pool, small_budget(0.003));
  const auto dir = std::filesystem::temp_directory_path() / "xvoice_pairs_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  write_paired_manifest(dir / "pairs.jsonl", pairs, "feats");
  const auto back = read_paired_manifest(dir / "pairs.jsonl");
  REQUIRE(back.size() == pairs.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].id == pairs[i].id);
    CHECK(back[i].target_transcript == pairs[i].target_transcript);
    CHECK(back[i].prompt.frames == pairs[i].prompt.frames.cast<float>().cast<double>());
  }
  const auto tp = training_pairs(f.untrained(), f.world.lexica, back);
  CHECK(tp.size() == back.size());
  std::filesystem::remove_all(dir);
}

TEST_CASE("synthetic prompts keep the speaker of their real record") {
  Fixture f;
  TrainConfig tc;
  tc.steps = 400;
  tc.batch_size = 8;
  tc.warmup_steps = 40;
  tc.seed = 3;
  ModelDims dims;
  dims.hidden = 48;
  const auto s1 = train_stage1(init_checkpoint(f.world.vocab, f.world.languages, dims, true, 1),
                               xvt::training_set(f.corpus.train, f.world), tc)
                      .checkpoint;
  auto cfg = small_budget(0.02);
  cfg.solver.nfe = 16;
  const auto pairs = make_pairs(s1, f.world.lexica, f.reals, f.corpus.text_pool, cfg);
  REQUIRE(pairs.size() >= 20);

  const auto embed = toy_scorers(f.world).embedder;
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<std::size_t> pick(0, f.reals.size() - 1);
  int wins = 0, trials = 0;
  for (const auto& p : pairs) {
    const Eigen::VectorXd s = embed(p.prompt);
    const double own = s.dot(embed(p.target));
    for (int k = 0; k < 10; ++k) {
      const auto& other = f.reals[pick(rng)];
      if (other.record.speaker == p.speaker) continue;
      ++trials;
      wins += own >= s.dot(embed(other.features));
    }
  }
  MESSAGE("speaker consistency " << wins << "/" << trials);
  CHECK(wins >= 0.85 * trials);
}
