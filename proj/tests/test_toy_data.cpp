#include "doctest.h"

#include <set>

#include "support.hpp"
#include "xvoice/toy_data.hpp"

using namespace xvoice;

TEST_CASE("noiseless utterances are prototype plus offset") {
  ToyWorldSpec spec;
  spec.noise_sigma = 0.0;
  const auto world = make_world(spec);
  const auto u = gen_utterance(world, "toyA", "spk", "pata lisu", 3);
  const auto off = speaker_offset(world, "spk");
  const int fpt = spec.frames_per_token;
  REQUIRE(u.features.num_frames() == static_cast<Eigen::Index>(u.tokens.size()) * fpt);
  for (std::size_t j = 0; j < u.tokens.size(); ++j) {
    const Eigen::RowVectorXd want = (world.prototype("toyA", u.tokens[j]) + off).transpose();
    for (int k = 0; k < fpt; ++k) CHECK(u.features.frames.row(j * fpt + k) == want);
  }
  const auto probe = probe_language(world, u.features, u.tokens, "toyA", off);
  CHECK(probe.rate() == 1.0);
  CHECK(probe.mean_distance() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK((estimate_offset(world, u.features, u.tokens, "toyA") - off).norm() < 1e-12);
}

TEST_CASE("generation is reproducible") {
  const auto w1 = make_world({}), w2 = make_world({});
  CHECK(w1.prototypes == w2.prototypes);
  const auto a = gen_utterance(w1, "toyB", "s", "lomi", 9), b = gen_utterance(w2, "toyB", "s", "lomi", 9);
  CHECK(a.features.frames == b.features.frames);
  CHECK(to_json(a.record) == to_json(b.record));
  CHECK(gen_utterance(w1, "toyB", "s", "lomi", 10).features.frames != a.features.frames);
}

TEST_CASE("per-token means converge to the prototype") {
  const auto world = make_world({});
  const auto off = speaker_offset(world, "lln");
  const int n = 1000;
  const auto first = gen_utterance(world, "toyA", "lln", "pata", 0);
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(first.tokens.size(), world.spec.dim);
  for (int i = 0; i < n; ++i) {
    const auto u = gen_utterance(world, "toyA", "lln", "pata", 1000 + i);
    for (std::size_t j = 0; j < u.tokens.size(); ++j) {
      sum.row(j) += u.features.frames.middleRows(j * 4, 4).colwise().mean();
    }
  }
  // Each token mean averages 4n independent draws.
  const double bound = 3.0 * world.spec.noise_sigma / std::sqrt(4.0 * n);
  for (std::size_t j = 0; j < first.tokens.size(); ++j) {
    const Eigen::VectorXd mean = sum.row(j).transpose() / n;
    const Eigen::VectorXd want = world.prototype("toyA", first.tokens[j]) + off;
    CHECK((mean - want).cwiseAbs().maxCoeff() <= bound);
  }
}

TEST_CASE("shared units differ across languages by more than four noise sigmas") {
  const auto world = make_world({});
  int shared = 0;
  for (const auto& [key, proto] : world.prototypes) {
    for (const auto& other : world.rivals(key.first, key.second)) {
      ++shared;
      CHECK((proto - world.prototype(other, key.second)).norm() > 4.0 * world.spec.noise_sigma);
    }
  }
  CHECK(shared > 10);
}

TEST_CASE("corpus generation") {
  const auto world = make_world({});
  CorpusSpec empty;
  empty.utterances_per_lang = 0;
  empty.heldout_speakers_per_lang = 0;
  const auto none = gen_corpus(world, empty);
  CHECK(none.train.empty());
  CHECK(none.heldout.empty());

  CorpusSpec spec;
  spec.utterances_per_lang = 30;
  spec.train_speakers_per_lang = 5;
  spec.heldout_speakers_per_lang = 3;
  const auto c = gen_corpus(world, spec);
  std::map<std::string, int> per_lang;
  std::set<std::string> train_spk, held_spk, ids;
  for (const auto& u : c.train) {
    ++per_lang[u.record.lang];
    train_spk.insert(u.record.speaker);
    CHECK(ids.insert(u.record.id).second);
  }
  for (const auto& u : c.heldout) {
    held_spk.insert(u.record.speaker);
    CHECK(ids.insert(u.record.id).second);
  }
  CHECK(per_lang == std::map<std::string, int>{{"toyA", 30}, {"toyB", 30}});
  CHECK(train_spk.size() == 10);
  CHECK(held_spk.size() == 6);
  for (const auto& s : held_spk) CHECK(train_spk.count(s) == 0);
  CHECK(c.heldout.size() == 6 * 2);
  CHECK(c.text_pool.at("toyA").size() == 64);

  const auto again = gen_corpus(world, spec);
  REQUIRE(again.train.size() == c.train.size());
  for (std::size_t i = 0; i < c.train.size(); ++i) CHECK(again.train[i].features.frames == c.train[i].features.frames);
}

TEST_CASE("language detector and toy scorers") {
  const auto world = make_world({});
  CorpusSpec spec;
  spec.utterances_per_lang = 10;
  const auto c = gen_corpus(world, spec);
  for (const auto& u : c.train) CHECK(detect_language(world, u.record.transcript) == u.record.lang);
  CHECK(detect_language(world, "qqq zzz") == "und");
  const auto s = toy_scorers(world);
  CHECK(s.embedder(c.train[0].features).norm() == doctest::Approx(1.0));
  CHECK(s.quality_scorer(c.train[0].features) >= 1.0);
}

TEST_CASE("world spec round trip") {
  ToyWorldSpec spec;
  spec.seed = 42;
  spec.languages = {"toyA", "toyZ"};
  spec.noise_sigma = 0.1;
  const auto back = toy_world_spec_from_json(to_json(spec));
  CHECK(to_json(back) == to_json(spec));
  CHECK_THROWS(make_world(toy_world_spec_from_json({{"languages", {"nope"}}})));
  const auto z = make_world(back);
  CHECK(z.languages.size() == 3);
}
