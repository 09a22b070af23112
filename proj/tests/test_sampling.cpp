#include "doctest.h"

#include <random>

#include "support.hpp"
#include "xvoice/checkpoint.hpp"
#include "xvoice/sampling.hpp"

using namespace xvoice;

namespace {

struct Fixture {
  ToyWorld world = make_world({});
  Checkpoint ckpt;
  ToyUtterance prompt;
  std::vector<int> target;
  Fixture() {
    ModelDims dims;
    dims.hidden = 16;
    ckpt = init_checkpoint(world.vocab, world.languages, dims, true, 5);
    // Move the LID paths off their no-op init so language matters.
    std::mt19937_64 rng(6);
    auto& inj = ckpt.net.params.injection;
    inj.time_weight_lid = xvt::randn(inj.time_weight_lid.rows(), inj.time_weight_lid.cols(), rng, 0.3);
    inj.film_beta_weight = xvt::randn(inj.film_beta_weight.rows(), inj.film_beta_weight.cols(), rng, 0.3);
    prompt = gen_utterance(world, "toyA", "spk", "pata mena", 1);
    target = encode(world.vocab, tokenize(world.lexica.at("toyB"), "lomi atik sutal"));
  }
  SampleRequest request() const {
    return {prompt.features, encode(world.vocab, prompt.tokens), world.languages.lookup("toyA"), target,
            world.languages.lookup("toyB")};
  }
};

}  // namespace

TEST_CASE("target duration rules") {
  Fixture f;
  auto req = f.request();
  const int t1 = static_cast<int>(f.prompt.features.num_frames());
  const auto m = static_cast<double>(req.target_tokens.size());
  CHECK(m == 18);
  CHECK(target_frame_count(f.ckpt, req) == std::lround(t1 * m / static_cast<double>(req.prompt_tokens->size())));
  auto s2 = f.ckpt;
  s2.stage = Stage::s2;
  CHECK(target_frame_count(s2, req) == 18 * 4);
  req.target_tokens.clear();
  CHECK_THROWS(target_frame_count(f.ckpt, req));
}

TEST_CASE("zero guidance is plain Euler over the full-condition field") {
  Fixture f;
  GuidanceConfig g;
  g.mode = GuidanceMode::decoupled;
  g.w_acoustic_start = 0.0;
  g.w_linguistic_start = 0.0;
  SolverConfig solver;
  const auto req = f.request();
  const auto out = sample(f.ckpt, req, g, solver, 99);

  const auto ex = inference_layout(f.ckpt, req);
  const auto cond = make_condition(ex);
  std::mt19937_64 rng(99);
  std::normal_distribution<double> normal(0.0, 1.0);
  FeatureSequence x0 = FeatureSequence::zeros(ex.target_frames(), 8);
  for (Eigen::Index r = 0; r < x0.frames.rows(); ++r)
    for (Eigen::Index c = 0; c < 8; ++c) x0.frames(r, c) = normal(rng);
  FieldFn<double> full = [&](const FeatureSequence& x, double t) {
    FeatureSequence whole = FeatureSequence::zeros(ex.total_frames(), 8);
    whole.frames.bottomRows(x.num_frames()) = x.frames;
    const auto v = forward(f.ckpt.net, whole, t, cond, Branch::full);
    return FeatureSequence(v.frames.bottomRows(x.num_frames()));
  };
  const auto want = euler_sample(full, x0, solver);
  REQUIRE(out.num_frames() == want.num_frames());
  CHECK((out.frames - want.frames).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("sampling is deterministic in the seed") {
  Fixture f;
  const auto a = sample(f.ckpt, f.request(), {}, {}, 7);
  const auto b = sample(f.ckpt, f.request(), {}, {}, 7);
  CHECK(a.frames == b.frames);
  CHECK(sample(f.ckpt, f.request(), {}, {}, 8).frames != a.frames);
  GuidanceConfig joint;
  joint.mode = GuidanceMode::joint;
  CHECK(sample(f.ckpt, f.request(), joint, {}, 7).frames == sample(f.ckpt, f.request(), joint, {}, 7).frames);
}

TEST_CASE("layout checks against the checkpoint stage") {
  Fixture f;
  auto req = f.request();
  req.prompt_tokens.reset();
  CHECK_THROWS_WITH(sample(f.ckpt, req, {}, {}, 1), doctest::Contains("prompt transcript"));
  auto s2 = f.ckpt;
  s2.stage = Stage::s2;
  CHECK(sample(s2, req, {}, {}, 1).num_frames() == 72);
  CHECK_THROWS_WITH(sample(s2, f.request(), {}, {}, 1), doctest::Contains("no prompt transcript"));
  req.prompt = FeatureSequence::zeros(8, 5);
  CHECK_THROWS_AS(sample(s2, req, {}, {}, 1), ShapeMismatch);
}
