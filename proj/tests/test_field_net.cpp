#include "doctest.h"

#include <cmath>
#include <map>
#include <random>

#include "support.hpp"
#include "xvoice/field_net.hpp"

using namespace xvoice;


TEST_CASE("analytic gradient matches central differences in every tensor") {
  xvt::MiniWorld w;
  std::mt19937_64 rng(11);
  FieldNet net = xvt::perturbed_net(w, 3);
  const auto batch = xvt::mixed_batch(w, rng, net.dims.feature_dim);
  auto lg = loss_and_gradient(net, batch);

  std::vector<xvt::ParamRef> refs;
  for_each_tensor(
      [&](const char* name, auto& t) {
        std::uniform_int_distribution<Eigen::Index> pick(0, t.size() - 1);
        for (int k = 0; k < 8; ++k) refs.push_back({name, pick(rng)});
      },
      net.params);
  // <P> row of the token table.
  for (Eigen::Index c = 0; c < net.params.token_embedding.cols(); ++c) {
    refs.push_back({"token_embedding", c * net.params.token_embedding.rows() + Vocabulary::kPrompt});
  }
  REQUIRE(refs.size() >= 100);

  const double eps = 1e-5;
  int checked = 0;
  for (const auto& ref : refs) {
    double& theta = xvt::param_at(net.params, ref);
    const double keep = theta;
    theta = keep + eps;
    const double up = batch_loss(net, batch);
    theta = keep - eps;
    const double down = batch_loss(net, batch);
    theta = keep;
    const double numeric = (up - down) / (2 * eps);
    const double analytic = xvt::param_at(lg.gradient, ref);
    const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
    INFO(ref.name << "[" << ref.index << "] analytic " << analytic << " numeric " << numeric);
    CHECK(std::abs(numeric - analytic) / scale <= 1e-4);
    ++checked;
  }
  CHECK(checked >= 100);
}

TEST_CASE("<P> embedding gets a nonzero gradient from a Stage-2 item") {
  xvt::MiniWorld w;
  std::mt19937_64 rng(5);
  FieldNet net = init_field_net(ModelDims{}, w.vocab.size(), w.langs.size(), true, 9);
  auto toks = w.random_tokens(4, rng);
  auto ex = build_stage2_example(w.vocab, xvt::rand_seq(10, 8, rng), xvt::rand_seq(16, 8, rng), toks,
                                 w.langs.lookup("aa"));
  std::vector<TrainingItem> batch{make_training_item(ex, xvt::randn(16, 8, rng), 0.3, Branch::full)};
  auto lg = loss_and_gradient(net, batch);
  CHECK(lg.gradient.token_embedding.row(Vocabulary::kPrompt).norm() > 0.0);
}

TEST_CASE("duplicated batch has the same gradient as the single batch") {
  xvt::MiniWorld w;
  std::mt19937_64 rng(2);
  FieldNet net = xvt::perturbed_net(w, 4);
  auto one = xvt::mixed_batch(w, rng, net.dims.feature_dim);
  auto two = one;
  two.insert(two.end(), one.begin(), one.end());
  auto g1 = loss_and_gradient(net, one);
  auto g2 = loss_and_gradient(net, two);
  CHECK(g1.loss == doctest::Approx(g2.loss).epsilon(1e-12));
  for_each_tensor([](const char*, const auto& a, const auto& b) { CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-12); },
                  g1.gradient, g2.gradient);
}

TEST_CASE("an empty loss region gives zero gradients") {
  xvt::MiniWorld w;
  std::mt19937_64 rng(8);
  FieldNet net = xvt::perturbed_net(w, 4);
  auto batch = xvt::mixed_batch(w, rng, net.dims.feature_dim);
  for (auto& item : batch) std::fill(item.example.mask.begin(), item.example.mask.end(), 0);
  auto lg = loss_and_gradient(net, batch);
  CHECK(lg.loss == 0.0);
  for_each_tensor([](const char*, const auto& g) { CHECK(g.isZero(0.0)); }, lg.gradient);
}

TEST_CASE("output shape follows the input for several lengths") {
  xvt::MiniWorld w;
  std::mt19937_64 rng(1);
  FieldNet net = xvt::perturbed_net(w, 6);
  for (int t : {4, 17, 64}) {
    const int t1 = t / 2 > 0 ? t / 2 : 1;
    Segment p{xvt::rand_seq(t1, 3, rng), w.random_tokens(1, rng), w.langs.lookup("aa")};
    Segment q{xvt::rand_seq(t - t1, 3, rng), w.random_tokens(1, rng), w.langs.lookup("aa")};
    auto ex = build_stage1_example(w.vocab, p, q);
    auto cond = make_condition(ex);
    auto y = forward(net, xvt::rand_seq(t, 3, rng), 0.4, cond, Branch::full);
    CHECK(y.num_frames() == t);
    CHECK(y.dim() == 3);
  }
}

TEST_CASE("fresh injection: language choice does not change the output") {
  xvt::MiniWorld w;
  std::mt19937_64 rng(3);
  FieldNet net = init_field_net(ModelDims{}, w.vocab.size(), w.langs.size(), true, 1);
  auto toks = w.random_tokens(3, rng);
  auto prompt = xvt::rand_seq(9, 8, rng);
  auto target = xvt::rand_seq(12, 8, rng);
  auto ca = make_condition(build_stage2_example(w.vocab, prompt, target, toks, w.langs.lookup("aa")));
  auto cb = make_condition(build_stage2_example(w.vocab, prompt, target, toks, w.langs.lookup("bb")));
  auto x = xvt::rand_seq(21, 8, rng);
  auto ya = forward(net, x, 0.3, ca, Branch::full);
  auto yb = forward(net, x, 0.3, cb, Branch::full);
  CHECK((ya.frames.array() == yb.frames.array()).all());
}

TEST_CASE("forward is deterministic for the unconditional branch") {
  xvt::MiniWorld w;
  std::mt19937_64 rng(3);
  FieldNet net = xvt::perturbed_net(w, 2);
  auto batch = xvt::mixed_batch(w, rng, 3);
  auto x = xvt::rand_seq(batch[0].example.total_frames(), 3, rng);
  auto y1 = forward(net, x, 0.5, batch[0].cond, Branch::unconditional);
  auto y2 = forward(net, x, 0.5, batch[0].cond, Branch::unconditional);
  CHECK((y1.frames.array() == y2.frames.array()).all());
}
