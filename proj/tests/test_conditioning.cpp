#include "doctest.h"

#include <random>

#include "support.hpp"
#include "xvoice/conditioning.hpp"
#include "xvoice/field_net.hpp"

using namespace xvoice;

namespace {

InjectionParams fresh(int langs = 3) {
  std::mt19937_64 rng(5);
  return init_injection(ModelDims{}, langs, rng);
}

}  // namespace

TEST_CASE("fresh injection is a no-op at both levels") {
  auto p = fresh();
  std::mt19937_64 rng(1);
  const Eigen::VectorXd e_t = xvt::randn(32, 1, rng);
  const Eigen::VectorXd e_T = xvt::randn(32, 1, rng);
  const LanguageId a{"aa", 1}, b{"bb", 2};
  CHECK(inject_time(e_t, a, p) == inject_time(e_t, b, p));
  CHECK(inject_time(e_t, a, p) == inject_time(e_t, LanguageId::unknown(), p));
  const Eigen::VectorXd projected = (p.time_weight_time * e_t + p.time_bias).unaryExpr([](double x) { return silu(x); });
  CHECK(inject_time(e_t, a, p) == projected);
  CHECK(film_modulate(e_T, a, p) == e_T);
  CHECK(film_modulate(e_T, b, p) == e_T);
}

TEST_CASE("time injection by hand") {
  InjectionParams p;
  p.lid_embedding = Eigen::MatrixXd::Zero(2, 1);
  p.lid_embedding(1, 0) = 2.0;
  p.time_weight_time = Eigen::MatrixXd::Ones(1, 1);
  p.time_weight_lid = Eigen::MatrixXd::Ones(1, 1);
  p.time_bias = Eigen::VectorXd::Zero(1);
  const Eigen::VectorXd e_t = Eigen::VectorXd::Ones(1);
  CHECK(inject_time(e_t, {"aa", 1}, p)(0) == doctest::Approx(3.0 / (1.0 + std::exp(-3.0))));
  CHECK(inject_time(e_t, {"aa", 1}, p)(0) == doctest::Approx(2.8577).epsilon(1e-4));
  CHECK(inject_time(Eigen::VectorXd::Zero(1), LanguageId::unknown(), p)(0) == 0.0);
}

TEST_CASE("split weight equals the concatenated form") {
  std::mt19937_64 rng(2);
  InjectionParams p = fresh(4);
  p.time_weight_lid = xvt::randn(p.time_weight_lid.rows(), p.time_weight_lid.cols(), rng);
  p.time_bias = xvt::randn(p.time_bias.size(), 1, rng);
  const Eigen::VectorXd e_t = xvt::randn(32, 1, rng);
  const LanguageId lid{"cc", 3};
  Eigen::MatrixXd W(p.time_weight_time.rows(), p.time_weight_time.cols() + p.time_weight_lid.cols());
  W << p.time_weight_time, p.time_weight_lid;
  Eigen::VectorXd cat(W.cols());
  cat << e_t, p.lid_embedding.row(3).transpose();
  const Eigen::VectorXd want = (W * cat + p.time_bias).unaryExpr([](double x) { return silu(x); });
  CHECK((inject_time(e_t, lid, p) - want).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK_FALSE(inject_time(e_t, lid, p) == inject_time(e_t, {"bb", 2}, p));
  CHECK_THROWS_AS(inject_time(Eigen::VectorXd::Zero(5), lid, p), ShapeMismatch);
  CHECK_THROWS(inject_time(e_t, LanguageId::none(), p));
}

TEST_CASE("film by hand") {
  InjectionParams p;
  p.lid_embedding = Eigen::MatrixXd::Zero(2, 1);
  p.film_gamma_weight = Eigen::MatrixXd::Zero(2, 1);
  p.film_beta_weight = Eigen::MatrixXd::Zero(2, 1);
  p.film_gamma_bias = Eigen::Vector2d(0.5, 2.0);
  p.film_beta_bias = Eigen::Vector2d(1.0, -1.0);
  const Eigen::VectorXd out = film_modulate(Eigen::Vector2d(2.0, 3.0), {"aa", 1}, p);
  CHECK(out(0) == 2.0);
  CHECK(out(1) == 5.0);
  // NONE never touches the table, even one too small for the index.
  InjectionParams empty = p;
  empty.lid_embedding.resize(0, 1);
  CHECK(film_modulate(Eigen::Vector2d(2.0, 3.0), LanguageId::none(), empty) == Eigen::Vector2d(2.0, 3.0));
  CHECK_THROWS_AS(film_modulate(Eigen::Vector3d(1, 2, 3), {"aa", 1}, p), ShapeMismatch);
}

TEST_CASE("film is affine in the text embedding") {
  std::mt19937_64 rng(3);
  InjectionParams p = fresh();
  p.film_gamma_weight = xvt::randn(32, 16, rng);
  p.film_beta_weight = xvt::randn(32, 16, rng);
  const LanguageId lid{"bb", 2};
  const Eigen::VectorXd x = xvt::randn(32, 1, rng), y = xvt::randn(32, 1, rng);
  const Eigen::VectorXd f0 = film_modulate(Eigen::VectorXd::Zero(32), lid, p);
  const Eigen::VectorXd lhs = film_modulate(2.0 * x - 0.5 * y, lid, p) - f0;
  const Eigen::VectorXd rhs = 2.0 * (film_modulate(x, lid, p) - f0) - 0.5 * (film_modulate(y, lid, p) - f0);
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("film over a sequence") {
  std::mt19937_64 rng(4);
  InjectionParams p = fresh();
  p.film_gamma_weight = xvt::randn(32, 16, rng);
  p.film_beta_bias = xvt::randn(32, 1, rng);
  const Eigen::MatrixXd E = xvt::randn(3, 32, rng);
  const std::vector<LanguageId> none(3, LanguageId::none());
  CHECK(film_sequence(E, none, p) == E);

  const std::vector<LanguageId> mixed{LanguageId::none(), LanguageId::unknown(), {"bb", 2}};
  const Eigen::MatrixXd out = film_sequence(E, mixed, p);
  for (int r = 0; r < 3; ++r) {
    const Eigen::VectorXd want = film_modulate(E.row(r).transpose(), mixed[r], p);
    CHECK(out.row(r).transpose() == want);
  }
  const std::vector<LanguageId> one{LanguageId::none(), {"aa", 1}, LanguageId::none()};
  const Eigen::MatrixXd single = film_sequence(E, one, p);
  CHECK(single.row(0) == E.row(0));
  CHECK(single.row(2) == E.row(2));
  CHECK_THROWS_AS(film_sequence(E, std::vector<LanguageId>(2, LanguageId::none()), p), ShapeMismatch);
}

TEST_CASE("fresh model matches the model without injection bitwise") {
  xvt::MiniWorld w;
  std::mt19937_64 rng(6);
  const FieldNet with = init_field_net(ModelDims{}, w.vocab.size(), w.langs.size(), true, 21);
  FieldNet without = with;
  without.lid_injection = false;
  for (int trial = 0; trial < 4; ++trial) {
    Segment prompt{xvt::rand_seq(12, 8, rng), w.random_tokens(3, rng), w.langs.lookup("aa")};
    Segment target{xvt::rand_seq(16, 8, rng), w.random_tokens(4, rng), w.langs.lookup("bb")};
    const auto ex = build_stage1_example(w.vocab, prompt, target);
    const auto cond = make_condition(ex);
    const auto x = xvt::rand_seq(ex.total_frames(), 8, rng);
    for (auto br : {Branch::full, Branch::text_only, Branch::unconditional}) {
      CHECK(forward(with, x, 0.3, cond, br).frames == forward(without, x, 0.3, cond, br).frames);
    }
  }
}
