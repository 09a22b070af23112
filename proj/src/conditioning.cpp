#include "xvoice/conditioning.hpp"

#include <cmath>

#include "xvoice/errors.hpp"

namespace xvoice {

namespace {

Eigen::MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, double scale, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, scale);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = n(rng);
  return m;
}

Eigen::VectorXd lid_vector(const LanguageId& lid, const InjectionParams& p) {
  if (lid.is_none()) throw std::invalid_argument("NONE language id has no embedding");
  if (lid.index < 0 || lid.index >= p.lid_embedding.rows()) {
    throw std::out_of_range("language index " + std::to_string(lid.index) + " outside the LID table");
  }
  return p.lid_embedding.row(lid.index).transpose();
}

}  // namespace

InjectionParams init_injection(const ModelDims& dims, int num_languages, std::mt19937_64& rng) {
  InjectionParams p;
  p.lid_embedding = gaussian(num_languages, dims.lid_dim, 1.0, rng);
  p.time_weight_time = gaussian(dims.time_hidden, dims.time_dim, 1.0 / std::sqrt(double(dims.time_dim)), rng);
  p.time_weight_lid = Eigen::MatrixXd::Zero(dims.time_hidden, dims.lid_dim);
  p.time_bias = Eigen::VectorXd::Zero(dims.time_hidden);
  p.film_gamma_weight = Eigen::MatrixXd::Zero(dims.text_dim, dims.lid_dim);
  p.film_gamma_bias = Eigen::VectorXd::Ones(dims.text_dim);
  p.film_beta_weight = Eigen::MatrixXd::Zero(dims.text_dim, dims.lid_dim);
  p.film_beta_bias = Eigen::VectorXd::Zero(dims.text_dim);
  return p;
}

Eigen::VectorXd time_embedding(double t, int dim) {
  const int half = dim / 2;
  Eigen::VectorXd e = Eigen::VectorXd::Zero(dim);
  const double scaled = 1000.0 * t;
  const double step = half > 1 ? std::log(10000.0) / (half - 1) : 0.0;
  for (int i = 0; i < half; ++i) {
    const double arg = scaled * std::exp(-step * i);
    e(i) = std::sin(arg);
    e(half + i) = std::cos(arg);
  }
  return e;
}

Eigen::VectorXd project_time(const Eigen::VectorXd& e_t, const InjectionParams& p) {
  if (e_t.size() != p.time_weight_time.cols()) {
    throw ShapeMismatch("inject_time: e_t has " + std::to_string(e_t.size()) + " entries, W expects " +
                        std::to_string(p.time_weight_time.cols()));
  }
  Eigen::VectorXd a = p.time_weight_time * e_t + p.time_bias;
  return a.unaryExpr([](double x) { return silu(x); });
}

Eigen::VectorXd inject_time(const Eigen::VectorXd& e_t, const LanguageId& lid, const InjectionParams& p) {
  if (e_t.size() != p.time_weight_time.cols()) {
    throw ShapeMismatch("inject_time: e_t has " + std::to_string(e_t.size()) + " entries, W expects " +
                        std::to_string(p.time_weight_time.cols()));
  }
  const Eigen::VectorXd e_l = lid_vector(lid, p);
  Eigen::VectorXd a = (p.time_weight_time * e_t + p.time_weight_lid * e_l) + p.time_bias;
  return a.unaryExpr([](double x) { return silu(x); });
}

Eigen::VectorXd film_modulate(const Eigen::VectorXd& e_T, const LanguageId& lid, const InjectionParams& p) {
  if (e_T.size() != p.film_gamma_bias.size()) {
    throw ShapeMismatch("film_modulate: e_T has " + std::to_string(e_T.size()) + " entries, FiLM expects " +
                        std::to_string(p.film_gamma_bias.size()));
  }
  if (lid.is_none()) return e_T;
  const Eigen::VectorXd e_l = lid_vector(lid, p);
  const Eigen::VectorXd gamma = p.film_gamma_weight * e_l + p.film_gamma_bias;
  const Eigen::VectorXd beta = p.film_beta_weight * e_l + p.film_beta_bias;
  return gamma.cwiseProduct(e_T) + beta;
}

Eigen::MatrixXd film_sequence(const Eigen::MatrixXd& text_embeddings, std::span<const LanguageId> lids,
                              const InjectionParams& p) {
  if (static_cast<Eigen::Index>(lids.size()) != text_embeddings.rows()) {
    throw ShapeMismatch("film_sequence: " + std::to_string(lids.size()) + " language ids for " +
                        std::to_string(text_embeddings.rows()) + " text positions");
  }
  Eigen::MatrixXd out = text_embeddings;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    if (lids[static_cast<std::size_t>(i)].is_none()) continue;
    out.row(i) = film_modulate(text_embeddings.row(i).transpose(), lids[static_cast<std::size_t>(i)], p).transpose();
  }
  return out;
}

}  // namespace xvoice
