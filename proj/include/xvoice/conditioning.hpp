#pragma once

// Dual-level language-ID injection. At the time level the LID embedding is
// concatenated with the time embedding and projected through a SiLU layer; at
// the textual level it produces a FiLM scale and shift for each text
// embedding. Fresh parameters make both paths exact no-ops.

#include <Eigen/Dense>

#include <random>
#include <span>

#include "xvoice/language.hpp"
#include "xvoice/model_dims.hpp"

namespace xvoice {

struct InjectionParams {
  Eigen::MatrixXd lid_embedding;     // V_L x d_L, row 0 = UNKNOWN
  Eigen::MatrixXd time_weight_time;  // d_h x d_t, columns of W acting on e_t
  Eigen::MatrixXd time_weight_lid;   // d_h x d_L, columns of W acting on e_L
  Eigen::VectorXd time_bias;         // d_h
  Eigen::MatrixXd film_gamma_weight;  // d_T x d_L
  Eigen::VectorXd film_gamma_bias;    // d_T
  Eigen::MatrixXd film_beta_weight;   // d_T x d_L
  Eigen::VectorXd film_beta_bias;     // d_T
};

// LID pathways zeroed, gamma = 1, beta = 0. The e_t projection and the LID
// table are random.
InjectionParams init_injection(const ModelDims& dims, int num_languages, std::mt19937_64& rng);

inline double silu(double x) { return x / (1.0 + std::exp(-x)); }

inline double silu_grad(double x) {
  const double s = 1.0 / (1.0 + std::exp(-x));
  return s * (1.0 + x * (1.0 - s));
}

// Sinusoidal embedding of t (scaled by 1000) with d_t entries.
Eigen::VectorXd time_embedding(double t, int dim);

// SiLU(W [e_t ; e_L] + b).
Eigen::VectorXd inject_time(const Eigen::VectorXd& e_t, const LanguageId& lid, const InjectionParams& params);

// SiLU(W_t e_t + b): the projection with the LID slice removed entirely.
Eigen::VectorXd project_time(const Eigen::VectorXd& e_t, const InjectionParams& params);

// gamma(e_L) * e_T + beta(e_L); NONE returns e_T untouched.
Eigen::VectorXd film_modulate(const Eigen::VectorXd& e_T, const LanguageId& lid, const InjectionParams& params);

// Row-wise film_modulate over a tau x d_T matrix.
Eigen::MatrixXd film_sequence(const Eigen::MatrixXd& text_embeddings, std::span<const LanguageId> lids,
                              const InjectionParams& params);

}  // namespace xvoice
