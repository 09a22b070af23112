#pragma once

// Frame-local conditional vector-field network with hand-derived reverse-mode
// gradients. Each frame sees
//   [x_t | cond-audio frame | prompt-audio mean | aligned text | prompt-text mean | h_t]
// and passes through two SiLU layers and a linear head.

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "xvoice/conditioning.hpp"
#include "xvoice/infill.hpp"
#include "xvoice/model_dims.hpp"

namespace xvoice {

// Which conditions a forward pass sees: (A,T,L), (T,L) or nothing.
enum class Branch { full, text_only, unconditional };

struct FieldNetParams {
  Eigen::MatrixXd token_embedding;  // V_tok x d_T
  InjectionParams injection;
  Eigen::MatrixXd w1;  // hidden x input_width
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;  // hidden x hidden
  Eigen::VectorXd b2;
  Eigen::MatrixXd w_out;  // D x hidden
  Eigen::VectorXd b_out;
};

// Calls fn(name, tensor_from_each...) for every tensor, in a fixed order.
template <typename Fn, typename... P>
void for_each_tensor(Fn&& fn, P&... p) {
  fn("token_embedding", p.token_embedding...);
  fn("lid_embedding", p.injection.lid_embedding...);
  fn("time_weight_time", p.injection.time_weight_time...);
  fn("time_weight_lid", p.injection.time_weight_lid...);
  fn("time_bias", p.injection.time_bias...);
  fn("film_gamma_weight", p.injection.film_gamma_weight...);
  fn("film_gamma_bias", p.injection.film_gamma_bias...);
  fn("film_beta_weight", p.injection.film_beta_weight...);
  fn("film_beta_bias", p.injection.film_beta_bias...);
  fn("w1", p.w1...);
  fn("b1", p.b1...);
  fn("w2", p.w2...);
  fn("b2", p.b2...);
  fn("w_out", p.w_out...);
  fn("b_out", p.b_out...);
}

FieldNetParams zeros_like(const FieldNetParams& p);
std::size_t parameter_count(const FieldNetParams& p);

struct FieldNet {
  ModelDims dims;
  bool lid_injection = true;  // false: both LID paths are skipped entirely
  FieldNetParams params;
};

FieldNet init_field_net(const ModelDims& dims, int vocab_size, int num_languages, bool lid_injection,
                        std::uint64_t seed);

// The (A, T, L) conditions of one infill layout.
struct ConditionBundle {
  Eigen::MatrixXd prompt_audio;  // tau1 x D
  std::vector<int> z;
  std::vector<LanguageId> l;
  LanguageId time_lid;
  int prompt_text_length = 0;
  std::vector<int> frame_slots;  // tau entries, index into z

  int total_frames() const { return static_cast<int>(frame_slots.size()); }
  int prompt_frames() const { return static_cast<int>(prompt_audio.rows()); }
};

ConditionBundle make_condition(const InfillExample& ex);

// Field prediction for every frame of x_t.
FeatureSequence forward(const FieldNet& net, const FeatureSequence& x_t, double t, const ConditionBundle& cond,
                        Branch branch);

// Field prediction for the frames listed in `rows`; x_rows holds x_t for
// exactly those frames.
Eigen::MatrixXd forward_rows(const FieldNet& net, const Eigen::MatrixXd& x_rows, std::span<const int> rows, double t,
                             const ConditionBundle& cond, Branch branch);

// One training item: an infill layout with the noise drawn for its target
// frames, a path time and the branch chosen by condition dropping.
struct TrainingItem {
  InfillExample example;
  ConditionBundle cond;
  Eigen::MatrixXd noise;  // tau2 x D, x0 over the target frames
  double t = 0.0;
  Branch branch = Branch::full;
};

TrainingItem make_training_item(InfillExample example, Eigen::MatrixXd noise, double t, Branch branch);

struct LossAndGradient {
  double loss = 0.0;
  FieldNetParams gradient;
};

// Masked CFM loss over the batch (mean over every target-frame entry) and its
// gradient for every parameter. Throws NumericError naming the tensor when a
// gradient is not finite.
LossAndGradient loss_and_gradient(const FieldNet& net, std::span<const TrainingItem> batch);
double batch_loss(const FieldNet& net, std::span<const TrainingItem> batch);

}  // namespace xvoice
