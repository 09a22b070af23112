#include "xvoice/sampling.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "xvoice/errors.hpp"

namespace xvoice {

int target_frame_count(const Checkpoint& ckpt, const SampleRequest& req) {
  if (req.target_tokens.empty()) throw std::invalid_argument("sample: empty target tokens");
  const auto m = static_cast<double>(req.target_tokens.size());
  if (ckpt.stage == Stage::s2) return std::max(1, static_cast<int>(std::lround(m * ckpt.frames_per_token)));
  if (!req.prompt_tokens || req.prompt_tokens->empty()) {
    throw std::invalid_argument("sample: stage-1 checkpoint needs the prompt transcript");
  }
  const auto t1 = static_cast<double>(req.prompt.num_frames());
  return std::max(1, static_cast<int>(std::lround(t1 * m / static_cast<double>(req.prompt_tokens->size()))));
}

InfillExample inference_layout(const Checkpoint& ckpt, const SampleRequest& req) {
  const int t2 = target_frame_count(ckpt, req);
  FeatureSequence placeholder = FeatureSequence::zeros(t2, req.prompt.dim(), req.prompt.frame_rate_hz);
  if (ckpt.stage == Stage::s2) {
    if (req.prompt_tokens) throw std::invalid_argument("sample: stage-2 checkpoint takes no prompt transcript");
    return build_stage2_example(ckpt.vocab, req.prompt, placeholder, req.target_tokens, req.target_lid);
  }
  return build_stage1_example(ckpt.vocab, {req.prompt, *req.prompt_tokens, req.prompt_lid},
                              {placeholder, req.target_tokens, req.target_lid});
}

FeatureSequence sample(const Checkpoint& ckpt, const SampleRequest& req, const GuidanceConfig& guidance,
                       const SolverConfig& solver, std::uint64_t seed) {
  guidance.validate();
  if (req.prompt.dim() != ckpt.net.dims.feature_dim) {
    throw ShapeMismatch("sample: prompt has D = " + std::to_string(req.prompt.dim()) + ", model expects " +
                        std::to_string(ckpt.net.dims.feature_dim));
  }
  const InfillExample ex = inference_layout(ckpt, req);
  const ConditionBundle cond = make_condition(ex);
  std::vector<int> rows(static_cast<std::size_t>(ex.target_frames()));
  std::iota(rows.begin(), rows.end(), ex.prompt_frames);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  FeatureSequence x0 = FeatureSequence::zeros(ex.target_frames(), req.prompt.dim(), req.prompt.frame_rate_hz);
  for (Eigen::Index r = 0; r < x0.frames.rows(); ++r)
    for (Eigen::Index c = 0; c < x0.frames.cols(); ++c) x0.frames(r, c) = normal(rng);

  const double rate = req.prompt.frame_rate_hz;
  auto eval = [&](const FeatureSequence& x, double t, Branch b) {
    return FeatureSequence(forward_rows(ckpt.net, x.frames, rows, t, cond, b), rate);
  };
  FieldFn<double> field = [&](const FeatureSequence& x, double t) {
    if (guidance.mode == GuidanceMode::joint) {
      return joint_cfg(eval(x, t, Branch::full), eval(x, t, Branch::unconditional), guidance.w);
    }
    FieldTriple f{eval(x, t, Branch::full), eval(x, t, Branch::text_only), eval(x, t, Branch::unconditional)};
    return decoupled_cfg(f, t, guidance);
  };
  return euler_sample(field, x0, solver);
}

}  // namespace xvoice
