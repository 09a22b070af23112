#include "xvoice/infill.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace xvoice {

namespace {

void check_ids(const Vocabulary& vocab, const std::vector<int>& ids) {
  for (int id : ids) {
    if (id < 0 || id >= vocab.size()) throw std::out_of_range("token id " + std::to_string(id) + " not in vocabulary");
    if (Vocabulary::is_reserved(id)) throw std::invalid_argument("reserved token id " + std::to_string(id) + " in transcript");
  }
}

FeatureSequence concat(const FeatureSequence& a, const FeatureSequence& b) {
  validate(a);
  validate(b);
  if (a.dim() != b.dim()) {
    throw ShapeMismatch("infill: prompt " + shape_string(a) + " and target " + shape_string(b) + " differ in D");
  }
  FeatureSequence out(FeatureSequence::Frames(a.num_frames() + b.num_frames(), a.dim()), b.frame_rate_hz);
  out.frames.topRows(a.num_frames()) = a.frames;
  out.frames.bottomRows(b.num_frames()) = b.frames;
  return out;
}

}  // namespace

FrameMask build_mask(int tau1, int tau2) {
  if (tau1 < 1 || tau2 < 1) throw std::invalid_argument("build_mask: lengths must be positive");
  FrameMask m(static_cast<std::size_t>(tau1 + tau2), 0);
  std::fill(m.begin() + tau1, m.end(), std::uint8_t{1});
  return m;
}

int compute_prompt_token_count(int tau1, int tau2, int M) {
  if (tau1 < 1 || tau2 < 1 || M < 1) throw std::invalid_argument("compute_prompt_token_count: arguments must be positive");
  const int tau = tau1 + tau2;
  if (M + 3 > tau) throw std::invalid_argument("target text too long for sequence");
  const long ratio = std::lround(static_cast<double>(M) * tau1 / tau2);
  const int n = static_cast<int>(std::max(1L, ratio));
  return std::min(n, tau - M - 2);
}

InfillExample build_stage1_example(const Vocabulary& vocab, const Segment& prompt, const Segment& target) {
  check_ids(vocab, prompt.tokens);
  check_ids(vocab, target.tokens);
  if (prompt.tokens.empty() || target.tokens.empty()) throw std::invalid_argument("stage-1 example needs both transcripts");
  if (prompt.lid.is_none() || target.lid.is_none()) throw std::invalid_argument("stage-1 segments need a language");

  InfillExample ex;
  ex.x1 = concat(prompt.features, target.features);
  const int tau1 = static_cast<int>(prompt.features.num_frames());
  const int tau2 = static_cast<int>(target.features.num_frames());
  const int tau = tau1 + tau2;
  const int m1 = static_cast<int>(prompt.tokens.size());
  const int m2 = static_cast<int>(target.tokens.size());
  if (m1 + m2 > tau) throw std::invalid_argument("stage-1 transcripts longer than the frame sequence");

  ex.mask = build_mask(tau1, tau2);
  ex.z.assign(static_cast<std::size_t>(tau), Vocabulary::kFiller);
  ex.l.assign(static_cast<std::size_t>(tau), LanguageId::none());
  std::copy(prompt.tokens.begin(), prompt.tokens.end(), ex.z.begin());
  std::copy(target.tokens.begin(), target.tokens.end(), ex.z.begin() + m1);
  std::fill(ex.l.begin(), ex.l.begin() + m1, prompt.lid);
  std::fill(ex.l.begin() + m1, ex.l.begin() + m1 + m2, target.lid);
  ex.time_lid = target.lid;
  ex.prompt_frames = tau1;
  ex.prompt_text_length = m1;
  ex.target_text_length = m2;
  ex.num_prompt_tokens = 0;
  return ex;
}

InfillExample build_stage2_example(const Vocabulary& vocab, const FeatureSequence& synthetic_prompt,
                                   const FeatureSequence& target_features, const std::vector<int>& target_tokens,
                                   const LanguageId& target_lid) {
  check_ids(vocab, target_tokens);
  if (target_tokens.empty()) throw std::invalid_argument("stage-2 example needs target tokens");
  if (target_lid.is_none() || target_lid.is_unknown()) throw std::invalid_argument("stage-2 target language must be a real language");

  InfillExample ex;
  ex.x1 = concat(synthetic_prompt, target_features);
  const int tau1 = static_cast<int>(synthetic_prompt.num_frames());
  const int tau2 = static_cast<int>(target_features.num_frames());
  const int tau = tau1 + tau2;
  const int m = static_cast<int>(target_tokens.size());
  const int n = compute_prompt_token_count(tau1, tau2, m);

  ex.mask = build_mask(tau1, tau2);
  ex.z.assign(static_cast<std::size_t>(tau), Vocabulary::kFiller);
  ex.l.assign(static_cast<std::size_t>(tau), LanguageId::none());
  std::fill(ex.z.begin(), ex.z.begin() + n, Vocabulary::kPrompt);
  ex.z[static_cast<std::size_t>(n)] = Vocabulary::kEosPeriod;
  ex.z[static_cast<std::size_t>(n + 1)] = Vocabulary::kEosSpace;
  ex.l[static_cast<std::size_t>(n)] = LanguageId::unknown();
  ex.l[static_cast<std::size_t>(n + 1)] = LanguageId::unknown();
  std::copy(target_tokens.begin(), target_tokens.end(), ex.z.begin() + n + 2);
  std::fill(ex.l.begin() + n + 2, ex.l.begin() + n + 2 + m, target_lid);
  ex.time_lid = target_lid;
  ex.prompt_frames = tau1;
  ex.prompt_text_length = n + 2;
  ex.target_text_length = m;
  ex.num_prompt_tokens = n;
  return ex;
}

std::vector<int> align_text_to_frames(const InfillExample& ex) {
  const int tau = ex.total_frames();
  const int tau1 = ex.prompt_frames;
  const int tau2 = tau - tau1;
  const int k = ex.prompt_text_length;
  const int m = ex.target_text_length;
  if (k < 1 || m < 1 || tau1 < 1 || tau2 < 1) throw std::invalid_argument("align_text_to_frames: empty segment");
  std::vector<int> slots(static_cast<std::size_t>(tau));
  for (int u = 0; u < tau1; ++u) slots[static_cast<std::size_t>(u)] = static_cast<int>(static_cast<long>(u) * k / tau1);
  for (int u = tau1; u < tau; ++u) {
    slots[static_cast<std::size_t>(u)] = k + static_cast<int>(static_cast<long>(u - tau1) * m / tau2);
  }
  return slots;
}

}  // namespace xvoice
