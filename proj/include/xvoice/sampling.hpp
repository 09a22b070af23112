#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "xvoice/checkpoint.hpp"
#include "xvoice/guidance.hpp"

namespace xvoice {

struct SampleRequest {
  FeatureSequence prompt;
  std::optional<std::vector<int>> prompt_tokens;  // required by s1 checkpoints, rejected by s2
  LanguageId prompt_lid = LanguageId::none();
  std::vector<int> target_tokens;
  LanguageId target_lid;
};

// Generated frame count: s1 scales the prompt length by the text-length
// ratio, s2 uses frames_per_token per target token.
int target_frame_count(const Checkpoint& ckpt, const SampleRequest& req);

// Infill layout used at inference; target frames are zero placeholders.
InfillExample inference_layout(const Checkpoint& ckpt, const SampleRequest& req);

// Decoupled (or joint) guided Euler sampling. Returns the target frames only.
FeatureSequence sample(const Checkpoint& ckpt, const SampleRequest& req, const GuidanceConfig& guidance,
                       const SolverConfig& solver, std::uint64_t seed);

}  // namespace xvoice
