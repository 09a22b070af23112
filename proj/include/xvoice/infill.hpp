#pragma once

// Speech-infilling example construction. The acoustic input is the prompt
// followed by the target; the mask selects the target frames; the text
// sequence z and textual LID sequence l have one slot per frame.

#include <vector>

#include "xvoice/cfm.hpp"
#include "xvoice/language.hpp"
#include "xvoice/phonemes.hpp"

namespace xvoice {

struct InfillExample {
  FeatureSequence x1;  // prompt ++ target, tau frames
  FrameMask mask;      // 0 over the prompt, 1 over the target
  std::vector<int> z;  // tau token ids
  std::vector<LanguageId> l;  // tau textual LIDs
  LanguageId time_lid;        // time-level LID, always the target language
  int prompt_frames = 0;      // tau1
  int prompt_text_length = 0;  // slots of z before the first target token
  int target_text_length = 0;  // M
  int num_prompt_tokens = 0;   // N (Stage-2 only, 0 in Stage-1 examples)

  int total_frames() const { return static_cast<int>(x1.num_frames()); }
  int target_frames() const { return total_frames() - prompt_frames; }
};

// Acoustic segment with its token ids and language.
struct Segment {
  FeatureSequence features;
  std::vector<int> tokens;
  LanguageId lid;
};

FrameMask build_mask(int tau1, int tau2);

// N = max(1, round(M tau1 / tau2)), clamped so that N + M + 2 <= tau1 + tau2.
int compute_prompt_token_count(int tau1, int tau2, int M);

// Both transcripts present: z = prompt ++ target ++ <F>..., l = prompt lang
// over prompt tokens, target lang over target tokens, NONE over fillers.
InfillExample build_stage1_example(const Vocabulary& vocab, const Segment& prompt, const Segment& target);

// Transcript-free layout: z = N x <P>, '.', ' ', c_1..c_M, <F>...;
// l = N x NONE, UNK, UNK, M x target, NONE... The prompt's transcript is not
// an input.
InfillExample build_stage2_example(const Vocabulary& vocab, const FeatureSequence& synthetic_prompt,
                                   const FeatureSequence& target_features, const std::vector<int>& target_tokens,
                                   const LanguageId& target_lid);

// For every frame, the slot of z aligned to it: prompt-side slots spread
// uniformly over the prompt frames, target tokens evenly over the target
// frames.
std::vector<int> align_text_to_frames(const InfillExample& ex);

}  // namespace xvoice
