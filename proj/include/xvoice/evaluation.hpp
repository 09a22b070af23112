#pragma once

// Ground-truth evaluation of a trained model on the toy world.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "xvoice/sampling.hpp"
#include "xvoice/toy_data.hpp"

namespace xvoice {

struct EvalItem {
  std::string speaker;
  FeatureSequence prompt;
  std::optional<std::vector<PhoneticToken>> prompt_tokens;  // absent for transcript-free prompts
  std::string prompt_lang;
  std::vector<PhoneticToken> target_tokens;
  std::string target_lang;
};

enum class PromptMode { intra, cross, mixed };

std::string to_string(PromptMode m);
PromptMode prompt_mode_from_string(const std::string& name);

// One item per prompt utterance. The target text comes from the text pool:
// same language (intra), a different language (cross) or a uniformly drawn
// language (mixed).
std::vector<EvalItem> make_eval_items(const ToyWorld& world, const std::vector<ToyUtterance>& prompts,
                                      const std::map<std::string, std::vector<std::string>>& pool, PromptMode mode,
                                      std::uint64_t seed);

struct EvalResult {
  LanguageProbe probe;
  double offset_cosine = 0.0;  // mean over speakers of the mean per-sample cosine
  int samples = 0;
  int speakers = 0;
};

nlohmann::json to_json(const EvalResult& r);

EvalResult evaluate(const Checkpoint& ckpt, const ToyWorld& world, const std::vector<EvalItem>& items,
                    const GuidanceConfig& guidance, const SolverConfig& solver, std::uint64_t seed, int jobs = 1);

}  // namespace xvoice
