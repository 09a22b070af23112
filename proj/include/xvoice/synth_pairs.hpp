#pragma once

// Real-synthetic pairs for transcript-free fine-tuning: the Stage-1 model
// speaks a pool text in the voice of a real recording; the synthetic audio
// becomes the prompt and the real recording the target.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "xvoice/corpus.hpp"
#include "xvoice/sampling.hpp"
#include "xvoice/training.hpp"

namespace xvoice {

struct RealUtterance {
  CorpusRecord record;
  FeatureSequence features;
};

// One paired-manifest row. There is no field for the synthetic prompt's text.
struct SynthPair {
  std::string id;  // id of the real record
  std::string lang;
  std::string speaker;
  std::string target_transcript;
  FeatureSequence prompt;  // synthetic
  FeatureSequence target;  // real
  std::string prompt_features;  // paths, filled when written to disk
  std::string target_features;
};

using TextPool = std::map<std::string, std::vector<std::string>>;

struct PairConfig {
  double per_lang_budget_hours = 1.0;
  double min_length_ratio = 0.5;
  double max_length_ratio = 1.5;
  GuidanceConfig guidance;
  SolverConfig solver;
  std::uint64_t seed = 0;
  int jobs = 1;
};

// Index of the pool text for a record with `record_tokens` tokens: uniform
// over texts within [min, max] x the record length, else the closest ratio.
std::size_t pick_pool_text(const std::vector<std::size_t>& pool_lengths, std::size_t record_tokens,
                           const PairConfig& cfg, std::mt19937_64& rng);

std::vector<SynthPair> make_pairs(const Checkpoint& stage1, const std::map<std::string, Lexicon>& lexica,
                                  const std::vector<RealUtterance>& records, const TextPool& pool,
                                  const PairConfig& cfg);

// Stage-2 training rows: target transcript tokenized and encoded.
std::vector<TrainingPair> training_pairs(const Checkpoint& ckpt, const std::map<std::string, Lexicon>& lexica,
                                         const std::vector<SynthPair>& pairs);

// JSON lines {"id", "prompt_features", "target_features", "target_transcript", "lang", "speaker"}.
nlohmann::json to_json(const SynthPair& p);
// Writes features as <dir>/<id>.prompt.xvft and <dir>/<id>.target.xvft
// (relative to the manifest) and the manifest itself.
void write_paired_manifest(const std::filesystem::path& manifest, std::vector<SynthPair>& pairs,
                           const std::string& feature_dir = "pairs");
std::vector<SynthPair> read_paired_manifest(const std::filesystem::path& manifest);

TextPool text_pool_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TextPool& pool);

}  // namespace xvoice
