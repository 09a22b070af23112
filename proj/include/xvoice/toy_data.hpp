#pragma once

// Synthetic "toy speech": every (language, unit) has a prototype frame and
// every speaker an additive offset, so generated audio can be scored against
// exact ground truth.

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "xvoice/corpus.hpp"
#include "xvoice/language.hpp"
#include "xvoice/phonemes.hpp"

namespace xvoice {

// toyA and toyB share one unit inventory; toyZ uses syllables with tone digits.
Lexicon builtin_lexicon(const std::string& code);
std::vector<std::string> builtin_languages();

struct ToyWorldSpec {
  std::uint64_t seed = 1;
  std::vector<std::string> languages{"toyA", "toyB"};
  std::map<std::string, std::string> lexicon_paths;  // code -> file, overrides the built-in table
  double noise_sigma = 0.05;
  double offset_scale = 1.0;
  int dim = 8;
  int frames_per_token = 4;
  double frame_rate_hz = 50.0;
};

nlohmann::json to_json(const ToyWorldSpec& spec);
ToyWorldSpec toy_world_spec_from_json(const nlohmann::json& j, ToyWorldSpec defaults = {});

struct ToyWorld {
  ToyWorldSpec spec;
  LanguageTable languages;
  std::map<std::string, Lexicon> lexica;
  Vocabulary vocab;
  std::map<std::pair<std::string, PhoneticToken>, Eigen::VectorXd> prototypes;

  const Eigen::VectorXd& prototype(const std::string& lang, const PhoneticToken& unit) const;
  // Languages other than `lang` that also use `unit`.
  std::vector<std::string> rivals(const std::string& lang, const PhoneticToken& unit) const;
};

// Prototypes ~ N(0, I), redrawn until every shared unit sits more than
// 4 noise_sigma away from the other languages' prototype.
ToyWorld make_world(const ToyWorldSpec& spec);

Eigen::VectorXd speaker_offset(const ToyWorld& world, const std::string& speaker);
// Mean of every prototype: the center the toy embedder subtracts.
Eigen::VectorXd prototype_center(const ToyWorld& world);

struct ToyUtterance {
  CorpusRecord record;
  FeatureSequence features;
  std::vector<PhoneticToken> tokens;
};

// Each token emits frames_per_token frames of prototype + offset + noise.
ToyUtterance gen_utterance(const ToyWorld& world, const std::string& lang, const std::string& speaker,
                           const std::string& transcript, std::uint64_t seed, const std::string& id = "");

// Random transcript of min_words..max_words lexicon words.
std::string random_transcript(const ToyWorld& world, const std::string& lang, int min_words, int max_words,
                              std::mt19937_64& rng);

struct CorpusSpec {
  int utterances_per_lang = 240;
  int text_pool_size = 64;
  int train_speakers_per_lang = 24;
  int heldout_speakers_per_lang = 10;
  int heldout_utterances_per_speaker = 2;
  int min_words = 2;
  int max_words = 4;
};

nlohmann::json to_json(const CorpusSpec& spec);
CorpusSpec corpus_spec_from_json(const nlohmann::json& j, CorpusSpec defaults = {});

struct ToyCorpus {
  std::vector<ToyUtterance> train;
  std::vector<ToyUtterance> heldout;  // speakers disjoint from train
  std::map<std::string, std::vector<std::string>> text_pool;
};

ToyCorpus gen_corpus(const ToyWorld& world, const CorpusSpec& spec);

// Ground-truth probes on generated audio. Frames are split evenly over the
// tokens; the speaker offset is removed before comparing prototypes.
struct LanguageProbe {
  int tokens = 0;
  int correct = 0;
  double distance_sum = 0.0;

  double rate() const { return tokens ? static_cast<double>(correct) / tokens : 0.0; }
  double mean_distance() const { return tokens ? distance_sum / tokens : 0.0; }
  void merge(const LanguageProbe& o) {
    tokens += o.tokens;
    correct += o.correct;
    distance_sum += o.distance_sum;
  }
};

// A token counts as correct when its mean frame is strictly nearer to the
// target language's prototype than to every rival prototype.
LanguageProbe probe_language(const ToyWorld& world, const FeatureSequence& generated,
                             const std::vector<PhoneticToken>& tokens, const std::string& lang,
                             const Eigen::VectorXd& offset);

// Mean over frames of (frame - prototype of its token).
Eigen::VectorXd estimate_offset(const ToyWorld& world, const FeatureSequence& generated,
                                const std::vector<PhoneticToken>& tokens, const std::string& lang);

// Row range of token j when `frames` frames are split over `count` tokens.
std::pair<Eigen::Index, Eigen::Index> token_rows(Eigen::Index frames, std::size_t count, std::size_t j);

// Scorer suite backed by the toy world: lexicon coverage for language
// detection, the prototype center for the embedder.
ScorerSuite toy_scorers(const ToyWorld& world);
// Language with the highest fraction of known words; ties go to the first
// language in table order, "und" when no word is known.
std::string detect_language(const ToyWorld& world, const std::string& transcript);

}  // namespace xvoice
