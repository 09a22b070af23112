#pragma once

// Training-corpus filtering, benchmark curation and quality ranking. Scorers
// sit behind std::function so real models can replace the toy ones.

#include <Eigen/Dense>

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "xvoice/feature_sequence.hpp"

namespace xvoice {

struct CorpusRecord {
  std::string id;
  std::string lang;
  std::string transcript;
  std::string speaker;
  double duration_s = 0.0;
  int char_count = 0;
  std::optional<double> quality_score;
  std::string features;  // path, relative paths resolve against the manifest directory
};

// Unicode code points in a UTF-8 string.
int utf8_length(const std::string& s);

nlohmann::json to_json(const CorpusRecord& r);
CorpusRecord corpus_record_from_json(const nlohmann::json& j);
void validate(const CorpusRecord& r);

// JSON lines, one record per line.
std::vector<CorpusRecord> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::vector<CorpusRecord>& records);
std::string manifest_to_text(const std::vector<CorpusRecord>& records);
std::filesystem::path resolve_features(const std::filesystem::path& manifest, const CorpusRecord& r);

struct ScorerSuite {
  std::function<double(const FeatureSequence&)> quality_scorer;
  std::function<std::string(const std::string&)> lang_detector;
  std::function<Eigen::VectorXd(const FeatureSequence&)> embedder;
  std::function<FeatureSequence(const FeatureSequence&)> vad_trimmer;
};

struct LangPolicy {
  enum class Mode { fixed, iqr };
  Mode mode = Mode::fixed;
  double min_rate = 5.0;
  double max_rate = 20.0;
};

using LangPolicyMap = std::map<std::string, LangPolicy>;

// {"toyA": {"mode": "fixed", "min_rate": 5, "max_rate": 20}, "toyB": {"mode": "iqr"}}
LangPolicyMap lang_policy_from_json(const nlohmann::json& j);

struct FilterConfig {
  double min_duration_s = 0.5;
  double max_duration_s = 30.0;
  int dedup_limit = 20;  // more than this many copies of a transcript are all removed
  double quality_threshold = 1.5;
  bool quality_stage = true;
};

enum class RejectReason { duration, speaking_rate, language_mismatch, duplicate, quality, trimmed_duration, rms, similarity };

std::string to_string(RejectReason r);

struct Verdict {
  std::string id;
  std::optional<RejectReason> reason;  // empty when accepted

  bool accepted() const { return !reason.has_value(); }
};

struct FilterReport {
  std::vector<Verdict> verdicts;  // sorted by id
  std::map<std::string, int> stage_counts;
  std::map<std::string, int> accepted_per_language;
  int distinct_speakers = 0;  // among accepted

  std::vector<std::string> accepted_ids() const;
};

// {"accepted": [...], "rejected": [{"id", "reason"}], "stage_counts": {...}}
nlohmann::json to_json(const FilterReport& report, bool benchmark = false);

// Linear-interpolation quartiles at 0.25 (n - 1) and 0.75 (n - 1).
std::pair<double, double> quartiles(std::vector<double> values);

FilterReport filter_training(const std::vector<CorpusRecord>& records, const LangPolicyMap& policy,
                             const ScorerSuite& scorers, const FilterConfig& cfg = {});

struct BenchmarkCandidate {
  CorpusRecord prompt;
  CorpusRecord truth;
  FeatureSequence prompt_features;
  FeatureSequence truth_features;

  std::string id() const { return prompt.id + "|" + truth.id; }
};

struct CurateConfig {
  double min_duration_s = 2.0;
  double max_duration_s = 16.0;
  double min_rms = 0.02;
  double min_similarity = 0.6;
};

struct CurationResult {
  FilterReport report;
  std::vector<BenchmarkCandidate> curated;  // trimmed features, sorted by id
};

// sqrt of the mean squared entry.
double rms(const FeatureSequence& f);
double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

CurationResult curate_benchmark(const std::vector<BenchmarkCandidate>& candidates, const ScorerSuite& scorers,
                                const CurateConfig& cfg = {});

// Per language: descending quality, ties by id, stop before the budget is
// exceeded. Result sorted by id.
std::vector<CorpusRecord> rank_top_hours(const std::vector<CorpusRecord>& records, double per_lang_budget_hours);

// Toy scorers.
double toy_quality(const FeatureSequence& f);  // 1 + 4 clamp(mean|x| / 2, 0, 1)
FeatureSequence toy_vad_trim(const FeatureSequence& f, double threshold = 0.005);
// normalize(mean frame - center)
Eigen::VectorXd toy_embed(const FeatureSequence& f, const Eigen::VectorXd& center);

}  // namespace xvoice
