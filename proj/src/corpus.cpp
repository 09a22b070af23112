#include "xvoice/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

namespace xvoice {

int utf8_length(const std::string& s) {
  return static_cast<int>(std::count_if(s.begin(), s.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

nlohmann::json to_json(const CorpusRecord& r) {
  nlohmann::json j = {{"id", r.id},
                      {"lang", r.lang},
                      {"transcript", r.transcript},
                      {"speaker", r.speaker},
                      {"duration_s", r.duration_s},
                      {"char_count", r.char_count},
                      {"features", r.features}};
  if (r.quality_score) j["quality_score"] = *r.quality_score;
  return j;
}

CorpusRecord corpus_record_from_json(const nlohmann::json& j) {
  CorpusRecord r;
  try {
    r.id = j.at("id").get<std::string>();
    r.lang = j.at("lang").get<std::string>();
    r.transcript = j.value("transcript", "");
    r.speaker = j.value("speaker", "");
    r.duration_s = j.at("duration_s").get<double>();
    r.char_count = j.contains("char_count") ? j.at("char_count").get<int>() : utf8_length(r.transcript);
    if (j.contains("quality_score") && !j.at("quality_score").is_null()) r.quality_score = j.at("quality_score").get<double>();
    r.features = j.value("features", "");
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("corpus record: ") + e.what());
  }
  validate(r);
  return r;
}

void validate(const CorpusRecord& r) {
  if (r.id.empty()) throw FormatError("corpus record without id");
  if (!(r.duration_s > 0.0)) throw FormatError("record " + r.id + ": duration_s must be positive");
  if (r.char_count < 0) throw FormatError("record " + r.id + ": negative char_count");
}

std::vector<CorpusRecord> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open manifest " + path.string());
  std::vector<CorpusRecord> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(corpus_record_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::string manifest_to_text(const std::vector<CorpusRecord>& records) {
  std::string out;
  for (const auto& r : records) out += to_json(r).dump() + "\n";
  return out;
}

void write_manifest(const std::filesystem::path& path, const std::vector<CorpusRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write manifest " + path.string());
  out << manifest_to_text(records);
}

std::filesystem::path resolve_features(const std::filesystem::path& manifest, const CorpusRecord& r) {
  std::filesystem::path p(r.features);
  if (p.empty()) throw FormatError("record " + r.id + " has no features reference");
  return p.is_absolute() ? p : manifest.parent_path() / p;
}

LangPolicyMap lang_policy_from_json(const nlohmann::json& j) {
  LangPolicyMap out;
  for (const auto& [lang, v] : j.items()) {
    LangPolicy p;
    const std::string mode = v.value("mode", "fixed");
    if (mode == "fixed") {
      p.mode = LangPolicy::Mode::fixed;
    } else if (mode == "iqr") {
      p.mode = LangPolicy::Mode::iqr;
    } else {
      throw FormatError("lang policy for " + lang + ": unknown mode '" + mode + "'");
    }
    p.min_rate = v.value("min_rate", p.min_rate);
    p.max_rate = v.value("max_rate", p.max_rate);
    out[lang] = p;
  }
  return out;
}

std::string to_string(RejectReason r) {
  switch (r) {
    case RejectReason::duration: return "duration";
    case RejectReason::speaking_rate: return "speaking_rate";
    case RejectReason::language_mismatch: return "language_mismatch";
    case RejectReason::duplicate: return "duplicate";
    case RejectReason::quality: return "quality";
    case RejectReason::trimmed_duration: return "trimmed_duration";
    case RejectReason::rms: return "rms";
    case RejectReason::similarity: return "similarity";
  }
  return "?";
}

std::vector<std::string> FilterReport::accepted_ids() const {
  std::vector<std::string> out;
  for (const auto& v : verdicts)
    if (v.accepted()) out.push_back(v.id);
  return out;
}

nlohmann::json to_json(const FilterReport& report, bool benchmark) {
  nlohmann::json accepted = nlohmann::json::array();
  nlohmann::json rejected = nlohmann::json::array();
  for (const auto& v : report.verdicts) {
    if (v.accepted()) {
      accepted.push_back(v.id);
    } else {
      rejected.push_back({{"id", v.id}, {"reason", to_string(*v.reason)}});
    }
  }
  nlohmann::json j = {{"accepted", accepted}, {"rejected", rejected}, {"stage_counts", report.stage_counts}};
  if (benchmark) {
    j["accepted_per_language"] = report.accepted_per_language;
    j["distinct_speakers"] = report.distinct_speakers;
  }
  return j;
}

std::pair<double, double> quartiles(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("quartiles of an empty sample");
  std::sort(v.begin(), v.end());
  auto at = [&](double pos) {
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
  };
  const double n1 = static_cast<double>(v.size() - 1);
  return {at(0.25 * n1), at(0.75 * n1)};
}

namespace {

void finalize(FilterReport& report, std::vector<Verdict> verdicts) {
  std::sort(verdicts.begin(), verdicts.end(), [](const Verdict& a, const Verdict& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < verdicts.size(); ++i) {
    if (verdicts[i].id == verdicts[i - 1].id) throw FormatError("duplicate record id " + verdicts[i].id);
  }
  int accepted = 0;
  for (const auto& v : verdicts) {
    if (v.accepted()) {
      ++accepted;
    } else {
      ++report.stage_counts[to_string(*v.reason)];
    }
  }
  report.stage_counts["input"] = static_cast<int>(verdicts.size());
  report.stage_counts["accepted"] = accepted;
  report.verdicts = std::move(verdicts);
}

}  // namespace

FilterReport filter_training(const std::vector<CorpusRecord>& records, const LangPolicyMap& policy,
                             const ScorerSuite& scorers, const FilterConfig& cfg) {
  for (const auto& r : records) {
    if (!policy.count(r.lang)) throw std::invalid_argument("no speaking-rate policy for language '" + r.lang + "'");
    if (cfg.quality_stage && !r.quality_score) throw std::invalid_argument("record " + r.id + " has no quality score");
  }
  if (!scorers.lang_detector) throw std::invalid_argument("filter_training needs a language detector");

  std::vector<std::optional<RejectReason>> reason(records.size());
  auto alive = [&](std::size_t i) { return !reason[i].has_value(); };
  auto rate = [&](std::size_t i) { return records[i].char_count / records[i].duration_s; };

  for (std::size_t i = 0; i < records.size(); ++i) {
    const double d = records[i].duration_s;
    if (d < cfg.min_duration_s || d > cfg.max_duration_s) reason[i] = RejectReason::duration;
  }

  // Speaking rate; IQR bounds come from the stage-1 survivors of each language.
  std::map<std::string, std::pair<double, double>> bounds;
  std::map<std::string, std::vector<double>> iqr_rates;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (alive(i) && policy.at(records[i].lang).mode == LangPolicy::Mode::iqr) iqr_rates[records[i].lang].push_back(rate(i));
  }
  for (const auto& [lang, p] : policy) {
    if (p.mode == LangPolicy::Mode::fixed) {
      bounds[lang] = {p.min_rate, p.max_rate};
    } else if (iqr_rates.count(lang)) {
      const auto [q1, q3] = quartiles(iqr_rates[lang]);
      const double iqr = q3 - q1;
      bounds[lang] = {q1 - 1.5 * iqr, q3 + 1.5 * iqr};
    }
  }
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!alive(i)) continue;
    const auto [lo, hi] = bounds.at(records[i].lang);
    const double r = rate(i);
    if (r < lo || r > hi) reason[i] = RejectReason::speaking_rate;
  }

  for (std::size_t i = 0; i < records.size(); ++i) {
    if (alive(i) && scorers.lang_detector(records[i].transcript) != records[i].lang) {
      reason[i] = RejectReason::language_mismatch;
    }
  }

  std::map<std::pair<std::string, std::string>, int> copies;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (alive(i)) ++copies[{records[i].lang, records[i].transcript}];
  }
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (alive(i) && copies[{records[i].lang, records[i].transcript}] > cfg.dedup_limit) reason[i] = RejectReason::duplicate;
  }

  if (cfg.quality_stage) {
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (alive(i) && *records[i].quality_score < cfg.quality_threshold) reason[i] = RejectReason::quality;
    }
  }

  FilterReport report;
  std::vector<Verdict> verdicts;
  std::set<std::string> speakers;
  for (std::size_t i = 0; i < records.size(); ++i) {
    verdicts.push_back({records[i].id, reason[i]});
    if (alive(i)) {
      ++report.accepted_per_language[records[i].lang];
      speakers.insert(records[i].speaker);
    }
  }
  report.distinct_speakers = static_cast<int>(speakers.size());
  finalize(report, std::move(verdicts));
  return report;
}

double rms(const FeatureSequence& f) {
  if (f.frames.size() == 0) return 0.0;
  return std::sqrt(f.frames.squaredNorm() / static_cast<double>(f.frames.size()));
}

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) throw ShapeMismatch("cosine: vectors of different length");
  const double n = a.norm() * b.norm();
  return n > 0.0 ? a.dot(b) / n : 0.0;
}

CurationResult curate_benchmark(const std::vector<BenchmarkCandidate>& candidates, const ScorerSuite& scorers,
                                const CurateConfig& cfg) {
  if (!scorers.embedder || !scorers.vad_trimmer) throw std::invalid_argument("curate_benchmark needs embedder and VAD");
  CurationResult result;
  std::vector<Verdict> verdicts;
  std::set<std::string> speakers;
  auto in_range = [&](double d) { return d >= cfg.min_duration_s && d <= cfg.max_duration_s; };
  for (const auto& c : candidates) {
    if (c.prompt.speaker != c.truth.speaker) {
      throw std::invalid_argument("benchmark pair " + c.id() + " mixes speakers");
    }
    Verdict v{c.id(), std::nullopt};
    BenchmarkCandidate trimmed = c;
    if (!in_range(c.prompt.duration_s) || !in_range(c.truth.duration_s)) {
      v.reason = RejectReason::duration;
    } else {
      trimmed.prompt_features = scorers.vad_trimmer(c.prompt_features);
      trimmed.truth_features = scorers.vad_trimmer(c.truth_features);
      trimmed.prompt.duration_s = trimmed.prompt_features.duration_s();
      trimmed.truth.duration_s = trimmed.truth_features.duration_s();
      if (!in_range(trimmed.prompt.duration_s) || !in_range(trimmed.truth.duration_s)) {
        v.reason = RejectReason::trimmed_duration;
      } else if (rms(trimmed.prompt_features) < cfg.min_rms || rms(trimmed.truth_features) < cfg.min_rms) {
        v.reason = RejectReason::rms;
      } else if (cosine(scorers.embedder(trimmed.prompt_features), scorers.embedder(trimmed.truth_features)) <
                 cfg.min_similarity) {
        v.reason = RejectReason::similarity;
      }
    }
    if (v.accepted()) {
      ++result.report.accepted_per_language[c.truth.lang];
      speakers.insert(c.truth.speaker);
      result.curated.push_back(std::move(trimmed));
    }
    verdicts.push_back(std::move(v));
  }
  result.report.distinct_speakers = static_cast<int>(speakers.size());
  finalize(result.report, std::move(verdicts));
  std::sort(result.curated.begin(), result.curated.end(),
            [](const BenchmarkCandidate& a, const BenchmarkCandidate& b) { return a.id() < b.id(); });
  return result;
}

std::vector<CorpusRecord> rank_top_hours(const std::vector<CorpusRecord>& records, double per_lang_budget_hours) {
  std::map<std::string, std::vector<const CorpusRecord*>> by_lang;
  for (const auto& r : records) {
    if (!r.quality_score) throw std::invalid_argument("record " + r.id + " has no quality score");
    by_lang[r.lang].push_back(&r);
  }
  const double budget_s = per_lang_budget_hours * 3600.0;
  std::vector<CorpusRecord> out;
  for (auto& [lang, rs] : by_lang) {
    std::sort(rs.begin(), rs.end(), [](const CorpusRecord* a, const CorpusRecord* b) {
      if (*a->quality_score != *b->quality_score) return *a->quality_score > *b->quality_score;
      return a->id < b->id;
    });
    double used = 0.0;
    for (const auto* r : rs) {
      if (used + r->duration_s > budget_s) break;
      used += r->duration_s;
      out.push_back(*r);
    }
  }
  std::sort(out.begin(), out.end(), [](const CorpusRecord& a, const CorpusRecord& b) { return a.id < b.id; });
  return out;
}

double toy_quality(const FeatureSequence& f) {
  const double m = f.frames.size() ? f.frames.cwiseAbs().mean() : 0.0;
  return 1.0 + 4.0 * std::clamp(m / 2.0, 0.0, 1.0);
}

FeatureSequence toy_vad_trim(const FeatureSequence& f, double threshold) {
  auto frame_rms = [&](Eigen::Index r) { return std::sqrt(f.frames.row(r).squaredNorm() / static_cast<double>(f.dim())); };
  Eigen::Index lo = 0;
  Eigen::Index hi = f.num_frames();
  while (lo < hi && frame_rms(lo) < threshold) ++lo;
  while (hi > lo && frame_rms(hi - 1) < threshold) --hi;
  return FeatureSequence(f.frames.middleRows(lo, hi - lo), f.frame_rate_hz);
}

Eigen::VectorXd toy_embed(const FeatureSequence& f, const Eigen::VectorXd& center) {
  if (center.size() != f.dim()) throw ShapeMismatch("toy_embed: center has the wrong dimension");
  Eigen::VectorXd v = f.num_frames() ? Eigen::VectorXd(f.frames.colwise().mean().transpose() - center)
                                     : Eigen::VectorXd::Zero(f.dim());
  const double n = v.norm();
  if (n == 0.0) {
    v.setZero();
    v(0) = 1.0;
    return v;
  }
  return v / n;
}

}  // namespace xvoice
