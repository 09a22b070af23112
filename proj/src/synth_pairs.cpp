#include "xvoice/synth_pairs.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "xvoice/parallel.hpp"
#include "xvoice/seeding.hpp"

namespace xvoice {

std::size_t pick_pool_text(const std::vector<std::size_t>& pool_lengths, std::size_t record_tokens,
                           const PairConfig& cfg, std::mt19937_64& rng) {
  if (pool_lengths.empty()) throw std::invalid_argument("empty text pool");
  std::vector<std::size_t> ok;
  std::size_t closest = 0;
  double closest_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pool_lengths.size(); ++i) {
    const double ratio = static_cast<double>(pool_lengths[i]) / static_cast<double>(record_tokens);
    if (ratio >= cfg.min_length_ratio && ratio <= cfg.max_length_ratio) ok.push_back(i);
    const double gap = std::abs(std::log(ratio));
    if (gap < closest_gap) {
      closest_gap = gap;
      closest = i;
    }
  }
  if (ok.empty()) return closest;
  return ok[std::uniform_int_distribution<std::size_t>(0, ok.size() - 1)(rng)];
}

std::vector<SynthPair> make_pairs(const Checkpoint& stage1, const std::map<std::string, Lexicon>& lexica,
                                  const std::vector<RealUtterance>& records, const TextPool& pool,
                                  const PairConfig& cfg) {
  if (stage1.stage != Stage::s1) throw std::invalid_argument("make_pairs needs a stage-1 checkpoint");
  std::vector<CorpusRecord> meta;
  std::map<std::string, const RealUtterance*> by_id;
  for (const auto& r : records) {
    meta.push_back(r.record);
    if (!by_id.emplace(r.record.id, &r).second) throw FormatError("duplicate record id " + r.record.id);
  }
  const auto selected = rank_top_hours(meta, cfg.per_lang_budget_hours);

  // Pool texts per language, tokenized once.
  std::map<std::string, std::vector<std::vector<PhoneticToken>>> pool_tokens;
  std::map<std::string, std::vector<std::size_t>> pool_lengths;
  for (const auto& r : selected) {
    if (pool_tokens.count(r.lang)) continue;
    auto it = pool.find(r.lang);
    if (it == pool.end() || it->second.empty()) throw std::invalid_argument("empty text pool for language " + r.lang);
    for (const auto& text : it->second) {
      pool_tokens[r.lang].push_back(tokenize(lexica.at(r.lang), text));
      pool_lengths[r.lang].push_back(pool_tokens[r.lang].back().size());
    }
  }

  std::vector<SynthPair> out(selected.size());
  parallel_for(selected.size(), cfg.jobs, [&](std::size_t i) {
    const CorpusRecord& rec = selected[i];
    const RealUtterance& real = *by_id.at(rec.id);
    try {
      const std::uint64_t rec_seed = derive_seed(cfg.seed, rec.id);
      std::mt19937_64 text_rng(derive_seed(rec_seed, "text"));
      const auto real_tokens = tokenize(lexica.at(rec.lang), rec.transcript);
      const std::size_t k = pick_pool_text(pool_lengths.at(rec.lang), real_tokens.size(), cfg, text_rng);

      SampleRequest req;
      req.prompt = real.features;
      req.prompt_tokens = encode(stage1.vocab, real_tokens);
      req.prompt_lid = stage1.languages.lookup(rec.lang);
      req.target_tokens = encode(stage1.vocab, pool_tokens.at(rec.lang)[k]);
      req.target_lid = req.prompt_lid;

      SynthPair& p = out[i];
      p.id = rec.id;
      p.lang = rec.lang;
      p.speaker = rec.speaker;
      p.target_transcript = rec.transcript;
      p.prompt = sample(stage1, req, cfg.guidance, cfg.solver, derive_seed(rec_seed, "noise"));
      p.target = real.features;
    } catch (const std::exception& e) {
      throw std::runtime_error("synthesis failed for record " + rec.id + ": " + e.what());
    }
  });
  return out;
}

std::vector<TrainingPair> training_pairs(const Checkpoint& ckpt, const std::map<std::string, Lexicon>& lexica,
                                         const std::vector<SynthPair>& pairs) {
  std::vector<TrainingPair> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    auto lex = lexica.find(p.lang);
    if (lex == lexica.end()) throw std::invalid_argument("no lexicon for language " + p.lang);
    out.push_back({p.speaker, ckpt.languages.lookup(p.lang), p.prompt, p.target,
                   encode(ckpt.vocab, tokenize(lex->second, p.target_transcript))});
  }
  return out;
}

nlohmann::json to_json(const SynthPair& p) {
  return {{"id", p.id},
          {"prompt_features", p.prompt_features},
          {"target_features", p.target_features},
          {"target_transcript", p.target_transcript},
          {"lang", p.lang},
          {"speaker", p.speaker}};
}

void write_paired_manifest(const std::filesystem::path& manifest, std::vector<SynthPair>& pairs,
                           const std::string& feature_dir) {
  const auto base = manifest.parent_path();
  std::filesystem::create_directories(base / feature_dir);
  std::string text;
  for (auto& p : pairs) {
    p.prompt_features = feature_dir + "/" + p.id + ".prompt.xvft";
    p.target_features = feature_dir + "/" + p.id + ".target.xvft";
    write_features(base / p.prompt_features, p.prompt);
    write_features(base / p.target_features, p.target);
    text += to_json(p).dump() + "\n";
  }
  std::ofstream out(manifest, std::ios::binary);
  if (!out) throw FormatError("cannot write " + manifest.string());
  out << text;
}

std::vector<SynthPair> read_paired_manifest(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw FormatError("cannot open paired manifest " + manifest.string());
  std::vector<SynthPair> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      SynthPair p;
      p.id = j.value("id", "");
      p.lang = j.at("lang").get<std::string>();
      p.speaker = j.at("speaker").get<std::string>();
      p.target_transcript = j.at("target_transcript").get<std::string>();
      p.prompt_features = j.at("prompt_features").get<std::string>();
      p.target_features = j.at("target_features").get<std::string>();
      auto resolve = [&](const std::string& f) {
        std::filesystem::path path(f);
        return path.is_absolute() ? path : manifest.parent_path() / path;
      };
      p.prompt = read_features(resolve(p.prompt_features));
      p.target = read_features(resolve(p.target_features));
      out.push_back(std::move(p));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(manifest.string() + ": " + e.what());
    }
  }
  return out;
}

TextPool text_pool_from_json(const nlohmann::json& j) { return j.get<TextPool>(); }

nlohmann::json to_json(const TextPool& pool) { return nlohmann::json(pool); }

}  // namespace xvoice
