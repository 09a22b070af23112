#include "xvoice/evaluation.hpp"

#include <map>
#include <random>
#include <stdexcept>

#include "xvoice/parallel.hpp"
#include "xvoice/seeding.hpp"

namespace xvoice {

std::string to_string(PromptMode m) {
  switch (m) {
    case PromptMode::intra: return "intra";
    case PromptMode::cross: return "cross";
    case PromptMode::mixed: return "mixed";
  }
  return "?";
}

PromptMode prompt_mode_from_string(const std::string& name) {
  if (name == "intra") return PromptMode::intra;
  if (name == "cross") return PromptMode::cross;
  if (name == "mixed") return PromptMode::mixed;
  throw std::invalid_argument("unknown prompt mode '" + name + "'");
}

std::vector<EvalItem> make_eval_items(const ToyWorld& world, const std::vector<ToyUtterance>& prompts,
                                      const std::map<std::string, std::vector<std::string>>& pool, PromptMode mode,
                                      std::uint64_t seed) {
  const auto& codes = world.languages.codes();
  std::vector<EvalItem> items;
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    const auto& u = prompts[i];
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    std::string lang = u.record.lang;
    if (mode != PromptMode::intra) {
      std::vector<std::string> choices;
      for (const auto& c : codes)
        if (mode == PromptMode::mixed || c != u.record.lang) choices.push_back(c);
      if (choices.empty()) throw std::invalid_argument("cross-lingual items need two languages");
      lang = choices[std::uniform_int_distribution<std::size_t>(0, choices.size() - 1)(rng)];
    }
    const auto& texts = pool.at(lang);
    if (texts.empty()) throw std::invalid_argument("empty text pool for " + lang);
    const auto& text = texts[std::uniform_int_distribution<std::size_t>(0, texts.size() - 1)(rng)];
    items.push_back({u.record.speaker, u.features, u.tokens, u.record.lang, tokenize(world.lexica.at(lang), text), lang});
  }
  return items;
}

nlohmann::json to_json(const EvalResult& r) {
  return {{"tokens", r.probe.tokens},
          {"correct_language_rate", r.probe.rate()},
          {"mean_prototype_distance", r.probe.mean_distance()},
          {"offset_cosine", r.offset_cosine},
          {"samples", r.samples},
          {"speakers", r.speakers}};
}

EvalResult evaluate(const Checkpoint& ckpt, const ToyWorld& world, const std::vector<EvalItem>& items,
                    const GuidanceConfig& guidance, const SolverConfig& solver, std::uint64_t seed, int jobs) {
  std::vector<LanguageProbe> probes(items.size());
  std::vector<double> cosines(items.size());
  parallel_for(items.size(), jobs, [&](std::size_t i) {
    const auto& it = items[i];
    SampleRequest req;
    req.prompt = it.prompt;
    if (it.prompt_tokens) req.prompt_tokens = encode(ckpt.vocab, *it.prompt_tokens);
    req.prompt_lid = ckpt.languages.lookup(it.prompt_lang);
    req.target_tokens = encode(ckpt.vocab, it.target_tokens);
    req.target_lid = ckpt.languages.lookup(it.target_lang);
    const auto out = sample(ckpt, req, guidance, solver, derive_seed(seed, static_cast<std::uint64_t>(i)));
    const Eigen::VectorXd offset = speaker_offset(world, it.speaker);
    probes[i] = probe_language(world, out, it.target_tokens, it.target_lang, offset);
    cosines[i] = cosine(estimate_offset(world, out, it.target_tokens, it.target_lang), offset);
  });

  EvalResult r;
  std::map<std::string, std::pair<double, int>> per_speaker;
  for (std::size_t i = 0; i < items.size(); ++i) {
    r.probe.merge(probes[i]);
    auto& acc = per_speaker[items[i].speaker];
    acc.first += cosines[i];
    ++acc.second;
  }
  for (const auto& [spk, acc] : per_speaker) r.offset_cosine += acc.first / acc.second;
  r.speakers = static_cast<int>(per_speaker.size());
  if (r.speakers) r.offset_cosine /= r.speakers;
  r.samples = static_cast<int>(items.size());
  return r;
}

}  // namespace xvoice
