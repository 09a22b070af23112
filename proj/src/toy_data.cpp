#include "xvoice/toy_data.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "xvoice/seeding.hpp"

namespace xvoice {

namespace {

using Entry = std::pair<const char*, std::vector<std::string>>;

const std::vector<Entry>& toy_a() {
  static const std::vector<Entry> e = {
      {"pata", {"p", "ˈ", "a", "t", "a"}},           {"kimo", {"k", "ʰ", "ˈ", "i", "m", "o"}},
      {"sela", {"s", "ˈ", "e", "l", "a"}},           {"nupi", {"n", "ˈ", "u", "p", "i"}},
      {"tomak", {"t", "o", "ˈ", "m", "a", "k"}},     {"lisu", {"l", "ˈ", "i", "ː", "s", "u"}},
      {"mena", {"m", "ˈ", "e", "n", "a"}},           {"kapo", {"k", "ˈ", "a", "p", "o"}},
      {"sinu", {"s", "i", "ˈ", "n", "u"}},           {"palek", {"p", "ʰ", "a", "ˈ", "l", "e", "k"}},
      {"onti", {"ˈ", "o", "n", "t", "i"}},           {"mulas", {"m", "ˈ", "u", "l", "a", "ː", "s"}},
  };
  return e;
}

const std::vector<Entry>& toy_b() {
  static const std::vector<Entry> e = {
      {"tepu", {"t", "ˈ", "e", "p", "u"}},           {"lomi", {"l", "ˈ", "o", "m", "i"}},
      {"kasen", {"k", "a", "ˈ", "s", "e", "n"}},     {"pinko", {"p", "ˈ", "i", "n", "k", "o"}},
      {"sutal", {"s", "ˈ", "u", "t", "a", "l"}},     {"nemo", {"n", "e", "ˈ", "m", "o", "ː"}},
      {"atik", {"ˈ", "a", "t", "i", "k"}},           {"molup", {"m", "ˈ", "o", "l", "u", "p"}},
      {"tiska", {"t", "ʰ", "ˈ", "i", "s", "k", "a"}}, {"punel", {"p", "u", "ˈ", "n", "e", "l"}},
      {"ekla", {"ˈ", "e", "k", "l", "a"}},           {"simat", {"s", "i", "ˈ", "m", "a", "ː", "t"}},
  };
  return e;
}

const std::vector<Entry>& toy_z() {
  static const std::vector<Entry> e = {
      {"ma3li2", {"ma", "3", "li", "2"}}, {"xu4", {"xu", "4"}},           {"ba1shi4", {"ba", "1", "shi", "4"}},
      {"li3", {"li", "3"}},               {"shi2ma1", {"shi", "2", "ma", "1"}}, {"xu1ba3", {"xu", "1", "ba", "3"}},
      {"ma4", {"ma", "4"}},               {"ba2li1", {"ba", "2", "li", "1"}},
  };
  return e;
}

std::vector<std::string> split_words(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> words;
  for (std::string w; in >> w;) words.push_back(w);
  return words;
}

Eigen::VectorXd draw(std::mt19937_64& rng, int dim, double scale) {
  std::normal_distribution<double> n(0.0, scale);
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v(i) = n(rng);
  return v;
}

}  // namespace

std::vector<std::string> builtin_languages() { return {"toyA", "toyB", "toyZ"}; }

Lexicon builtin_lexicon(const std::string& code) {
  const std::vector<Entry>* table = nullptr;
  if (code == "toyA") table = &toy_a();
  if (code == "toyB") table = &toy_b();
  if (code == "toyZ") table = &toy_z();
  if (!table) throw std::invalid_argument("no built-in lexicon for language '" + code + "'");
  Lexicon lex;
  for (const auto& [word, units] : *table) lex.add(word, units);
  return lex;
}

nlohmann::json to_json(const ToyWorldSpec& s) {
  return {{"seed", s.seed},
          {"languages", s.languages},
          {"lexicon_paths", s.lexicon_paths},
          {"noise_sigma", s.noise_sigma},
          {"offset_scale", s.offset_scale},
          {"dim", s.dim},
          {"frames_per_token", s.frames_per_token},
          {"frame_rate_hz", s.frame_rate_hz}};
}

ToyWorldSpec toy_world_spec_from_json(const nlohmann::json& j, ToyWorldSpec s) {
  s.seed = j.value("seed", s.seed);
  s.languages = j.value("languages", s.languages);
  s.lexicon_paths = j.value("lexicon_paths", s.lexicon_paths);
  s.noise_sigma = j.value("noise_sigma", s.noise_sigma);
  s.offset_scale = j.value("offset_scale", s.offset_scale);
  s.dim = j.value("dim", s.dim);
  s.frames_per_token = j.value("frames_per_token", s.frames_per_token);
  s.frame_rate_hz = j.value("frame_rate_hz", s.frame_rate_hz);
  return s;
}

const Eigen::VectorXd& ToyWorld::prototype(const std::string& lang, const PhoneticToken& unit) const {
  auto it = prototypes.find({lang, unit});
  if (it == prototypes.end()) throw std::invalid_argument("no prototype for '" + unit.text + "' in " + lang);
  return it->second;
}

std::vector<std::string> ToyWorld::rivals(const std::string& lang, const PhoneticToken& unit) const {
  std::vector<std::string> out;
  for (const auto& code : languages.codes()) {
    if (code != lang && prototypes.count({code, unit})) out.push_back(code);
  }
  return out;
}

ToyWorld make_world(const ToyWorldSpec& spec) {
  if (spec.languages.empty()) throw std::invalid_argument("toy world needs at least one language");
  if (spec.dim < 1 || spec.frames_per_token < 1 || !(spec.noise_sigma >= 0.0) || !(spec.frame_rate_hz > 0.0)) {
    throw std::invalid_argument("toy world: invalid spec");
  }
  ToyWorld w;
  w.spec = spec;
  w.languages = LanguageTable(spec.languages);
  std::vector<const Lexicon*> lexica;
  for (const auto& code : spec.languages) {
    auto path = spec.lexicon_paths.find(code);
    w.lexica[code] = path != spec.lexicon_paths.end() ? read_lexicon(path->second) : builtin_lexicon(code);
    validate(w.lexica[code]);
  }
  for (const auto& code : spec.languages) lexica.push_back(&w.lexica.at(code));
  w.vocab = build_vocabulary(lexica);

  const double min_gap = 4.0 * spec.noise_sigma;
  for (const auto& code : spec.languages) {
    auto units = w.lexica.at(code).inventory();
    units.push_back(word_boundary());
    for (const auto& unit : units) {
      std::mt19937_64 rng(derive_seed(spec.seed, "prototype/" + code + "/" + unit.text + "/" + to_string(unit.kind)));
      Eigen::VectorXd p = draw(rng, spec.dim, 1.0);
      auto separated = [&](const Eigen::VectorXd& v) {
        for (const auto& other : w.languages.codes()) {
          auto it = w.prototypes.find({other, unit});
          if (it != w.prototypes.end() && (it->second - v).norm() <= min_gap) return false;
        }
        return true;
      };
      while (!separated(p)) p = draw(rng, spec.dim, 1.0);
      w.prototypes[{code, unit}] = std::move(p);
    }
  }
  return w;
}

Eigen::VectorXd speaker_offset(const ToyWorld& world, const std::string& speaker) {
  std::mt19937_64 rng(derive_seed(world.spec.seed, "speaker/" + speaker));
  return draw(rng, world.spec.dim, world.spec.offset_scale);
}

Eigen::VectorXd prototype_center(const ToyWorld& world) {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(world.spec.dim);
  for (const auto& [key, p] : world.prototypes) c += p;
  return c / static_cast<double>(world.prototypes.size());
}

ToyUtterance gen_utterance(const ToyWorld& world, const std::string& lang, const std::string& speaker,
                           const std::string& transcript, std::uint64_t seed, const std::string& id) {
  auto lex = world.lexica.find(lang);
  if (lex == world.lexica.end()) throw std::invalid_argument("unknown toy language '" + lang + "'");
  ToyUtterance u;
  u.tokens = tokenize(lex->second, transcript);
  if (u.tokens.empty()) throw std::invalid_argument("toy utterance needs at least one word");
  const int fpt = world.spec.frames_per_token;
  const Eigen::VectorXd offset = speaker_offset(world, speaker);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  FeatureSequence f = FeatureSequence::zeros(static_cast<Eigen::Index>(u.tokens.size()) * fpt, world.spec.dim,
                                             world.spec.frame_rate_hz);
  for (std::size_t j = 0; j < u.tokens.size(); ++j) {
    const Eigen::VectorXd base = world.prototype(lang, u.tokens[j]) + offset;
    for (int k = 0; k < fpt; ++k) {
      auto row = f.frames.row(static_cast<Eigen::Index>(j) * fpt + k);
      for (int d = 0; d < world.spec.dim; ++d) {
        row(d) = world.spec.noise_sigma == 0.0 ? base(d) : base(d) + world.spec.noise_sigma * noise(rng);
      }
    }
  }
  u.features = std::move(f);
  u.record.id = id;
  u.record.lang = lang;
  u.record.transcript = transcript;
  u.record.speaker = speaker;
  u.record.duration_s = u.features.duration_s();
  u.record.char_count = utf8_length(transcript);
  u.record.quality_score = toy_quality(u.features);
  return u;
}

std::string random_transcript(const ToyWorld& world, const std::string& lang, int min_words, int max_words,
                              std::mt19937_64& rng) {
  const auto& entries = world.lexica.at(lang).entries;
  if (entries.empty() || min_words < 1 || max_words < min_words) throw std::invalid_argument("random_transcript");
  std::vector<std::string> words;
  for (const auto& [w, units] : entries) words.push_back(w);
  const int n = std::uniform_int_distribution<int>(min_words, max_words)(rng);
  std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1);
  std::string out;
  for (int i = 0; i < n; ++i) {
    if (i) out += ' ';
    out += words[pick(rng)];
  }
  return out;
}

nlohmann::json to_json(const CorpusSpec& s) {
  return {{"utterances_per_lang", s.utterances_per_lang},
          {"text_pool_size", s.text_pool_size},
          {"train_speakers_per_lang", s.train_speakers_per_lang},
          {"heldout_speakers_per_lang", s.heldout_speakers_per_lang},
          {"heldout_utterances_per_speaker", s.heldout_utterances_per_speaker},
          {"min_words", s.min_words},
          {"max_words", s.max_words}};
}

CorpusSpec corpus_spec_from_json(const nlohmann::json& j, CorpusSpec s) {
  s.utterances_per_lang = j.value("utterances_per_lang", s.utterances_per_lang);
  s.text_pool_size = j.value("text_pool_size", s.text_pool_size);
  s.train_speakers_per_lang = j.value("train_speakers_per_lang", s.train_speakers_per_lang);
  s.heldout_speakers_per_lang = j.value("heldout_speakers_per_lang", s.heldout_speakers_per_lang);
  s.heldout_utterances_per_speaker = j.value("heldout_utterances_per_speaker", s.heldout_utterances_per_speaker);
  s.min_words = j.value("min_words", s.min_words);
  s.max_words = j.value("max_words", s.max_words);
  return s;
}

ToyCorpus gen_corpus(const ToyWorld& world, const CorpusSpec& spec) {
  if (spec.utterances_per_lang < 0 || spec.text_pool_size < 0 || spec.train_speakers_per_lang < 1 ||
      spec.heldout_speakers_per_lang < 0 || spec.heldout_utterances_per_speaker < 0) {
    throw std::invalid_argument("gen_corpus: negative counts");
  }
  ToyCorpus c;
  if (spec.utterances_per_lang == 0) return c;
  char buf[64];
  for (const auto& lang : world.languages.codes()) {
    const std::uint64_t lang_seed = derive_seed(world.spec.seed, "corpus/" + lang);
    std::mt19937_64 text_rng(derive_seed(lang_seed, "text"));
    for (int i = 0; i < spec.utterances_per_lang; ++i) {
      std::snprintf(buf, sizeof buf, "%s-s%03d", lang.c_str(), i % spec.train_speakers_per_lang);
      const std::string speaker = buf;
      std::snprintf(buf, sizeof buf, "%s-%05d", lang.c_str(), i);
      const std::string transcript = random_transcript(world, lang, spec.min_words, spec.max_words, text_rng);
      c.train.push_back(gen_utterance(world, lang, speaker, transcript, derive_seed(lang_seed, buf), buf));
    }
    for (int s = 0; s < spec.heldout_speakers_per_lang; ++s) {
      std::snprintf(buf, sizeof buf, "%s-h%03d", lang.c_str(), s);
      const std::string speaker = buf;
      for (int k = 0; k < spec.heldout_utterances_per_speaker; ++k) {
        std::snprintf(buf, sizeof buf, "%s-h%03d-%02d", lang.c_str(), s, k);
        const std::string transcript = random_transcript(world, lang, spec.min_words, spec.max_words, text_rng);
        c.heldout.push_back(gen_utterance(world, lang, speaker, transcript, derive_seed(lang_seed, buf), buf));
      }
    }
    std::mt19937_64 pool_rng(derive_seed(lang_seed, "pool"));
    auto& pool = c.text_pool[lang];
    for (int i = 0; i < spec.text_pool_size; ++i) {
      pool.push_back(random_transcript(world, lang, spec.min_words, spec.max_words, pool_rng));
    }
  }
  return c;
}

std::pair<Eigen::Index, Eigen::Index> token_rows(Eigen::Index frames, std::size_t count, std::size_t j) {
  const auto n = static_cast<Eigen::Index>(count);
  const auto k = static_cast<Eigen::Index>(j);
  return {k * frames / n, (k + 1) * frames / n};
}

LanguageProbe probe_language(const ToyWorld& world, const FeatureSequence& generated,
                             const std::vector<PhoneticToken>& tokens, const std::string& lang,
                             const Eigen::VectorXd& offset) {
  if (static_cast<std::size_t>(generated.num_frames()) < tokens.size()) {
    throw ShapeMismatch("probe_language: fewer frames than tokens");
  }
  LanguageProbe probe;
  for (std::size_t j = 0; j < tokens.size(); ++j) {
    const auto [lo, hi] = token_rows(generated.num_frames(), tokens.size(), j);
    const Eigen::VectorXd mean = generated.frames.middleRows(lo, hi - lo).colwise().mean().transpose() - offset;
    const double own = (mean - world.prototype(lang, tokens[j])).norm();
    bool nearest = true;
    for (const auto& other : world.rivals(lang, tokens[j])) {
      if ((mean - world.prototype(other, tokens[j])).norm() <= own) nearest = false;
    }
    ++probe.tokens;
    probe.correct += nearest ? 1 : 0;
    probe.distance_sum += own;
  }
  return probe;
}

Eigen::VectorXd estimate_offset(const ToyWorld& world, const FeatureSequence& generated,
                                const std::vector<PhoneticToken>& tokens, const std::string& lang) {
  if (tokens.empty() || static_cast<std::size_t>(generated.num_frames()) < tokens.size()) {
    throw ShapeMismatch("estimate_offset: fewer frames than tokens");
  }
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(generated.dim());
  for (std::size_t j = 0; j < tokens.size(); ++j) {
    const auto [lo, hi] = token_rows(generated.num_frames(), tokens.size(), j);
    const Eigen::VectorXd& p = world.prototype(lang, tokens[j]);
    for (Eigen::Index r = lo; r < hi; ++r) sum += generated.frames.row(r).transpose() - p;
  }
  return sum / static_cast<double>(generated.num_frames());
}

std::string detect_language(const ToyWorld& world, const std::string& transcript) {
  const auto words = split_words(transcript);
  std::string best = "und";
  double best_cov = 0.0;
  for (const auto& code : world.languages.codes()) {
    const auto& lex = world.lexica.at(code);
    int known = 0;
    for (const auto& w : words) known += lex.entries.count(w) ? 1 : 0;
    const double cov = words.empty() ? 0.0 : static_cast<double>(known) / static_cast<double>(words.size());
    if (cov > best_cov) {
      best_cov = cov;
      best = code;
    }
  }
  return best;
}

ScorerSuite toy_scorers(const ToyWorld& world) {
  ScorerSuite s;
  s.quality_scorer = [](const FeatureSequence& f) { return toy_quality(f); };
  s.lang_detector = [world](const std::string& t) { return detect_language(world, t); };
  const Eigen::VectorXd center = prototype_center(world);
  s.embedder = [center](const FeatureSequence& f) { return toy_embed(f, center); };
  s.vad_trimmer = [](const FeatureSequence& f) { return toy_vad_trim(f); };
  return s;
}

}  // namespace xvoice
