// xvoice command-line front end.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "xvoice/corpus.hpp"
#include "xvoice/errors.hpp"
#include "xvoice/evaluation.hpp"
#include "xvoice/guidance.hpp"
#include "xvoice/sampling.hpp"
#include "xvoice/seeding.hpp"
#include "xvoice/synth_pairs.hpp"
#include "xvoice/toy_data.hpp"
#include "xvoice/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace xvoice;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_text_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << text;
}

fs::path toy_home() {
  const char* env = std::getenv("XVOICE_TOY_HOME");
  return env && *env ? fs::path(env) : fs::path("toy");
}

// Values from --config: top-level keys apply to every subcommand, a nested
// object named after the subcommand overrides them.
class ConfigValues {
 public:
  void load(const fs::path& path, const std::string& command) {
    const json j = read_json_file(path);
    if (!j.is_object()) throw FormatError("config must be a JSON object");
    for (const auto& [k, v] : j.items())
      if (!v.is_object()) values_[k] = v;
    if (j.contains(command)) {
      for (const auto& [k, v] : j.at(command).items()) {
        values_[k] = v;
        section_keys_.push_back(k);
      }
    }
  }

  template <typename T>
  void apply(const std::string& key, T& target) {
    auto it = values_.find(key);
    if (it == values_.end()) return;
    used_.push_back(key);
    try {
      target = it->second.get<T>();
    } catch (const json::exception& e) {
      throw UsageError("config key '" + key + "': " + e.what());
    }
  }

  void check_unused() const {
    for (const auto& k : section_keys_) {
      if (std::find(used_.begin(), used_.end(), k) == used_.end()) throw UsageError("unknown config key '" + k + "'");
    }
  }

 private:
  std::map<std::string, json> values_;
  std::vector<std::string> section_keys_;
  std::vector<std::string> used_;
};

// Options register the config value first, so flags parsed later win.
struct Builder {
  CLI::App* app;
  ConfigValues* config;

  template <typename T>
  CLI::Option* opt(const std::string& name, T& var, const std::string& desc) {
    std::string key = name;
    std::replace(key.begin(), key.end(), '-', '_');
    config->apply(key, var);
    return app->add_option("--" + name, var, desc)->capture_default_str();
  }

  CLI::Option* flag(const std::string& name, bool& var, const std::string& desc) {
    std::string key = name;
    std::replace(key.begin(), key.end(), '-', '_');
    config->apply(key, var);
    return app->add_flag("--" + name, var, desc);
  }
};

struct GuidanceFlags {
  std::string mode = to_string(GuidanceMode::decoupled_a_warmup);
  GuidanceConfig cfg;
  SolverConfig solver;

  void add(Builder& b) {
    b.opt("guidance", mode, "joint | decoupled | decoupled_a_warmup");
    b.opt("w", cfg.w, "joint guidance strength");
    b.opt("w-acoustic", cfg.w_acoustic_start, "acoustic guidance strength");
    b.opt("w-linguistic", cfg.w_linguistic_start, "linguistic guidance strength");
    b.opt("t-warm", cfg.t_warm, "end of the linguistic warmup");
    b.opt("t-decay", cfg.t_decay, "start of the guidance decay");
    b.opt("nfe", solver.nfe, "Euler steps");
    b.opt("sway", solver.sway_coefficient, "sway coefficient");
  }

  GuidanceConfig resolve() {
    cfg.mode = guidance_mode_from_string(mode);
    cfg.validate();
    return cfg;
  }
};

struct TrainFlags {
  TrainConfig cfg;
  std::string loss_csv;

  void add(Builder& b) {
    b.opt("steps", cfg.steps, "optimizer steps");
    b.opt("batch-size", cfg.batch_size, "items per step");
    b.opt("lr", cfg.lr_peak, "peak learning rate");
    b.opt("warmup-steps", cfg.warmup_steps, "linear warmup length");
    b.opt("weight-decay", cfg.weight_decay, "decoupled weight decay");
    b.opt("drop-audio-p", cfg.cond_drop_audio_p, "probability of dropping the audio prompt only");
    b.opt("drop-all-p", cfg.cond_drop_all_p, "probability of dropping every condition");
    b.opt("loss-csv", loss_csv, "write step,loss rows here");
  }
};

ToyWorld load_world(const std::string& flag) {
  if (!flag.empty()) return make_world(toy_world_spec_from_json(read_json_file(flag)));
  const fs::path fallback = toy_home() / "world.json";
  if (fs::exists(fallback)) return make_world(toy_world_spec_from_json(read_json_file(fallback)));
  return make_world(ToyWorldSpec{});
}

std::vector<ToyUtterance> load_utterances(const fs::path& manifest, const ToyWorld& world) {
  std::vector<ToyUtterance> out;
  for (auto& r : read_manifest(manifest)) {
    auto lex = world.lexica.find(r.lang);
    if (lex == world.lexica.end()) throw std::invalid_argument("record " + r.id + ": language " + r.lang + " not in the world");
    ToyUtterance u;
    u.features = read_features(resolve_features(manifest, r));
    u.tokens = tokenize(lex->second, r.transcript);
    u.record = std::move(r);
    out.push_back(std::move(u));
  }
  return out;
}

std::vector<TrainingUtterance> training_utterances(const std::vector<ToyUtterance>& utts, const Checkpoint& ckpt) {
  std::vector<TrainingUtterance> out;
  for (const auto& u : utts) {
    out.push_back({u.record.id, u.record.speaker, ckpt.languages.lookup(u.record.lang), encode(ckpt.vocab, u.tokens),
                   u.features});
  }
  return out;
}

void write_losses(const std::string& path, const std::vector<double>& losses) {
  if (path.empty()) return;
  std::ostringstream out;
  out << "step,loss\n";
  char buf[64];
  for (std::size_t i = 0; i < losses.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i, losses[i]);
    out << buf;
  }
  write_text_file(path, out.str());
}

json train_summary(const std::vector<double>& losses, const std::string& out) {
  json j = {{"checkpoint", out}, {"steps", losses.size()}};
  if (!losses.empty()) {
    j["initial_loss"] = losses.front();
    j["final_loss"] = losses.back();
  }
  return j;
}

// Keeps a record's feature reference valid when it is written to a manifest in another directory.
void rebase_features(CorpusRecord& r, const fs::path& from_manifest, const fs::path& to_manifest) {
  const fs::path out_dir = fs::absolute(to_manifest).parent_path();
  r.features = fs::absolute(resolve_features(from_manifest, r)).lexically_normal().lexically_relative(out_dir).string();
}

std::vector<BenchmarkCandidate> read_benchmark_pairs(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::vector<BenchmarkCandidate> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const json j = json::parse(line);
    BenchmarkCandidate c;
    c.prompt = corpus_record_from_json(j.at("prompt"));
    c.truth = corpus_record_from_json(j.at("truth"));
    c.prompt_features = read_features(resolve_features(path, c.prompt));
    c.truth_features = read_features(resolve_features(path, c.truth));
    out.push_back(std::move(c));
  }
  return out;
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

int run(int argc, char** argv) {
  // The subcommand name selects the config section; --config is read before
  // any option is registered so explicit flags override it.
  std::string command;
  std::optional<fs::path> config_path;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--config" && i + 1 < argc) {
      config_path = argv[i + 1];
      ++i;
    } else if (a.rfind("--config=", 0) == 0) {
      config_path = a.substr(9);
    } else if (command.empty() && !a.empty() && a[0] != '-') {
      command = a;
    }
  }
  ConfigValues config;
  if (config_path) config.load(*config_path, command);

  CLI::App app{"xvoice: flow-matching voice cloning on toy speech"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_flag;
  app.add_option("--config", config_flag, "JSON file with option defaults");
  std::uint64_t seed = 0;
  int jobs = 1;
  Builder top{&app, &config};
  top.opt("seed", seed, "base seed");
  top.opt("jobs", jobs, "worker threads (results do not depend on it)");

  std::function<void()> action;
  auto sub = [&](const char* name, const char* desc) {
    CLI::App* s = app.add_subcommand(name, desc);
    return Builder{s, &config};
  };

  // gen-toy
  std::string out_dir;
  std::string world_path;
  CorpusSpec corpus_spec;
  ToyWorldSpec world_spec;
  {
    Builder b = sub("gen-toy", "generate a toy world, corpus manifests and text pool");
    b.opt("out", out_dir, "output directory (default $XVOICE_TOY_HOME or ./toy)");
    b.opt("world", world_path, "world spec JSON (languages, lexicon paths, sigma)");
    b.opt("utterances-per-lang", corpus_spec.utterances_per_lang, "training utterances per language");
    b.opt("text-pool-size", corpus_spec.text_pool_size, "pool texts per language");
    b.opt("train-speakers", corpus_spec.train_speakers_per_lang, "training speakers per language");
    b.opt("heldout-speakers", corpus_spec.heldout_speakers_per_lang, "held-out speakers per language");
    b.opt("heldout-utterances", corpus_spec.heldout_utterances_per_speaker, "utterances per held-out speaker");
    b.opt("noise-sigma", world_spec.noise_sigma, "frame noise standard deviation");
    b.app->callback([&] {
      action = [&] {
        ToyWorldSpec spec = world_spec;
        if (!world_path.empty()) spec = toy_world_spec_from_json(read_json_file(world_path), world_spec);
        spec.seed = seed;
        const ToyWorld world = make_world(spec);
        const ToyCorpus corpus = gen_corpus(world, corpus_spec);
        const fs::path dir = out_dir.empty() ? toy_home() : fs::path(out_dir);
        fs::create_directories(dir / "features");
        auto dump = [&](const std::vector<ToyUtterance>& utts, const char* name) {
          std::vector<CorpusRecord> records;
          for (const auto& u : utts) {
            CorpusRecord r = u.record;
            r.features = "features/" + r.id + ".xvft";
            write_features(dir / r.features, u.features);
            records.push_back(std::move(r));
          }
          write_manifest(dir / name, records);
          return records.size();
        };
        const auto n_train = dump(corpus.train, "train.jsonl");
        const auto n_held = dump(corpus.heldout, "heldout.jsonl");
        write_text_file(dir / "world.json", to_json(spec).dump(2) + "\n");
        write_text_file(dir / "text_pool.json", to_json(corpus.text_pool).dump(2) + "\n");
        std::cout << json{{"out", dir.string()}, {"train", n_train}, {"heldout", n_held}}.dump() << "\n";
      };
    });
  }

  // filter / curate
  std::string manifest;
  std::string lang_policy;
  std::string report_out;
  std::string accepted_out;
  FilterConfig filter_cfg;
  bool no_quality = false;
  bool benchmark = false;
  CurateConfig curate_cfg;
  auto run_curate = [&](const std::string& pairs_path) {
    ScorerSuite scorers;
    scorers.vad_trimmer = [](const FeatureSequence& f) { return toy_vad_trim(f); };
    // Without a world the embedding is the normalized mean frame.
    std::optional<Eigen::VectorXd> center;
    if (!world_path.empty()) center = prototype_center(load_world(world_path));
    scorers.embedder = [center](const FeatureSequence& f) {
      return toy_embed(f, center ? *center : Eigen::VectorXd::Zero(f.dim()).eval());
    };
    const auto result = curate_benchmark(read_benchmark_pairs(pairs_path), scorers, curate_cfg);
    const std::string report = to_json(result.report, true).dump(2) + "\n";
    if (report_out.empty()) {
      std::cout << report;
    } else {
      write_text_file(report_out, report);
    }
    if (!accepted_out.empty()) {
      std::string text;
      for (auto c : result.curated) {
        rebase_features(c.prompt, pairs_path, accepted_out);
        rebase_features(c.truth, pairs_path, accepted_out);
        text += json{{"prompt", to_json(c.prompt)}, {"truth", to_json(c.truth)}}.dump() + "\n";
      }
      write_text_file(accepted_out, text);
    }
  };
  {
    Builder b = sub("filter", "training-corpus filter (or benchmark curation with --benchmark)");
    b.opt("manifest", manifest, "input manifest (pairs manifest with --benchmark)")->required();
    b.opt("lang-policy", lang_policy, "speaking-rate policy JSON (default: fixed 5-20 cps everywhere)");
    b.opt("quality-threshold", filter_cfg.quality_threshold, "minimum quality score");
    b.opt("dedup-limit", filter_cfg.dedup_limit, "copies of a transcript allowed per language");
    b.flag("no-quality-stage", no_quality, "skip the quality stage");
    b.flag("benchmark", benchmark, "run benchmark curation instead");
    b.opt("world", world_path, "toy world spec for the language detector / embedder");
    b.opt("out", report_out, "report JSON (stdout if empty)");
    b.opt("accepted-out", accepted_out, "write the accepted records here");
    b.app->callback([&] {
      action = [&] {
        if (benchmark) return run_curate(manifest);
        const ToyWorld world = load_world(world_path);
        const auto records = read_manifest(manifest);
        LangPolicyMap policy;
        if (!lang_policy.empty()) {
          policy = lang_policy_from_json(read_json_file(lang_policy));
        } else {
          for (const auto& r : records) policy[r.lang] = LangPolicy{};
        }
        filter_cfg.quality_stage = !no_quality;
        const auto report = filter_training(records, policy, toy_scorers(world), filter_cfg);
        const std::string text = to_json(report).dump(2) + "\n";
        if (report_out.empty()) {
          std::cout << text;
        } else {
          write_text_file(report_out, text);
        }
        if (!accepted_out.empty()) {
          std::vector<CorpusRecord> kept;
          const auto ids = report.accepted_ids();
          for (const auto& r : records)
            if (std::binary_search(ids.begin(), ids.end(), r.id)) {
              kept.push_back(r);
              rebase_features(kept.back(), manifest, accepted_out);
            }
          write_manifest(accepted_out, kept);
        }
      };
    });
  }
  {
    Builder b = sub("curate", "benchmark curation over prompt/ground-truth pairs");
    b.opt("pairs", manifest, "JSON lines {\"prompt\": record, \"truth\": record}")->required();
    b.opt("world", world_path, "toy world spec; its prototype center is removed before embedding");
    b.opt("min-rms", curate_cfg.min_rms, "minimum RMS energy after trimming");
    b.opt("min-similarity", curate_cfg.min_similarity, "minimum prompt/truth cosine");
    b.opt("out", report_out, "report JSON (stdout if empty)");
    b.opt("accepted-out", accepted_out, "write the curated pairs here");
    b.app->callback([&] { action = [&] { run_curate(manifest); }; });
  }

  // rank
  double budget_hours = 1.0;
  std::string out_path;
  {
    Builder b = sub("rank", "keep the top-quality hours per language");
    b.opt("manifest", manifest, "input manifest")->required();
    b.opt("budget-hours", budget_hours, "hours kept per language");
    b.opt("out", out_path, "output manifest")->required();
    b.app->callback([&] {
      action = [&] {
        auto records = read_manifest(manifest);
        for (auto& r : records) rebase_features(r, manifest, out_path);
        const auto kept = rank_top_hours(records, budget_hours);
        write_manifest(out_path, kept);
        std::cout << json{{"selected", kept.size()}, {"input", records.size()}}.dump() << "\n";
      };
    });
  }

  // train-stage1
  TrainFlags train;
  bool no_lid = false;
  ModelDims dims;
  {
    Builder b = sub("train-stage1", "train the text-guided infilling model");
    b.opt("manifest", manifest, "training manifest")->required();
    b.opt("world", world_path, "toy world spec (lexica, languages)");
    b.opt("out", out_path, "checkpoint path")->required();
    b.flag("no-lid-injection", no_lid, "ablation: disable both language-ID paths");
    b.opt("hidden", dims.hidden, "hidden width");
    train.add(b);
    b.app->callback([&] {
      action = [&] {
        const ToyWorld world = load_world(world_path);
        const auto utts = load_utterances(manifest, world);
        dims.feature_dim = world.spec.dim;
        train.cfg.seed = seed;
        Checkpoint init = init_checkpoint(world.vocab, world.languages, dims, !no_lid, derive_seed(seed, "stage1"));
        init.frames_per_token = world.spec.frames_per_token;
        const auto corpus = training_utterances(utts, init);
        auto result = train_stage1(std::move(init), corpus, train.cfg);
        write_checkpoint(out_path, result.checkpoint);
        write_losses(train.loss_csv, result.losses);
        std::cout << train_summary(result.losses, out_path).dump() << "\n";
      };
    });
  }

  // make-pairs
  std::string ckpt_path;
  std::string text_pool_path;
  GuidanceFlags pair_guidance;
  {
    Builder b = sub("make-pairs", "synthesize prompts for the top-quality records");
    b.opt("ckpt", ckpt_path, "stage-1 checkpoint")->required();
    b.opt("manifest", manifest, "real-speech manifest with quality scores")->required();
    b.opt("budget-hours", budget_hours, "hours selected per language");
    b.opt("text-pool", text_pool_path, "text pool JSON {lang: [texts]}")->required();
    b.opt("world", world_path, "toy world spec (lexica)");
    b.opt("out", out_path, "paired manifest path")->required();
    pair_guidance.add(b);
    b.app->callback([&] {
      action = [&] {
        const ToyWorld world = load_world(world_path);
        const Checkpoint ckpt = read_checkpoint(ckpt_path);
        std::vector<RealUtterance> reals;
        for (auto& r : read_manifest(manifest)) {
          FeatureSequence f = read_features(resolve_features(manifest, r));
          reals.push_back({std::move(r), std::move(f)});
        }
        PairConfig cfg;
        cfg.per_lang_budget_hours = budget_hours;
        cfg.guidance = pair_guidance.resolve();
        cfg.solver = pair_guidance.solver;
        cfg.seed = seed;
        cfg.jobs = jobs;
        auto pairs = make_pairs(ckpt, world.lexica, reals, text_pool_from_json(read_json_file(text_pool_path)), cfg);
        write_paired_manifest(out_path, pairs, fs::path(out_path).stem().string() + "_features");
        std::cout << json{{"pairs", pairs.size()}, {"out", out_path}}.dump() << "\n";
      };
    });
  }

  // train-stage2
  TrainFlags train2;
  std::string pairs_path;
  {
    Builder b = sub("train-stage2", "fine-tune on real-synthetic pairs without prompt transcripts");
    b.opt("ckpt", ckpt_path, "stage-1 checkpoint")->required();
    b.opt("pairs", pairs_path, "paired manifest")->required();
    b.opt("world", world_path, "toy world spec (lexica)");
    b.opt("out", out_path, "checkpoint path")->required();
    train2.cfg.steps = 2000;
    train2.cfg.lr_peak = 2e-3;
    train2.cfg.warmup_steps = 200;
    train2.add(b);
    b.app->callback([&] {
      action = [&] {
        const ToyWorld world = load_world(world_path);
        Checkpoint ckpt = read_checkpoint(ckpt_path);
        const auto rows = training_pairs(ckpt, world.lexica, read_paired_manifest(pairs_path));
        train2.cfg.seed = seed;
        auto result = train_stage2(std::move(ckpt), rows, train2.cfg);
        write_checkpoint(out_path, result.checkpoint);
        write_losses(train2.loss_csv, result.losses);
        std::cout << train_summary(result.losses, out_path).dump() << "\n";
      };
    });
  }

  // sample
  GuidanceFlags sample_guidance;
  std::string prompt_path, prompt_text, prompt_lang, text, lang;
  {
    Builder b = sub("sample", "generate target-language speech in the prompt's voice");
    b.opt("ckpt", ckpt_path, "checkpoint")->required();
    b.opt("prompt", prompt_path, "prompt features (.json or .xvft)")->required();
    b.opt("prompt-text", prompt_text, "prompt transcript (stage-1 checkpoints only)");
    b.opt("prompt-lang", prompt_lang, "prompt language (stage-1 checkpoints only)");
    b.opt("text", text, "target text")->required();
    b.opt("lang", lang, "target language")->required();
    b.opt("world", world_path, "toy world spec (lexica)");
    b.opt("out", out_path, "output features (.json or .xvft)")->required();
    sample_guidance.add(b);
    b.app->callback([&] {
      action = [&] {
        const ToyWorld world = load_world(world_path);
        const Checkpoint ckpt = read_checkpoint(ckpt_path);
        SampleRequest req;
        req.prompt = read_features(prompt_path);
        if (!prompt_text.empty()) {
          const std::string pl = prompt_lang.empty() ? lang : prompt_lang;
          req.prompt_tokens = encode(ckpt.vocab, tokenize(world.lexica.at(pl), prompt_text));
          req.prompt_lid = ckpt.languages.lookup(pl);
        }
        auto lex = world.lexica.find(lang);
        if (lex == world.lexica.end()) throw std::invalid_argument("no lexicon for language " + lang);
        req.target_tokens = encode(ckpt.vocab, tokenize(lex->second, text));
        req.target_lid = ckpt.languages.lookup(lang);
        const auto out = sample(ckpt, req, sample_guidance.resolve(), sample_guidance.solver, derive_seed(seed, "sample"));
        write_features(out_path, out);
        std::cout << json{{"frames", out.num_frames()}, {"out", out_path}}.dump() << "\n";
      };
    });
  }

  // schedule-dump
  GuidanceFlags sched;
  {
    Builder b = sub("schedule-dump", "guidance weights at every Euler evaluation time, as CSV");
    sched.add(b);
    b.opt("out", out_path, "CSV path (stdout if empty)");
    b.app->callback([&] {
      action = [&] {
        auto grid = sway_time_grid(sched.solver);
        grid.pop_back();  // the field is never evaluated at t = 1
        std::ostringstream csv;
        write_schedule_csv(csv, schedule_dump(sched.resolve(), grid));
        if (out_path.empty()) {
          std::cout << csv.str();
        } else {
          write_text_file(out_path, csv.str());
        }
      };
    });
  }

  // eval-toy
  GuidanceFlags eval_guidance;
  std::string eval_mode = "intra";
  {
    Builder b = sub("eval-toy", "prototype-alignment and speaker-offset metrics against toy ground truth");
    b.opt("ckpt", ckpt_path, "checkpoint")->required();
    b.opt("manifest", manifest, "prompt utterances (stage-1 checkpoints)");
    b.opt("pairs", pairs_path, "paired manifest whose synthetic prompts are used (stage-2 checkpoints)");
    b.opt("text-pool", text_pool_path, "text pool JSON")->required();
    b.opt("mode", eval_mode, "intra | cross | mixed");
    b.opt("world", world_path, "toy world spec");
    b.opt("out", out_path, "metrics JSON (stdout if empty)");
    eval_guidance.add(b);
    b.app->callback([&] {
      action = [&] {
        const ToyWorld world = load_world(world_path);
        const Checkpoint ckpt = read_checkpoint(ckpt_path);
        const auto pool = text_pool_from_json(read_json_file(text_pool_path));
        std::vector<ToyUtterance> prompts;
        if (ckpt.stage == Stage::s2) {
          if (pairs_path.empty()) throw std::invalid_argument("stage-2 evaluation needs --pairs");
          for (auto& p : read_paired_manifest(pairs_path)) {
            ToyUtterance u;
            u.record.id = p.id;
            u.record.lang = p.lang;
            u.record.speaker = p.speaker;
            u.features = std::move(p.prompt);
            prompts.push_back(std::move(u));
          }
        } else {
          if (manifest.empty()) throw std::invalid_argument("stage-1 evaluation needs --manifest");
          prompts = load_utterances(manifest, world);
        }
        auto items = make_eval_items(world, prompts, pool, prompt_mode_from_string(eval_mode), derive_seed(seed, "items"));
        if (ckpt.stage == Stage::s2) {
          for (auto& it : items) it.prompt_tokens.reset();
        }
        const auto r = evaluate(ckpt, world, items, eval_guidance.resolve(), eval_guidance.solver,
                                derive_seed(seed, "noise"), jobs);
        json j = to_json(r);
        j["mode"] = eval_mode;
        j["stage"] = to_string(ckpt.stage);
        const std::string textout = j.dump(2) + "\n";
        if (out_path.empty()) {
          std::cout << textout;
        } else {
          write_text_file(out_path, textout);
        }
      };
    });
  }

  config.check_unused();
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success)) return app.exit(e);
    std::cerr << "error: usage: " << one_line(e.what()) << "\n" << app.help();
    return 2;
  }
  if (jobs < 1) throw UsageError("--jobs must be at least 1");
  action();
  return 0;
}

std::string error_kind(const std::exception& e) {
  if (dynamic_cast<const ShapeMismatch*>(&e)) return "shape_mismatch";
  if (dynamic_cast<const RangeError*>(&e)) return "range_error";
  if (dynamic_cast<const NumericError*>(&e)) return "numeric_error";
  if (dynamic_cast<const FormatError*>(&e)) return "format_error";
  if (dynamic_cast<const std::invalid_argument*>(&e)) return "invalid_argument";
  if (dynamic_cast<const std::out_of_range*>(&e)) return "out_of_range";
  return "runtime_error";
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const UsageError& e) {
    std::cerr << "error: usage: " << one_line(e.what()) << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << error_kind(e) << ": " << one_line(e.what()) << "\n";
    return 1;
  }
}
