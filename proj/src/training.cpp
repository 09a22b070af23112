#include "xvoice/training.hpp"

#include <cmath>
#include <map>
#include <random>
#include <stdexcept>

#include "xvoice/errors.hpp"
#include "xvoice/seeding.hpp"

namespace xvoice {

void TrainConfig::validate() const {
  if (steps < 0 || batch_size < 1 || warmup_steps < 0) throw std::invalid_argument("train config: bad step counts");
  if (!(lr_peak >= 0.0) || !(weight_decay >= 0.0)) throw std::invalid_argument("train config: negative rates");
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!prob(cond_drop_audio_p) || !prob(cond_drop_all_p) || cond_drop_audio_p + cond_drop_all_p > 1.0) {
    throw RangeError("train config: drop probabilities must lie in [0, 1] and sum to at most 1");
  }
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"steps", c.steps},
          {"batch_size", c.batch_size},
          {"lr_peak", c.lr_peak},
          {"warmup_steps", c.warmup_steps},
          {"seed", c.seed},
          {"cond_drop_audio_p", c.cond_drop_audio_p},
          {"cond_drop_all_p", c.cond_drop_all_p},
          {"weight_decay", c.weight_decay}};
}

TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig c) {
  c.steps = j.value("steps", c.steps);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.lr_peak = j.value("lr_peak", c.lr_peak);
  c.warmup_steps = j.value("warmup_steps", c.warmup_steps);
  c.seed = j.value("seed", c.seed);
  c.cond_drop_audio_p = j.value("cond_drop_audio_p", c.cond_drop_audio_p);
  c.cond_drop_all_p = j.value("cond_drop_all_p", c.cond_drop_all_p);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  return c;
}

double learning_rate(int step, const TrainConfig& cfg) {
  if (step < 0) throw RangeError("learning_rate: negative step");
  if (step <= cfg.warmup_steps) {
    return cfg.warmup_steps == 0 ? cfg.lr_peak : cfg.lr_peak * step / cfg.warmup_steps;
  }
  if (step >= cfg.steps) return 0.0;
  return cfg.lr_peak * static_cast<double>(cfg.steps - step) / static_cast<double>(cfg.steps - cfg.warmup_steps);
}

AdamState init_adam(const FieldNetParams& params) { return {zeros_like(params), zeros_like(params), 0}; }

void adamw_step(FieldNetParams& params, const FieldNetParams& grad, AdamState& s, double lr, double weight_decay) {
  constexpr double beta1 = 0.9;
  constexpr double beta2 = 0.999;
  constexpr double eps = 1e-8;
  ++s.step;
  const double c1 = 1.0 - std::pow(beta1, s.step);
  const double c2 = 1.0 - std::pow(beta2, s.step);
  for_each_tensor(
      [&](const char*, auto& p, const auto& g, auto& m, auto& v) {
        m = beta1 * m + (1.0 - beta1) * g;
        v = beta2 * v + (1.0 - beta2) * g.cwiseAbs2();
        p.array() -= lr * ((m.array() / c1) / ((v.array() / c2).sqrt() + eps) + weight_decay * p.array());
      },
      params, grad, s.m, s.v);
}

Branch drop_branch(double u, const TrainConfig& cfg) {
  if (u < cfg.cond_drop_audio_p) return Branch::text_only;
  if (u < cfg.cond_drop_audio_p + cfg.cond_drop_all_p) return Branch::unconditional;
  return Branch::full;
}

namespace {

Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = n(rng);
  return m;
}

using BatchFn = std::function<std::vector<TrainingItem>(const Checkpoint&, int)>;

TrainResult run_training(Checkpoint ckpt, const TrainConfig& cfg, const BatchFn& make_batch, const StepCallback& on_step) {
  cfg.validate();
  TrainResult result;
  result.losses.reserve(static_cast<std::size_t>(cfg.steps));
  AdamState adam = init_adam(ckpt.net.params);
  for (int step = 0; step < cfg.steps; ++step) {
    const auto batch = make_batch(ckpt, step);
    LossAndGradient lg = loss_and_gradient(ckpt.net, batch);
    if (!std::isfinite(lg.loss)) throw NumericError("non-finite training loss", static_cast<std::size_t>(step));
    adamw_step(ckpt.net.params, lg.gradient, adam, learning_rate(step, cfg), cfg.weight_decay);
    result.losses.push_back(lg.loss);
    if (on_step) on_step(step, lg.loss);
  }
  ckpt.train_config = to_json(cfg);
  result.checkpoint = std::move(ckpt);
  return result;
}

}  // namespace

std::vector<TrainingItem> stage1_batch(const Checkpoint& ckpt, std::span<const TrainingUtterance> corpus,
                                       const TrainConfig& cfg, int step) {
  if (corpus.empty()) throw std::invalid_argument("empty corpus");
  std::map<std::string, std::vector<std::size_t>> by_speaker;
  for (std::size_t i = 0; i < corpus.size(); ++i) by_speaker[corpus[i].speaker].push_back(i);

  std::mt19937_64 rng(derive_seed(derive_seed(cfg.seed, "stage1-batch"), static_cast<std::uint64_t>(step)));
  std::uniform_int_distribution<std::size_t> pick(0, corpus.size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<TrainingItem> batch;
  batch.reserve(static_cast<std::size_t>(cfg.batch_size));
  for (int b = 0; b < cfg.batch_size; ++b) {
    const auto& target = corpus[pick(rng)];
    const auto& mates = by_speaker.at(target.speaker);
    std::size_t prompt_idx = mates[std::uniform_int_distribution<std::size_t>(0, mates.size() - 1)(rng)];
    if (mates.size() > 1) {
      while (&corpus[prompt_idx] == &target) prompt_idx = mates[std::uniform_int_distribution<std::size_t>(0, mates.size() - 1)(rng)];
    }
    const auto& prompt = corpus[prompt_idx];
    const Branch branch = drop_branch(unit(rng), cfg);
    const double t = unit(rng);
    InfillExample ex = build_stage1_example(ckpt.vocab, {prompt.features, prompt.tokens, prompt.lid},
                                            {target.features, target.tokens, target.lid});
    Eigen::MatrixXd noise = normal_matrix(ex.target_frames(), ex.x1.dim(), rng);
    batch.push_back(make_training_item(std::move(ex), std::move(noise), t, branch));
  }
  return batch;
}

std::vector<TrainingItem> stage2_batch(const Checkpoint& ckpt, std::span<const TrainingPair> pairs,
                                       const TrainConfig& cfg, int step) {
  if (pairs.empty()) throw std::invalid_argument("empty paired corpus");
  std::mt19937_64 rng(derive_seed(derive_seed(cfg.seed, "stage2-batch"), static_cast<std::uint64_t>(step)));
  std::uniform_int_distribution<std::size_t> pick(0, pairs.size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<TrainingItem> batch;
  batch.reserve(static_cast<std::size_t>(cfg.batch_size));
  for (int b = 0; b < cfg.batch_size; ++b) {
    const auto& pair = pairs[pick(rng)];
    const Branch branch = drop_branch(unit(rng), cfg);
    const double t = unit(rng);
    InfillExample ex = build_stage2_example(ckpt.vocab, pair.prompt, pair.target, pair.target_tokens, pair.lid);
    Eigen::MatrixXd noise = normal_matrix(ex.target_frames(), ex.x1.dim(), rng);
    batch.push_back(make_training_item(std::move(ex), std::move(noise), t, branch));
  }
  return batch;
}

TrainResult train_stage1(Checkpoint init, std::span<const TrainingUtterance> corpus, const TrainConfig& cfg,
                         const StepCallback& on_step) {
  if (corpus.empty()) throw std::invalid_argument("empty corpus");
  init.stage = Stage::s1;
  return run_training(
      std::move(init), cfg, [&](const Checkpoint& c, int step) { return stage1_batch(c, corpus, cfg, step); }, on_step);
}

TrainResult train_stage2(Checkpoint init, std::span<const TrainingPair> pairs, const TrainConfig& cfg,
                         const StepCallback& on_step) {
  if (pairs.empty()) throw std::invalid_argument("empty paired corpus");
  if (cfg.steps == 0) {
    TrainResult r;
    r.checkpoint = std::move(init);
    return r;
  }
  init.stage = Stage::s2;
  return run_training(
      std::move(init), cfg, [&](const Checkpoint& c, int step) { return stage2_batch(c, pairs, cfg, step); }, on_step);
}

}  // namespace xvoice
