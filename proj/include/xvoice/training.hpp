#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "xvoice/checkpoint.hpp"
#include "xvoice/field_net.hpp"

namespace xvoice {

struct TrainConfig {
  int steps = 3000;
  int batch_size = 8;
  double lr_peak = 4e-3;
  int warmup_steps = 300;
  std::uint64_t seed = 0;
  double cond_drop_audio_p = 0.15;
  double cond_drop_all_p = 0.15;
  double weight_decay = 0.01;

  void validate() const;
};

nlohmann::json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig defaults = {});

// Linear warmup from 0 to lr_peak at warmup_steps, then linear decay to 0 at
// `steps`.
double learning_rate(int step, const TrainConfig& cfg);

struct AdamState {
  FieldNetParams m;
  FieldNetParams v;
  int step = 0;
};

AdamState init_adam(const FieldNetParams& params);

// AdamW with decoupled weight decay (beta1 0.9, beta2 0.999, eps 1e-8).
void adamw_step(FieldNetParams& params, const FieldNetParams& grad, AdamState& state, double lr, double weight_decay);

// Branch chosen by condition dropping for one draw u ~ U[0, 1).
Branch drop_branch(double u, const TrainConfig& cfg);

// One tokenized utterance of the training corpus.
struct TrainingUtterance {
  std::string id;
  std::string speaker;
  LanguageId lid;
  std::vector<int> tokens;
  FeatureSequence features;
};

// One Stage-2 pair. There is deliberately no field for the prompt's transcript.
struct TrainingPair {
  std::string speaker;
  LanguageId lid;
  FeatureSequence prompt;  // synthetic
  FeatureSequence target;  // real
  std::vector<int> target_tokens;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<double> losses;  // one per step
};

using StepCallback = std::function<void(int step, double loss)>;

// Stage-1 batch for `step`: same-speaker prompt/target pairs, both transcripts.
std::vector<TrainingItem> stage1_batch(const Checkpoint& ckpt, std::span<const TrainingUtterance> corpus,
                                       const TrainConfig& cfg, int step);
// Stage-2 batch for `step`: <P> placeholder layout.
std::vector<TrainingItem> stage2_batch(const Checkpoint& ckpt, std::span<const TrainingPair> pairs,
                                       const TrainConfig& cfg, int step);

TrainResult train_stage1(Checkpoint init, std::span<const TrainingUtterance> corpus, const TrainConfig& cfg,
                         const StepCallback& on_step = {});
TrainResult train_stage2(Checkpoint init, std::span<const TrainingPair> pairs, const TrainConfig& cfg,
                         const StepCallback& on_step = {});

}  // namespace xvoice
