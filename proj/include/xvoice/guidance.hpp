#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "xvoice/feature_sequence.hpp"

namespace xvoice {

enum class GuidanceMode { joint, decoupled, decoupled_a_warmup };

std::string to_string(GuidanceMode mode);
GuidanceMode guidance_mode_from_string(const std::string& name);

struct GuidanceConfig {
  GuidanceMode mode = GuidanceMode::decoupled_a_warmup;
  double w = 2.0;  // joint mode only
  double w_acoustic_start = 2.5;
  double w_linguistic_start = 4.0;
  double t_warm = 0.01;
  double t_decay = 0.6;

  void validate() const;
};

// Field predictions under (A,T,L), (T,L) and no conditions.
template <typename Scalar>
struct BasicFieldTriple {
  BasicFeatureSequence<Scalar> v_full;
  BasicFeatureSequence<Scalar> v_text;
  BasicFeatureSequence<Scalar> v_uncond;
};

using FieldTriple = BasicFieldTriple<double>;

// v_cond + w (v_cond - v_uncond)
template <typename Scalar>
BasicFeatureSequence<Scalar> joint_cfg(const BasicFeatureSequence<Scalar>& v_cond,
                                       const BasicFeatureSequence<Scalar>& v_uncond, Scalar w) {
  require_same_shape(v_cond, v_uncond, "joint_cfg");
  return BasicFeatureSequence<Scalar>(v_cond.frames + w * (v_cond.frames - v_uncond.frames), v_cond.frame_rate_hz);
}

// v_full + w_a (v_full - v_text) + w_l (v_text - v_uncond) for explicit weights.
template <typename Scalar>
BasicFeatureSequence<Scalar> decoupled_cfg(const BasicFieldTriple<Scalar>& f, Scalar w_a, Scalar w_l) {
  require_same_shape(f.v_full, f.v_text, "decoupled_cfg");
  require_same_shape(f.v_full, f.v_uncond, "decoupled_cfg");
  return BasicFeatureSequence<Scalar>(
      f.v_full.frames + w_a * (f.v_full.frames - f.v_text.frames) + w_l * (f.v_text.frames - f.v_uncond.frames),
      f.v_full.frame_rate_hz);
}

double w_acoustic(double t, const GuidanceConfig& cfg);
double w_linguistic(double t, const GuidanceConfig& cfg);

// Weights taken from the decoupled schedules at time t.
template <typename Scalar>
BasicFeatureSequence<Scalar> decoupled_cfg(const BasicFieldTriple<Scalar>& f, double t, const GuidanceConfig& cfg) {
  return decoupled_cfg(f, static_cast<Scalar>(w_acoustic(t, cfg)), static_cast<Scalar>(w_linguistic(t, cfg)));
}

struct ScheduleRow {
  double t;
  double w_acoustic;
  double w_linguistic;
};

std::vector<ScheduleRow> schedule_dump(const GuidanceConfig& cfg, const std::vector<double>& grid);

// Header `t,w_acoustic,w_linguistic`, 9 significant digits per value.
void write_schedule_csv(std::ostream& out, const std::vector<ScheduleRow>& rows);

}  // namespace xvoice
