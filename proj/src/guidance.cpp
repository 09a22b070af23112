#include "xvoice/guidance.hpp"

#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace xvoice {

std::string to_string(GuidanceMode mode) {
  switch (mode) {
    case GuidanceMode::joint: return "joint";
    case GuidanceMode::decoupled: return "decoupled";
    case GuidanceMode::decoupled_a_warmup: return "decoupled_a_warmup";
  }
  return "unknown";
}

GuidanceMode guidance_mode_from_string(const std::string& name) {
  if (name == "joint") return GuidanceMode::joint;
  if (name == "decoupled") return GuidanceMode::decoupled;
  if (name == "decoupled_a_warmup") return GuidanceMode::decoupled_a_warmup;
  throw std::invalid_argument("unknown guidance mode '" + name + "'");
}

void GuidanceConfig::validate() const {
  if (mode == GuidanceMode::joint) return;
  if (w_acoustic_start < 0.0 || w_linguistic_start < 0.0) {
    throw RangeError("guidance start strengths must be non-negative");
  }
  if (!(t_warm >= 0.0 && t_warm < 1.0)) throw RangeError("t_warm must lie in [0, 1)");
  if (!(t_decay > t_warm && t_decay <= 1.0)) throw RangeError("t_decay must lie in (t_warm, 1]");
}

namespace {

void require_decoupled(const GuidanceConfig& cfg, double t) {
  if (cfg.mode == GuidanceMode::joint) throw std::invalid_argument("schedule undefined for joint mode");
  cfg.validate();
  if (!(t >= 0.0 && t <= 1.0)) throw RangeError("guidance time must lie in [0, 1]");
}

}  // namespace

double w_acoustic(double t, const GuidanceConfig& cfg) {
  require_decoupled(cfg, t);
  if (t < cfg.t_decay) return cfg.w_acoustic_start;
  return cfg.w_acoustic_start * (1.0 - t) * (1.0 - t);
}

double w_linguistic(double t, const GuidanceConfig& cfg) {
  require_decoupled(cfg, t);
  if (t >= cfg.t_decay) return cfg.w_linguistic_start * (1.0 - t) * (1.0 - t);
  // t_warm = 0 leaves the ramp empty.
  if (cfg.mode == GuidanceMode::decoupled_a_warmup && cfg.t_warm > 0.0 && t < cfg.t_warm) {
    return cfg.w_linguistic_start * t / cfg.t_warm;
  }
  return cfg.w_linguistic_start;
}

std::vector<ScheduleRow> schedule_dump(const GuidanceConfig& cfg, const std::vector<double>& grid) {
  if (cfg.mode == GuidanceMode::joint) throw std::invalid_argument("schedule undefined for joint mode");
  std::vector<ScheduleRow> rows;
  rows.reserve(grid.size());
  for (double t : grid) rows.push_back({t, w_acoustic(t, cfg), w_linguistic(t, cfg)});
  return rows;
}

void write_schedule_csv(std::ostream& out, const std::vector<ScheduleRow>& rows) {
  out << "t,w_acoustic,w_linguistic\n";
  char buf[96];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g\n", r.t, r.w_acoustic, r.w_linguistic);
    out << buf;
  }
}

}  // namespace xvoice
