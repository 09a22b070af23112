#pragma once

// Optimal-transport conditional flow matching: the linear probability path,
// its constant target field, the masked regression loss and an explicit
// Euler sampler over a sway-warped time grid.

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "xvoice/feature_sequence.hpp"

namespace xvoice {

// One entry per frame, 1 = frame contributes to the loss.
using FrameMask = std::vector<std::uint8_t>;

template <typename Scalar>
struct BasicPathPoint {
  Scalar t;
  BasicFeatureSequence<Scalar> x_t;
};

using PathPoint = BasicPathPoint<double>;

struct SolverConfig {
  int nfe = 16;
  double sway_coefficient = -1.0;
};

// (1 - t) x0 + t x1.
template <typename Scalar>
BasicPathPoint<Scalar> interpolate_path(const BasicFeatureSequence<Scalar>& x0,
                                        const BasicFeatureSequence<Scalar>& x1, Scalar t) {
  require_same_shape(x0, x1, "interpolate_path");
  if (!(t >= Scalar(0) && t <= Scalar(1))) throw RangeError("interpolate_path: t must lie in [0, 1]");
  // Endpoints are returned verbatim so that t = 0 and t = 1 are exact.
  if (t == Scalar(0)) return {t, x0};
  if (t == Scalar(1)) return {t, x1};
  BasicFeatureSequence<Scalar> out((Scalar(1) - t) * x0.frames + t * x1.frames, x1.frame_rate_hz);
  return {t, std::move(out)};
}

// d/dt of the linear path: x1 - x0, independent of t.
template <typename Scalar>
BasicFeatureSequence<Scalar> target_field(const BasicFeatureSequence<Scalar>& x0,
                                          const BasicFeatureSequence<Scalar>& x1) {
  require_same_shape(x0, x1, "target_field");
  return BasicFeatureSequence<Scalar>(x1.frames - x0.frames, x1.frame_rate_hz);
}

// Mean squared error between `predicted` and x1 - x0 over the frames the mask
// selects (all frames when no mask is given) and every feature dimension.
template <typename Scalar>
Scalar cfm_loss(const BasicFeatureSequence<Scalar>& predicted, const BasicFeatureSequence<Scalar>& x0,
                const BasicFeatureSequence<Scalar>& x1, const std::optional<FrameMask>& mask = std::nullopt) {
  require_same_shape(predicted, x0, "cfm_loss");
  require_same_shape(x0, x1, "cfm_loss");
  const auto residual = (predicted.frames - (x1.frames - x0.frames)).eval();
  if (!mask) return residual.squaredNorm() / static_cast<Scalar>(residual.size());

  if (static_cast<Eigen::Index>(mask->size()) != predicted.num_frames()) {
    throw ShapeMismatch("cfm_loss: mask has " + std::to_string(mask->size()) + " entries for " +
                        std::to_string(predicted.num_frames()) + " frames");
  }
  Scalar total = 0;
  Eigen::Index counted = 0;
  for (Eigen::Index r = 0; r < residual.rows(); ++r) {
    const auto m = (*mask)[static_cast<std::size_t>(r)];
    if (m > 1) throw RangeError("cfm_loss: mask entries must be 0 or 1");
    if (m == 0) continue;
    total += residual.row(r).squaredNorm();
    ++counted;
  }
  if (counted == 0) throw std::invalid_argument("empty loss region");
  return total / static_cast<Scalar>(counted * residual.cols());
}

// u_k = k / nfe warped by t = u + s (cos(pi u / 2) - 1 + u). Endpoints are
// pinned to exactly 0 and 1.
inline std::vector<double> sway_time_grid(const SolverConfig& config) {
  if (config.nfe < 1) throw RangeError("sway_time_grid: nfe must be >= 1");
  const double s = config.sway_coefficient;
  if (!(s >= -1.0 && s <= 1.0)) throw RangeError("sway_time_grid: sway coefficient must lie in [-1, 1]");
  std::vector<double> grid(static_cast<std::size_t>(config.nfe) + 1);
  for (int k = 0; k <= config.nfe; ++k) {
    const double u = static_cast<double>(k) / config.nfe;
    grid[static_cast<std::size_t>(k)] = u + s * (std::cos(std::numbers::pi * u / 2.0) - 1.0 + u);
  }
  grid.front() = 0.0;
  grid.back() = 1.0;
  return grid;
}

template <typename Scalar>
using FieldFn = std::function<BasicFeatureSequence<Scalar>(const BasicFeatureSequence<Scalar>&, Scalar)>;

// Explicit Euler over an arbitrary increasing grid, evaluating the field at
// the left endpoint of every interval.
template <typename Scalar>
BasicFeatureSequence<Scalar> euler_integrate(const FieldFn<Scalar>& field, BasicFeatureSequence<Scalar> x,
                                             const std::vector<double>& grid) {
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    const auto t = static_cast<Scalar>(grid[k]);
    const auto dt = static_cast<Scalar>(grid[k + 1] - grid[k]);
    const BasicFeatureSequence<Scalar> v = field(x, t);
    require_same_shape(v, x, "euler_integrate");
    if (!v.frames.allFinite()) throw NumericError("non-finite field output", k);
    x.frames += dt * v.frames;
  }
  return x;
}

template <typename Scalar>
BasicFeatureSequence<Scalar> euler_sample(const FieldFn<Scalar>& field, const BasicFeatureSequence<Scalar>& x0,
                                          const SolverConfig& config) {
  if (!x0.frames.allFinite()) throw NumericError("non-finite initial state", 0);
  return euler_integrate(field, x0, sway_time_grid(config));
}

}  // namespace xvoice
