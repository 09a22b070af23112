#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <filesystem>
#include <string>

#include "xvoice/errors.hpp"

namespace xvoice {

inline constexpr double kDefaultFrameRateHz = 50.0;

// T x D frames standing in for a mel spectrogram.
template <typename Scalar>
struct BasicFeatureSequence {
  using Frames = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  Frames frames;
  double frame_rate_hz = kDefaultFrameRateHz;

  BasicFeatureSequence() = default;
  explicit BasicFeatureSequence(Frames f, double rate = kDefaultFrameRateHz)
      : frames(std::move(f)), frame_rate_hz(rate) {}

  Eigen::Index num_frames() const { return frames.rows(); }
  Eigen::Index dim() const { return frames.cols(); }
  double duration_s() const { return static_cast<double>(frames.rows()) / frame_rate_hz; }

  static BasicFeatureSequence zeros(Eigen::Index t, Eigen::Index d, double rate = kDefaultFrameRateHz) {
    return BasicFeatureSequence(Frames::Zero(t, d), rate);
  }
};

using FeatureSequence = BasicFeatureSequence<double>;

template <typename Scalar>
std::string shape_string(const BasicFeatureSequence<Scalar>& s) {
  return std::to_string(s.num_frames()) + "x" + std::to_string(s.dim());
}

template <typename A, typename B>
void require_same_shape(const A& a, const B& b, const char* op) {
  if (a.num_frames() != b.num_frames() || a.dim() != b.dim()) {
    throw ShapeMismatch(std::string(op) + ": shape mismatch " + shape_string(a) + " vs " + shape_string(b));
  }
}

// Throws unless T >= 1, D >= 1, every entry finite and the frame rate positive.
template <typename Scalar>
void validate(const BasicFeatureSequence<Scalar>& s) {
  if (s.num_frames() < 1 || s.dim() < 1) {
    throw ShapeMismatch("feature sequence must be at least 1x1, got " + shape_string(s));
  }
  if (!(s.frame_rate_hz > 0.0) || !std::isfinite(s.frame_rate_hz)) {
    throw RangeError("frame_rate_hz must be positive");
  }
  if (!s.frames.allFinite()) throw NumericError("feature sequence has non-finite entries", 0);
}

// JSON {"frame_rate_hz": f, "frames": [[...], ...]} when the extension is
// .json, otherwise the binary XVFT layout (magic, u32 T, u32 D, float32
// row-major, little-endian).
FeatureSequence read_features(const std::filesystem::path& path,
                              double binary_frame_rate_hz = kDefaultFrameRateHz);
void write_features(const std::filesystem::path& path, const FeatureSequence& seq);

FeatureSequence features_from_json_text(const std::string& text);
std::string features_to_json_text(const FeatureSequence& seq);
FeatureSequence features_from_xvft_bytes(const std::string& bytes,
                                         double frame_rate_hz = kDefaultFrameRateHz);
std::string features_to_xvft_bytes(const FeatureSequence& seq);

// Float64 variant of the XVFT layout (magic "XVFD") used for checkpoint tensors.
std::string matrix_to_xvfd_bytes(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_xvfd_bytes(const std::string& bytes, std::size_t& offset);

}  // namespace xvoice
