#include "xvoice/feature_sequence.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace xvoice {

namespace {

constexpr char kXvftMagic[4] = {'X', 'V', 'F', 'T'};
constexpr char kXvfdMagic[4] = {'X', 'V', 'F', 'D'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(const std::string& in, std::size_t& pos) {
  if (pos + 4 > in.size()) throw FormatError("truncated binary tensor");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  pos += 4;
  return v;
}

std::uint64_t get_u64(const std::string& in, std::size_t& pos) {
  if (pos + 8 > in.size()) throw FormatError("truncated binary tensor");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  pos += 8;
  return v;
}

void expect_magic(const std::string& in, std::size_t& pos, const char (&magic)[4]) {
  if (pos + 4 > in.size() || in.compare(pos, 4, magic, 4) != 0) {
    throw FormatError(std::string("bad magic, expected ") + std::string(magic, 4));
  }
  pos += 4;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string features_to_xvft_bytes(const FeatureSequence& seq) {
  std::string out;
  out.reserve(12 + static_cast<std::size_t>(seq.frames.size()) * 4);
  out.append(kXvftMagic, 4);
  put_u32(out, static_cast<std::uint32_t>(seq.num_frames()));
  put_u32(out, static_cast<std::uint32_t>(seq.dim()));
  for (Eigen::Index r = 0; r < seq.num_frames(); ++r) {
    for (Eigen::Index c = 0; c < seq.dim(); ++c) {
      put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(seq.frames(r, c))));
    }
  }
  return out;
}

FeatureSequence features_from_xvft_bytes(const std::string& bytes, double frame_rate_hz) {
  std::size_t pos = 0;
  expect_magic(bytes, pos, kXvftMagic);
  const std::uint32_t t = get_u32(bytes, pos);
  const std::uint32_t d = get_u32(bytes, pos);
  if (bytes.size() != pos + static_cast<std::size_t>(t) * d * 4) {
    throw FormatError("XVFT payload size does not match header " + std::to_string(t) + "x" + std::to_string(d));
  }
  FeatureSequence seq(FeatureSequence::Frames(t, d), frame_rate_hz);
  for (std::uint32_t r = 0; r < t; ++r) {
    for (std::uint32_t c = 0; c < d; ++c) seq.frames(r, c) = std::bit_cast<float>(get_u32(bytes, pos));
  }
  validate(seq);
  return seq;
}

std::string features_to_json_text(const FeatureSequence& seq) {
  nlohmann::json j;
  j["frame_rate_hz"] = seq.frame_rate_hz;
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < seq.num_frames(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < seq.dim(); ++c) row.push_back(static_cast<float>(seq.frames(r, c)));
    rows.push_back(std::move(row));
  }
  j["frames"] = std::move(rows);
  return j.dump();
}

FeatureSequence features_from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("feature JSON: ") + e.what());
  }
  if (!j.contains("frames") || !j["frames"].is_array() || j["frames"].empty()) {
    throw FormatError("feature JSON: missing or empty \"frames\"");
  }
  const auto& rows = j["frames"];
  const std::size_t t = rows.size();
  const std::size_t d = rows[0].size();
  FeatureSequence seq(FeatureSequence::Frames(t, d), j.value("frame_rate_hz", kDefaultFrameRateHz));
  for (std::size_t r = 0; r < t; ++r) {
    if (!rows[r].is_array() || rows[r].size() != d) throw FormatError("feature JSON: ragged frame " + std::to_string(r));
    for (std::size_t c = 0; c < d; ++c) seq.frames(r, c) = rows[r][c].get<double>();
  }
  validate(seq);
  return seq;
}

FeatureSequence read_features(const std::filesystem::path& path, double binary_frame_rate_hz) {
  const std::string bytes = slurp(path);
  if (path.extension() == ".json") return features_from_json_text(bytes);
  return features_from_xvft_bytes(bytes, binary_frame_rate_hz);
}

void write_features(const std::filesystem::path& path, const FeatureSequence& seq) {
  validate(seq);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  const std::string bytes = path.extension() == ".json" ? features_to_json_text(seq) : features_to_xvft_bytes(seq);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::string matrix_to_xvfd_bytes(const Eigen::MatrixXd& m) {
  std::string out;
  out.append(kXvfdMagic, 4);
  put_u32(out, static_cast<std::uint32_t>(m.rows()));
  put_u32(out, static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) put_u64(out, std::bit_cast<std::uint64_t>(m(r, c)));
  }
  return out;
}

Eigen::MatrixXd matrix_from_xvfd_bytes(const std::string& bytes, std::size_t& offset) {
  expect_magic(bytes, offset, kXvfdMagic);
  const std::uint32_t rows = get_u32(bytes, offset);
  const std::uint32_t cols = get_u32(bytes, offset);
  Eigen::MatrixXd m(rows, cols);
  for (std::uint32_t r = 0; r < rows; ++r) {
    for (std::uint32_t c = 0; c < cols; ++c) m(r, c) = std::bit_cast<double>(get_u64(bytes, offset));
  }
  return m;
}

}  // namespace xvoice
