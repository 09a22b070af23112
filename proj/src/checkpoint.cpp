#include "xvoice/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "xvoice/errors.hpp"
#include "xvoice/seeding.hpp"

namespace xvoice {

namespace {

constexpr std::uint32_t kFormatVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(const std::string& in, std::size_t& pos) {
  if (pos + 4 > in.size()) throw FormatError("truncated checkpoint");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  pos += 4;
  return v;
}

std::string get_bytes(const std::string& in, std::size_t& pos, std::size_t n) {
  if (pos + n > in.size()) throw FormatError("truncated checkpoint");
  std::string s = in.substr(pos, n);
  pos += n;
  return s;
}

nlohmann::json dims_to_json(const ModelDims& d) {
  return {{"feature_dim", d.feature_dim}, {"time_dim", d.time_dim}, {"lid_dim", d.lid_dim},
          {"time_hidden", d.time_hidden}, {"text_dim", d.text_dim}, {"hidden", d.hidden}};
}

ModelDims dims_from_json(const nlohmann::json& j) {
  ModelDims d;
  d.feature_dim = j.at("feature_dim");
  d.time_dim = j.at("time_dim");
  d.lid_dim = j.at("lid_dim");
  d.time_hidden = j.at("time_hidden");
  d.text_dim = j.at("text_dim");
  d.hidden = j.at("hidden");
  return d;
}

}  // namespace

std::string to_string(Stage stage) { return stage == Stage::s1 ? "s1" : "s2"; }

Stage stage_from_string(const std::string& name) {
  if (name == "s1") return Stage::s1;
  if (name == "s2") return Stage::s2;
  throw FormatError("unknown stage tag '" + name + "'");
}

Checkpoint init_checkpoint(const Vocabulary& vocab, const LanguageTable& languages, const ModelDims& dims,
                           bool lid_injection, std::uint64_t seed) {
  Checkpoint c;
  c.vocab = vocab;
  c.languages = languages;
  c.net = init_field_net(dims, vocab.size(), languages.size(), lid_injection, derive_seed(seed, "init"));
  return c;
}

std::string checkpoint_to_bytes(const Checkpoint& ckpt) {
  nlohmann::json header;
  header["format_version"] = kFormatVersion;
  header["stage"] = to_string(ckpt.stage);
  header["dims"] = dims_to_json(ckpt.net.dims);
  header["lid_injection"] = ckpt.net.lid_injection;
  header["frames_per_token"] = ckpt.frames_per_token;
  nlohmann::json vocab = nlohmann::json::array();
  for (const auto& t : ckpt.vocab.tokens()) vocab.push_back({{"text", t.text}, {"kind", to_string(t.kind)}});
  header["vocabulary"] = std::move(vocab);
  header["languages"] = ckpt.languages.codes();

  std::string out = "XVCK";
  put_u32(out, kFormatVersion);
  const std::string h = header.dump();
  put_u32(out, static_cast<std::uint32_t>(h.size()));
  out += h;
  std::uint32_t count = 0;
  for_each_tensor([&count](const char*, const auto&) { ++count; }, ckpt.net.params);
  put_u32(out, count);
  for_each_tensor(
      [&out](const char* name, const auto& t) {
        const std::string n(name);
        put_u32(out, static_cast<std::uint32_t>(n.size()));
        out += n;
        out += matrix_to_xvfd_bytes(Eigen::MatrixXd(t));
      },
      ckpt.net.params);
  return out;
}

Checkpoint checkpoint_from_bytes(const std::string& bytes) {
  std::size_t pos = 0;
  if (get_bytes(bytes, pos, 4) != "XVCK") throw FormatError("not a checkpoint (bad magic)");
  const std::uint32_t version = get_u32(bytes, pos);
  if (version != kFormatVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version));
  const std::uint32_t hlen = get_u32(bytes, pos);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(get_bytes(bytes, pos, hlen));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint header: ") + e.what());
  }

  Checkpoint c;
  c.stage = stage_from_string(header.at("stage"));
  c.frames_per_token = header.at("frames_per_token");
  std::vector<PhoneticToken> tokens;
  const auto& vj = header.at("vocabulary");
  for (std::size_t i = Vocabulary::kNumReserved; i < vj.size(); ++i) {
    tokens.push_back({vj[i].at("text"), token_kind_from_string(vj[i].at("kind"))});
  }
  c.vocab = Vocabulary(tokens);
  c.languages = LanguageTable(header.at("languages").get<std::vector<std::string>>());
  c.net.dims = dims_from_json(header.at("dims"));
  c.net.lid_injection = header.at("lid_injection");

  const std::uint32_t count = get_u32(bytes, pos);
  std::uint32_t seen = 0;
  for_each_tensor(
      [&](const char* name, auto& t) {
        if (seen++ >= count) throw FormatError("checkpoint is missing tensor " + std::string(name));
        const std::uint32_t nlen = get_u32(bytes, pos);
        const std::string stored = get_bytes(bytes, pos, nlen);
        if (stored != name) throw FormatError("checkpoint tensor order: expected " + std::string(name) + ", got " + stored);
        const Eigen::MatrixXd m = matrix_from_xvfd_bytes(bytes, pos);
        if constexpr (std::decay_t<decltype(t)>::ColsAtCompileTime == 1) {
          if (m.cols() != 1) throw FormatError("tensor " + stored + " should be a vector");
          t = m.col(0);
        } else {
          t = m;
        }
      },
      c.net.params);
  if (seen != count || pos != bytes.size()) throw FormatError("checkpoint has trailing data");

  const auto& p = c.net.params;
  const ModelDims& d = c.net.dims;
  if (p.token_embedding.rows() != c.vocab.size() || p.token_embedding.cols() != d.text_dim ||
      p.injection.lid_embedding.rows() != c.languages.size() || p.w1.cols() != d.input_width() ||
      p.w_out.rows() != d.feature_dim) {
    throw FormatError("checkpoint tensors disagree with the header dimensions");
  }
  return c;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const std::string bytes = checkpoint_to_bytes(ckpt);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  std::ofstream side(path.string() + ".json");
  if (!side) throw FormatError("cannot write sidecar for " + path.string());
  side << ckpt.train_config.dump(2) << '\n';
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  Checkpoint c = checkpoint_from_bytes(ss.str());
  std::ifstream side(path.string() + ".json");
  if (side) {
    try {
      side >> c.train_config;
    } catch (const nlohmann::json::exception&) {
      throw FormatError("malformed checkpoint sidecar " + path.string() + ".json");
    }
  }
  return c;
}

}  // namespace xvoice
