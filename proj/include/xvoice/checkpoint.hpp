#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"
#include "xvoice/field_net.hpp"
#include "xvoice/language.hpp"
#include "xvoice/phonemes.hpp"

namespace xvoice {

enum class Stage { s1, s2 };

std::string to_string(Stage stage);
Stage stage_from_string(const std::string& name);

struct Checkpoint {
  Stage stage = Stage::s1;
  FieldNet net;
  Vocabulary vocab;
  LanguageTable languages;
  int frames_per_token = 4;
  nlohmann::json train_config;  // provenance, written to the sidecar
};

Checkpoint init_checkpoint(const Vocabulary& vocab, const LanguageTable& languages, const ModelDims& dims,
                           bool lid_injection, std::uint64_t seed);

// Binary: "XVCK", u32 version, u32 header length, JSON header (stage, dims,
// vocabulary, LID table), u32 tensor count, then per tensor u32 name length,
// name, XVFD block. The TrainConfig goes to `<path>.json`.
void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);

std::string checkpoint_to_bytes(const Checkpoint& ckpt);
Checkpoint checkpoint_from_bytes(const std::string& bytes);

}  // namespace xvoice
