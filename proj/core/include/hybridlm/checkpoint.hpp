#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "hybridlm/model.hpp"
#include "hybridlm/tensor.hpp"

#include <json.hpp>

namespace hybridlm {

// Versioned binary container: magic, format version, JSON header, then named
// blocks of little-endian float32. Round trips are bit-exact.
struct Checkpoint {
    nlohmann::json header;
    std::vector<std::pair<std::string, ad::TensorData>> blocks;
};

inline constexpr uint32_t kCheckpointMagic = 0x484C4D43u;  // "HLMC"
inline constexpr uint32_t kCheckpointVersion = 1;

void write_checkpoint(std::ostream& os, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& is);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Model <-> container plumbing.
Checkpoint model_checkpoint(const LanguageModel& model);
LanguageModel model_from_checkpoint(const Checkpoint& ckpt);
void save_model(const std::filesystem::path& path, const LanguageModel& model);
LanguageModel load_model(const std::filesystem::path& path);

// Serialized bytes of a model's checkpoint; used for bit-identity checks.
std::string model_bytes(const LanguageModel& model);

nlohmann::json vocab_to_json(const VocabSpec& v);
VocabSpec vocab_from_json(const nlohmann::json& j);
nlohmann::json model_config_to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const nlohmann::json& j);

}  // namespace hybridlm
