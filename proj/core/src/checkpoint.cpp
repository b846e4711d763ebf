#include "hybridlm/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "hybridlm/errors.hpp"

static_assert(std::endian::native == std::endian::little, "checkpoint container assumes a little-endian host");

namespace hybridlm {

namespace {

template <typename T>
void write_pod(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw IoError("checkpoint: truncated stream");
    return v;
}

}  // namespace

void write_checkpoint(std::ostream& os, const Checkpoint& ckpt) {
    write_pod(os, kCheckpointMagic);
    write_pod(os, kCheckpointVersion);
    const std::string header = ckpt.header.dump();
    write_pod(os, static_cast<uint64_t>(header.size()));
    os.write(header.data(), static_cast<std::streamsize>(header.size()));
    write_pod(os, static_cast<uint32_t>(ckpt.blocks.size()));
    for (const auto& [name, tensor] : ckpt.blocks) {
        write_pod(os, static_cast<uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_pod(os, static_cast<uint32_t>(tensor.shape.size()));
        for (int d : tensor.shape) write_pod(os, static_cast<int32_t>(d));
        write_pod(os, static_cast<uint64_t>(tensor.data.size()));
        os.write(reinterpret_cast<const char*>(tensor.data.data()),
                 static_cast<std::streamsize>(tensor.data.size() * sizeof(float)));
    }
    if (!os) throw IoError("checkpoint: write failed");
}

Checkpoint read_checkpoint(std::istream& is) {
    if (read_pod<uint32_t>(is) != kCheckpointMagic) throw IoError("checkpoint: bad magic");
    const uint32_t version = read_pod<uint32_t>(is);
    if (version != kCheckpointVersion) {
        throw IoError("checkpoint: unsupported format version " + std::to_string(version));
    }
    const uint64_t hlen = read_pod<uint64_t>(is);
    std::string header(hlen, '\0');
    is.read(header.data(), static_cast<std::streamsize>(hlen));
    if (!is) throw IoError("checkpoint: truncated header");
    Checkpoint ckpt;
    ckpt.header = nlohmann::json::parse(header, nullptr, false);
    if (ckpt.header.is_discarded()) throw IoError("checkpoint: malformed header JSON");
    const uint32_t nblocks = read_pod<uint32_t>(is);
    ckpt.blocks.reserve(nblocks);
    for (uint32_t b = 0; b < nblocks; ++b) {
        const uint32_t nlen = read_pod<uint32_t>(is);
        std::string name(nlen, '\0');
        is.read(name.data(), static_cast<std::streamsize>(nlen));
        const uint32_t ndims = read_pod<uint32_t>(is);
        std::vector<int> shape(ndims);
        for (uint32_t d = 0; d < ndims; ++d) shape[d] = read_pod<int32_t>(is);
        const uint64_t numel = read_pod<uint64_t>(is);
        std::vector<float> data(numel);
        is.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(numel * sizeof(float)));
        if (!is) throw IoError("checkpoint: truncated block '" + name + "'");
        ckpt.blocks.emplace_back(std::move(name), ad::TensorData(std::move(shape), std::move(data)));
    }
    return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
    write_checkpoint(os, ckpt);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open '" + path.string() + "'");
    return read_checkpoint(is);
}

nlohmann::json vocab_to_json(const VocabSpec& v) {
    return nlohmann::json{{"tokens", v.tokens}, {"pad_id", v.pad_id},   {"bos_id", v.bos_id},
                          {"eos_id", v.eos_id}, {"sep_id", v.sep_id},   {"mask_id", v.mask_id}};
}

VocabSpec vocab_from_json(const nlohmann::json& j) {
    VocabSpec v;
    v.tokens = j.at("tokens").get<std::vector<std::string>>();
    v.pad_id = j.at("pad_id").get<int>();
    v.bos_id = j.at("bos_id").get<int>();
    v.eos_id = j.at("eos_id").get<int>();
    v.sep_id = j.at("sep_id").get<int>();
    v.mask_id = j.at("mask_id").get<int>();
    v.validate();
    return v;
}

nlohmann::json model_config_to_json(const ModelConfig& c) {
    return nlohmann::json{{"d_model", c.d_model}, {"n_layers", c.n_layers}, {"n_heads", c.n_heads},
                          {"d_ff", c.d_ff},       {"max_len", c.max_len},   {"mode", mode_name(c.mode)},
                          {"init_seed", c.init_seed}, {"init_std", c.init_std}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.d_model = j.at("d_model").get<int>();
    c.n_layers = j.at("n_layers").get<int>();
    c.n_heads = j.at("n_heads").get<int>();
    c.d_ff = j.at("d_ff").get<int>();
    c.max_len = j.at("max_len").get<int>();
    c.mode = mode_from_name(j.at("mode").get<std::string>());
    c.init_seed = j.value("init_seed", static_cast<uint64_t>(1));
    c.init_std = j.value("init_std", 0.08f);
    c.validate();
    return c;
}

Checkpoint model_checkpoint(const LanguageModel& model) {
    Checkpoint ckpt;
    ckpt.header = nlohmann::json{{"kind", "model"},
                                 {"format_version", kCheckpointVersion},
                                 {"config", model_config_to_json(model.config())},
                                 {"vocab", vocab_to_json(model.vocab())}};
    for (const auto& p : model.params()) ckpt.blocks.emplace_back(p.name, p.node->value);
    return ckpt;
}

LanguageModel model_from_checkpoint(const Checkpoint& ckpt) {
    if (ckpt.header.value("kind", "") != "model") throw ValidationError("checkpoint is not a model checkpoint");
    ModelConfig cfg = model_config_from_json(ckpt.header.at("config"));
    VocabSpec vocab = vocab_from_json(ckpt.header.at("vocab"));
    return LanguageModel(cfg, std::move(vocab), ckpt.blocks);
}

void save_model(const std::filesystem::path& path, const LanguageModel& model) {
    save_checkpoint(path, model_checkpoint(model));
}

LanguageModel load_model(const std::filesystem::path& path) { return model_from_checkpoint(load_checkpoint(path)); }

std::string model_bytes(const LanguageModel& model) {
    std::ostringstream os(std::ios::binary);
    write_checkpoint(os, model_checkpoint(model));
    return os.str();
}

}  // namespace hybridlm
