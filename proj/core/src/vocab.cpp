#include "hybridlm/vocab.hpp"

#include <array>

#include "hybridlm/errors.hpp"

namespace hybridlm {

namespace {
constexpr const char* kCharset = "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ+-*=?;|:., ()!";

int char_lookup(const VocabSpec& v, char c) {
    for (int i = 0; i < v.size(); ++i) {
        if (v.tokens[i].size() == 1 && v.tokens[i][0] == c) return i;
    }
    return -1;
}
}  // namespace

VocabSpec VocabSpec::char_vocab() {
    VocabSpec v;
    v.tokens = {"<pad>", "<bos>", "<eos>", "<sep>", "<mask>"};
    for (const char* p = kCharset; *p; ++p) v.tokens.push_back(std::string(1, *p));
    v.validate();
    return v;
}

void VocabSpec::validate() const {
    const std::array<int, 5> reserved = {pad_id, bos_id, eos_id, sep_id, mask_id};
    for (size_t i = 0; i < reserved.size(); ++i) {
        if (reserved[i] < 0 || reserved[i] >= size()) {
            throw ValidationError("vocab: reserved id " + std::to_string(reserved[i]) + " out of range");
        }
        for (size_t j = i + 1; j < reserved.size(); ++j) {
            if (reserved[i] == reserved[j]) throw ValidationError("vocab: reserved ids must be distinct");
        }
    }
}

bool VocabSpec::can_encode(const std::string& text) const {
    for (char c : text) {
        if (char_lookup(*this, c) < 0) return false;
    }
    return true;
}

std::vector<int> VocabSpec::encode(const std::string& text) const {
    std::vector<int> ids;
    ids.reserve(text.size());
    for (char c : text) {
        const int id = char_lookup(*this, c);
        if (id < 0) throw ValidationError(std::string("vocab: cannot encode character '") + c + "'");
        ids.push_back(id);
    }
    return ids;
}

std::string VocabSpec::decode(const std::vector<int>& ids) const {
    std::string out;
    for (int id : ids) {
        if (id < 0 || id >= size()) throw ValidationError("vocab: id " + std::to_string(id) + " out of range");
        if (is_reserved(id)) continue;
        out += tokens[id];
    }
    return out;
}

std::string VocabSpec::decode_generated(const std::vector<int>& ids) const {
    std::vector<int> upto;
    for (int id : ids) {
        if (id == eos_id) break;
        upto.push_back(id);
    }
    return decode(upto);
}

}  // namespace hybridlm
