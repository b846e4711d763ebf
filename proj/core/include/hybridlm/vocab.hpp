#pragma once

#include <string>
#include <vector>

namespace hybridlm {

// Shared character-level vocabulary. Ids 0..4 are reserved; the remaining
// entries are single printable characters. The mask symbol is only ever
// injected by the diffusion masking process, never produced by encode().
struct VocabSpec {
    std::vector<std::string> tokens;
    int pad_id = 0;
    int bos_id = 1;
    int eos_id = 2;
    int sep_id = 3;
    int mask_id = 4;

    static VocabSpec char_vocab();

    int size() const { return static_cast<int>(tokens.size()); }
    bool is_reserved(int id) const { return id == pad_id || id == bos_id || id == eos_id || id == sep_id || id == mask_id; }

    bool can_encode(const std::string& text) const;
    // throws ValidationError on characters outside the vocabulary
    std::vector<int> encode(const std::string& text) const;
    // reserved ids are skipped; everything else renders as its character
    std::string decode(const std::vector<int>& ids) const;
    // cut at the first eos, then drop pad/mask; used for generated blocks
    std::string decode_generated(const std::vector<int>& ids) const;

    void validate() const;
};

}  // namespace hybridlm
