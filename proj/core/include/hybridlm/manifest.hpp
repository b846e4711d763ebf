#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

namespace hybridlm::manifest {

uint64_t fnv1a64(const std::string& bytes);
std::string hash_hex(const std::string& bytes);

// Write-once artifact with collision detection: writing identical bytes to an
// existing path is a no-op, differing bytes are an error. Every write is
// recorded in the directory's MANIFEST (hash, two spaces, filename; sorted).
void write_artifact(const std::filesystem::path& path, const std::string& bytes);
std::string read_file(const std::filesystem::path& path);

void record_in_manifest(const std::filesystem::path& artifact);

}  // namespace hybridlm::manifest
