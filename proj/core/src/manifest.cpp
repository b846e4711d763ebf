#include "hybridlm/manifest.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "hybridlm/errors.hpp"

namespace hybridlm::manifest {

uint64_t fnv1a64(const std::string& bytes) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hash_hex(const std::string& bytes) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
    return buf;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open '" + path.string() + "'");
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

void write_artifact(const std::filesystem::path& path, const std::string& bytes) {
    if (std::filesystem::exists(path)) {
        const std::string existing = read_file(path);
        if (existing == bytes) {
            record_in_manifest(path);
            return;  // idempotent
        }
        throw ValidationError("artifact collision: '" + path.string() + "' exists with different content");
    }
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw IoError("failed writing '" + path.string() + "'");
    os.close();
    record_in_manifest(path);
}

void record_in_manifest(const std::filesystem::path& artifact) {
    const std::filesystem::path dir = artifact.has_parent_path() ? artifact.parent_path() : ".";
    const std::filesystem::path manifest_path = dir / "MANIFEST";
    std::map<std::string, std::string> entries;
    if (std::filesystem::exists(manifest_path)) {
        std::ifstream is(manifest_path);
        std::string line;
        while (std::getline(is, line)) {
            const size_t gap = line.find("  ");
            if (gap == std::string::npos) continue;
            entries[line.substr(gap + 2)] = line.substr(0, gap);
        }
    }
    entries[artifact.filename().string()] = hash_hex(read_file(artifact));
    std::ofstream os(manifest_path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot write manifest '" + manifest_path.string() + "'");
    for (const auto& [name, hash] : entries) os << hash << "  " << name << "\n";
}

}  // namespace hybridlm::manifest
