#pragma once
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace dtwin::io {

using json = nlohmann::json;

std::string read_file(const std::filesystem::path& p);
void write_file(const std::filesystem::path& p, const std::string& content);

json load_json(const std::filesystem::path& p);
void save_json(const std::filesystem::path& p, const json& j);

// FNV-1a over the raw bytes; cheap content fingerprint for manifests.
std::uint64_t fnv1a64(const std::string& bytes);
std::string hash_hex(const std::string& bytes);
std::string file_hash_hex(const std::filesystem::path& p);

// Doubles are printed with 17 significant digits so a written value parses
// back to the identical bit pattern.
std::string format_double(double v);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(const std::filesystem::path& p);
void write_csv(const std::filesystem::path& p, const CsvTable& t);

}  // namespace dtwin::io
