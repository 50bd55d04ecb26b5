#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include <json.hpp>

// Self-describing binary container shared by recordings, templates and models:
// a single-line UTF-8 JSON header terminated by '\n', followed by a payload of
// little-endian IEEE-754 doubles. The header records the payload length.
namespace earpipe::container {

struct Contents {
  nlohmann::json header;
  std::vector<double> payload;
};

void write(const std::filesystem::path& path, nlohmann::json header,
           std::span<const double> payload);

Contents read(const std::filesystem::path& path);

// Little-endian packing used by `write`; exposed for tests.
void append_le(std::vector<char>& out, double value);
double read_le(const char* bytes);

}  // namespace earpipe::container
