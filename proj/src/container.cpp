#include "earpipe/container.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "earpipe/error.hpp"

namespace earpipe::container {

void append_le(std::vector<char>& out, double value) {
  auto bits = std::bit_cast<std::uint64_t>(value);
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<char>(bits & 0xffu));
    bits >>= 8;
  }
}

double read_le(const char* bytes) {
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) {
    bits = (bits << 8) | static_cast<unsigned char>(bytes[i]);
  }
  return std::bit_cast<double>(bits);
}

void write(const std::filesystem::path& path, nlohmann::json header,
           std::span<const double> payload) {
  header["payload_doubles"] = payload.size();
  const std::string text = header.dump();  // dump() without indent never emits '\n'

  std::vector<char> bytes;
  bytes.reserve(text.size() + 1 + payload.size() * 8);
  bytes.insert(bytes.end(), text.begin(), text.end());
  bytes.push_back('\n');
  for (double v : payload) append_le(bytes, v);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot open for writing: " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

Contents read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open: " + path.string());
  const std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                                std::istreambuf_iterator<char>());

  const auto newline = std::find(bytes.begin(), bytes.end(), '\n');
  if (newline == bytes.end()) {
    throw_parse(path.string() + ": byte offset 0: missing header line terminator");
  }
  Contents out;
  try {
    out.header = nlohmann::json::parse(bytes.begin(), newline);
  } catch (const nlohmann::json::parse_error& e) {
    throw_parse(path.string() + ": header line 1, byte offset " + std::to_string(e.byte) +
                ": " + e.what());
  }
  if (!out.header.is_object()) throw_parse(path.string() + ": header is not a JSON object");
  if (!out.header.contains("payload_doubles") ||
      !out.header["payload_doubles"].is_number_unsigned()) {
    throw_parse(path.string() + ": header lacks payload_doubles");
  }

  const auto payload_offset = static_cast<std::size_t>(newline - bytes.begin()) + 1;
  const auto count = out.header["payload_doubles"].get<std::size_t>();
  const std::size_t available = bytes.size() - payload_offset;
  if (available != count * 8) {
    throw_parse(path.string() + ": byte offset " + std::to_string(payload_offset) +
                ": payload holds " + std::to_string(available) + " bytes, header declares " +
                std::to_string(count) + " doubles");
  }
  out.payload.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.payload[i] = read_le(bytes.data() + payload_offset + 8 * i);
  }
  return out;
}

}  // namespace earpipe::container
