#include "sdpc/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include "sdpc/error.hpp"

namespace sdpc {
namespace {

constexpr std::string_view kMagic = "SDPCCKPT";

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

std::uint64_t get_u64(std::string_view in) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[i])) << (8 * i);
  }
  return v;
}

}  // namespace

const Mlp& Checkpoint::network(std::string_view name) const {
  for (const auto& [n, net] : networks) {
    if (n == name) return net;
  }
  throw FormatError("checkpoint has no network named '" + std::string(name) + "'");
}

std::string encode_checkpoint(const Checkpoint& checkpoint) {
  nlohmann::json header;
  header["format"] = 1;
  header["meta"] = checkpoint.meta;
  header["networks"] = nlohmann::json::array();
  for (const auto& [name, net] : checkpoint.networks) {
    header["networks"].push_back(
        {{"name", name}, {"widths", net.widths()}, {"count", net.parameter_count()}});
  }
  const std::string text = header.dump();

  std::string out(kMagic);
  put_u64(out, text.size());
  out += text;
  for (const auto& [name, net] : checkpoint.networks) {
    for (double v : net.parameters()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  if (bytes.size() < 16 || bytes.substr(0, 8) != kMagic) {
    throw FormatError("not a checkpoint (bad magic)");
  }
  const std::uint64_t header_len = get_u64(bytes.substr(8, 8));
  if (header_len > bytes.size() - 16) throw FormatError("checkpoint header truncated");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(16, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint header is not valid JSON: ") + e.what());
  }

  Checkpoint ckpt;
  std::size_t pos = 16 + header_len;
  try {
    if (header.at("format").get<int>() != 1) throw FormatError("unsupported checkpoint format");
    ckpt.meta = header.at("meta");
    for (const auto& entry : header.at("networks")) {
      Mlp net(entry.at("widths").get<std::vector<std::size_t>>());
      const auto count = entry.at("count").get<std::size_t>();
      if (count != net.parameter_count()) {
        throw FormatError("checkpoint parameter count disagrees with layer widths");
      }
      if (bytes.size() - pos < count * 8) throw FormatError("checkpoint data truncated");
      for (double& v : net.parameters()) {
        v = std::bit_cast<double>(get_u64(bytes.substr(pos, 8)));
        pos += 8;
      }
      ckpt.networks.emplace_back(entry.at("name").get<std::string>(), std::move(net));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint header malformed: ") + e.what());
  } catch (const ShapeError& e) {
    throw FormatError(std::string("checkpoint header malformed: ") + e.what());
  }
  if (pos != bytes.size()) throw FormatError("checkpoint has trailing bytes");
  return ckpt;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  const std::string bytes = encode_checkpoint(checkpoint);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw StateError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw StateError("failed writing " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace sdpc
