#pragma once

// Binary checkpoint container:
//
//   bytes 0..7    magic "SDPCCKPT"
//   bytes 8..15   header length H, unsigned 64-bit little-endian
//   next H bytes  UTF-8 JSON header {"format":1,"meta":{...},
//                 "networks":[{"name":..,"widths":[..],"count":..}, ...]}
//   remainder     every network's flat parameters, in header order, as
//                 IEEE-754 binary64 little-endian
//
// Round trips are bit-exact.

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "sdpc/nn.hpp"

namespace sdpc {

struct Checkpoint {
  nlohmann::json meta = nlohmann::json::object();
  std::vector<std::pair<std::string, Mlp>> networks;

  /// Throws FormatError when no network has this name.
  const Mlp& network(std::string_view name) const;
};

std::string encode_checkpoint(const Checkpoint& checkpoint);
Checkpoint decode_checkpoint(std::string_view bytes);

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace sdpc
