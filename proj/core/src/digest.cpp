#include "moa/digest.hpp"

#include <array>
#include <cstdio>

#include <nlohmann/json.hpp>
#include <openssl/sha.h>

namespace moa {

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, SHA256_DIGEST_LENGTH> md{};
  SHA256(reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size(), md.data());
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(md.size() * 2);
  for (unsigned char b : md) {
    out.push_back(kHex[b >> 4]);
    out.push_back(kHex[b & 0x0f]);
  }
  return out;
}

std::string json_digest(const nlohmann::json& value) {
  // nlohmann::json objects are std::map backed, so dump() is key-sorted.
  return sha256_hex(value.dump());
}

}  // namespace moa
