#include "mhke/hashing.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <memory>
#include <stdexcept>

namespace mhke {
namespace {

struct DigestCtx {
  DigestCtx() : ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free) {
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
      throw std::runtime_error("sha256: init failed");
  }
  void update(const void* data, size_t n) { EVP_DigestUpdate(ctx.get(), data, n); }
  std::array<unsigned char, 32> finish() {
    std::array<unsigned char, 32> out{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), out.data(), &len);
    return out;
  }
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx;
};

std::string to_hex(const std::array<unsigned char, 32>& d) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(64, '0');
  for (size_t i = 0; i < d.size(); ++i) {
    out[2 * i] = kHex[d[i] >> 4];
    out[2 * i + 1] = kHex[d[i] & 0xF];
  }
  return out;
}

}  // namespace

std::string sha256_hex(std::string_view data) {
  DigestCtx ctx;
  ctx.update(data.data(), data.size());
  return to_hex(ctx.finish());
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  DigestCtx ctx;
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    ctx.update(buf.data(), static_cast<size_t>(in.gcount()));
  }
  return to_hex(ctx.finish());
}

std::uint64_t derive_seed(std::uint64_t top_seed, std::string_view label) {
  DigestCtx ctx;
  std::string prefix = std::to_string(top_seed) + ":";
  ctx.update(prefix.data(), prefix.size());
  ctx.update(label.data(), label.size());
  auto d = ctx.finish();
  std::uint64_t out = 0;
  for (int i = 7; i >= 0; --i) out = (out << 8) | d[i];
  return out;
}

}  // namespace mhke
