#include "gammase/common.h"

#include <atomic>
#include <cstdio>

namespace gammase {

namespace {
std::atomic<bool> g_quiet{false};
}

void SetQuiet(bool quiet) { g_quiet.store(quiet); }

void Warn(const std::string& msg) {
  std::fprintf(stderr, "[gammase] warning: %s\n", msg.c_str());
}

void Info(const std::string& msg) {
  if (!g_quiet.load()) std::fprintf(stderr, "[gammase] %s\n", msg.c_str());
}

std::uint64_t Fnv1a64(const void* data, std::size_t len, std::uint64_t seed) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string HashToHex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace gammase
