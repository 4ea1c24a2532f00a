// Shared error types, checks, and logging for the gammase library.

#ifndef GAMMASE_COMMON_H_
#define GAMMASE_COMMON_H_

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>

namespace gammase {

// Invalid caller-supplied data: malformed files, inconsistent shapes,
// out-of-domain parameters.  The CLI maps this to exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An algorithm failed to produce a usable result (non-convergence after
// retries, irrecoverable loss of precision).  The CLI maps this to exit
// code 3.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace internal {
template <typename... Args>
std::string StrCat(const Args&... args) {
  std::ostringstream os;
  (os << ... << args);
  return os.str();
}
}  // namespace internal

#define GS_CHECK_INPUT(cond, ...)                                     \
  do {                                                                \
    if (!(cond))                                                      \
      throw ::gammase::InputError(                                    \
          ::gammase::internal::StrCat("invalid input: ", __VA_ARGS__)); \
  } while (0)

#define GS_CHECK_NUMERIC(cond, ...)                                      \
  do {                                                                   \
    if (!(cond))                                                         \
      throw ::gammase::NumericError(                                     \
          ::gammase::internal::StrCat("numerical failure: ", __VA_ARGS__)); \
  } while (0)

// Non-fatal diagnostics.  Warnings go to stderr so that machine-readable
// output on stdout stays clean.
void Warn(const std::string& msg);
void Info(const std::string& msg);

// Suppresses Info() output (warnings always print).  Used by --quiet.
void SetQuiet(bool quiet);

// FNV-1a, used for corpus/model provenance fingerprints.  Stable across
// platforms; not cryptographic.
std::uint64_t Fnv1a64(const void* data, std::size_t len,
                      std::uint64_t seed = 0xcbf29ce484222325ull);
std::string HashToHex(std::uint64_t h);

}  // namespace gammase

#endif  // GAMMASE_COMMON_H_
