#pragma once

#include <stdexcept>
#include <string>

namespace imti {

// Bad inputs: malformed files, out-of-range values, shape mismatches,
// unusable configs. The CLI maps these to exit code 1; everything else
// that escapes is a runtime failure and maps to 2.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// printf-style formatting into a std::string.
std::string strf(const char* fmt, ...) __attribute__((format(printf, 1, 2)));

// Shortest decimal form that round-trips a double ("%.17g", then trimmed).
std::string format_double(double x);

}  // namespace imti
