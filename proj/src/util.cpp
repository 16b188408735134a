#include "mweparse/util.hpp"

#include <cstdio>
#include <cstdlib>
#include <iostream>

namespace mweparse {

void warn(const std::string& msg) {
  static const bool quiet = [] {
    const char* v = std::getenv("MWEPARSE_LOG");
    return v != nullptr && std::string(v) == "quiet";
  }();
  if (!quiet) std::cerr << "mweparse: warning: " << msg << "\n";
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = s.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string format_fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

}  // namespace mweparse
