#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace mweparse {

// Honors MWEPARSE_LOG=quiet.
void warn(const std::string& msg);

// Deterministic portable RNG: raw mt19937_64 bits mapped to doubles directly,
// so sampled values are reproducible across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int below(int n) { return static_cast<int>(gen_() % static_cast<std::uint64_t>(n)); }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[static_cast<std::size_t>(below(static_cast<int>(i)))]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

std::vector<std::string> split(const std::string& s, char sep);

// Fixed-precision decimal formatting; all logs and reports go through this
// so identical runs emit identical bytes.
std::string format_fixed(double v, int decimals);

}  // namespace mweparse
