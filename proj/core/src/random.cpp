#include "asa/random.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace asa {

double Rng::uniform01() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

double Rng::exponential(double rate) {
  if (!(rate > 0.0)) throw std::invalid_argument("exponential rate must be positive");
  // 1 - u lies in (0, 1], so the log is finite.
  return -std::log(1.0 - uniform01()) / rate;
}

double Rng::log_uniform(double lo, double hi) {
  if (!(lo > 0.0) || hi < lo) throw std::invalid_argument("log_uniform needs 0 < lo <= hi");
  return std::exp(uniform(std::log(lo), std::log(hi)));
}

std::string Rng::serialize() const {
  std::ostringstream out;
  out << engine_;
  return out.str();
}

Rng Rng::deserialize(const std::string& state) {
  Rng rng;
  std::istringstream in(state);
  in >> rng.engine_;
  if (in.fail()) throw std::invalid_argument("malformed rng state");
  return rng;
}

}  // namespace asa
