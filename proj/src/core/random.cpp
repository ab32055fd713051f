#include "unifront/random.hpp"

#include <sstream>

#include "unifront/error.hpp"

namespace unifront {

std::string rng_state(const Rng& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

void set_rng_state(Rng& rng, const std::string& state) {
  std::istringstream is(state);
  is >> rng;
  if (!is) throw ParseError("corrupt RNG state");
}

}  // namespace unifront
