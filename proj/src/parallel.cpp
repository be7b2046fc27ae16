#include "spectral_forge/parallel.hpp"

#include <cstdlib>
#include <string>

namespace sforge {

unsigned default_thread_count() {
  if (const char* env = std::getenv("SPECTRAL_FORGE_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
  }
  return std::max(1U, std::thread::hardware_concurrency());
}

}  // namespace sforge
