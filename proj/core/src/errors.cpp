#include "mic/errors.hpp"

#include <iostream>
#include <mutex>

namespace mic {

void warn(const std::string& message) {
  static std::mutex mu;
  const std::lock_guard<std::mutex> lock(mu);
  std::cerr << "warning: " << message << "\n";
}

}  // namespace mic
