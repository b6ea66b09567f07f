#include "straggler/log.hpp"

#include <cstdlib>
#include <memory>

#include <spdlog/sinks/stdout_sinks.h>

namespace straggler {

spdlog::logger& sim_log() {
  static const std::shared_ptr<spdlog::logger> logger = [] {
    auto l = std::make_shared<spdlog::logger>("straggler", std::make_shared<spdlog::sinks::stderr_sink_st>());
    const char* env = std::getenv("STRAGGLER_SIM_LOG");
    l->set_level(env != nullptr ? spdlog::level::from_str(env) : spdlog::level::warn);
    l->set_pattern("[%l] %v");
    return l;
  }();
  return *logger;
}

}  // namespace straggler
