#include "suscept/logging.hpp"

#include <spdlog/sinks/stdout_sinks.h>

#include <cstdlib>
#include <string>

namespace suscept {

spdlog::logger& log() {
  static std::shared_ptr<spdlog::logger> logger = [] {
    auto l = std::make_shared<spdlog::logger>("suscept", std::make_shared<spdlog::sinks::stderr_sink_st>());
    l->set_pattern("[%l] %v");
    const char* env = std::getenv("SUSCEPT_LOG");
    const std::string level = env ? env : "info";
    if (level == "error") {
      l->set_level(spdlog::level::err);
    } else if (level == "debug") {
      l->set_level(spdlog::level::debug);
    } else {
      l->set_level(spdlog::level::info);
    }
    return l;
  }();
  return *logger;
}

}  // namespace suscept
