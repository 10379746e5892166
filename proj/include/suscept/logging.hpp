#pragma once

#include <spdlog/spdlog.h>

#include <memory>

namespace suscept {

/// Shared stderr logger. The level comes from SUSCEPT_LOG
/// (error, info or debug; info when unset or unrecognised).
spdlog::logger& log();

}  // namespace suscept
