#pragma once

#include <spdlog/spdlog.h>

namespace vtmm {

// Reads VTMM_LOG (trace|debug|info|warn|error|off) once; default warn.
void init_logging();

}  // namespace vtmm
