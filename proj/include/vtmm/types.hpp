#pragma once

#include <vector>

namespace vtmm {

using Vector = std::vector<double>;

}  // namespace vtmm
