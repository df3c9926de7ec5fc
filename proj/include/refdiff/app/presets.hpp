#pragma once

#include "refdiff/app/run_spec.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace refdiff::app {

/// rbm-zero-drift, rbm-drift, rou, zhang-case.
std::vector<std::string> preset_names();

/// Throws ValidationError for an unknown name.
RunSpec preset(std::string_view name);

}  // namespace refdiff::app
