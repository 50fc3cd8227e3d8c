#pragma once

#include <string>

#include "dls/plan_types.hpp"

namespace dls::io {

/// Overhead view of the object position relative to each palm: the planned
/// trajectory in blue, the baseline (if given) in red, goals as green stars.
std::string trajectory_svg(const Plan& ours, const Plan* baseline, const Scenario& s);

}  // namespace dls::io
