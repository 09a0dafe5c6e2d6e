#pragma once

#include <string>
#include <vector>

#include "tvws/simulator.hpp"

namespace tvws {

// Self-contained SVG: average channels gained (over gaining devices) versus
// transmit power, one line per city, log-scaled power axis. Published
// reference targets, when known for a city, appear as dashed lines.
std::string gain_chart_svg(const std::vector<GainStats>& runs);

} // namespace tvws
