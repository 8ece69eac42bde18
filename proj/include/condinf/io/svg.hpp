#pragma once

#include <string>

#include "condinf/io/csv.hpp"

namespace condinf {

// Static SVG plots drawn with an internal path emitter; output depends only
// on the input tables (no timestamps).
//
// Coverage: one line per method over component index, a shaded q05..q95 band
// when present, and a dashed 0.95 reference line.
void write_coverage_svg(const std::string& path, const CoverageTable& table);

// Squared bias per component, one line per method, zero reference line.
void write_bias_svg(const std::string& path, const BiasTable& table);

} // namespace condinf
