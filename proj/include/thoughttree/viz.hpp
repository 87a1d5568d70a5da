#pragma once

#include <string>

#include "thoughttree/dataset.hpp"

namespace thoughttree {

inline constexpr double kMinPenWidth = 1.0;
inline constexpr double kMaxPenWidth = 6.0;

// Linear map of an importance in [0, 1] (clamped) onto the pen width range.
double pen_width(double importance);
// Stroke color of an edge of the given function, "#rrggbb".
const char* function_color(ThoughtFunction f) noexcept;

// Graphviz source. Parent->child edges are solid and colored by function;
// each backtracking edge also gets a dashed child->parent arrow. With
// importances, width and opacity scale linearly with the weight.
std::string export_dot(const TreeDocument& doc);

// Standalone page with an inline SVG drawing, the sketch, and the thought
// texts. It references no external resources.
std::string export_html(const TreeDocument& doc);

}  // namespace thoughttree
