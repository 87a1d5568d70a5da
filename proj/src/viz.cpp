#include "thoughttree/viz.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

namespace thoughttree {

namespace {

std::string fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out += c;
  }
  return out;
}

std::string html_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&#39;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string node_name(const TreeNode& n) {
  if (n.id == ReasoningTree::kRoot) return "root";
  std::string s = "T" + std::to_string(n.thought_index);
  if (n.occurrence > 1) s += "." + std::to_string(n.occurrence);
  return s;
}

double importance_of(const TreeDocument& doc, std::size_t edge) {
  return doc.importance ? std::clamp((*doc.importance)[edge], 0.0, 1.0) : 1.0;
}

// Opacity used for an edge of the given importance.
double opacity(double w) { return 0.25 + 0.75 * w; }

std::string hex_alpha(double a) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "%02x", static_cast<int>(std::lround(a * 255)));
  return buf;
}

}  // namespace

double pen_width(double importance) {
  const double w = std::clamp(importance, 0.0, 1.0);
  return kMinPenWidth + (kMaxPenWidth - kMinPenWidth) * w;
}

const char* function_color(ThoughtFunction f) noexcept {
  switch (f) {
    case ThoughtFunction::Continuation: return "#1f77b4";
    case ThoughtFunction::Exploration: return "#2ca02c";
    case ThoughtFunction::Backtracking: return "#d62728";
    case ThoughtFunction::Verification: return "#ff7f0e";
  }
  return "#000000";
}

std::string export_dot(const TreeDocument& doc) {
  const auto& tree = doc.tree;
  std::ostringstream out;
  out << "digraph \"" << dot_escape(doc.sample_id.empty() ? "tree" : doc.sample_id) << "\" {\n";
  out << "  rankdir=TB;\n";
  out << "  node [shape=box, style=\"rounded,filled\", fillcolor=\"#f5f5f5\", fontname=\"Helvetica\"];\n";
  out << "  edge [fontname=\"Helvetica\", fontsize=9];\n";

  std::map<int, std::vector<NodeId>> ranks;
  for (const auto& n : tree.nodes()) {
    ranks[n.step].push_back(n.id);
    out << "  n" << n.id << " [label=\"" << node_name(n) << "\\nstep " << n.step << "\"";
    if (n.imputed) out << ", fillcolor=\"#e8e8e8\", style=\"rounded,filled,dotted\"";
    out << "];\n";
  }
  for (const auto& [step, ids] : ranks) {
    out << "  { rank=same;";
    for (auto id : ids) out << " n" << id << ";";
    out << " }\n";
  }

  for (std::size_t k = 0; k < tree.edges().size(); ++k) {
    const auto& e = tree.edges()[k];
    const double w = importance_of(doc, k);
    const std::string color = std::string(function_color(e.function)) + (doc.importance ? hex_alpha(opacity(w)) : "");
    out << "  n" << e.parent << " -> n" << e.child << " [color=\"" << color << "\", penwidth="
        << fixed(doc.importance ? pen_width(w) : 1.5) << ", label=\"" << to_string(e.function);
    if (doc.importance) out << " " << fixed(w);
    out << "\"];\n";
    if (e.function == ThoughtFunction::Backtracking) {
      out << "  n" << e.child << " -> n" << e.parent << " [style=dashed, constraint=false, color=\"" << color
          << "\"];\n";
    }
  }
  out << "}\n";
  return out.str();
}

std::string export_html(const TreeDocument& doc) {
  const auto& tree = doc.tree;
  // Leaves take consecutive columns in depth-first order; a parent sits over
  // the middle of its children.
  std::vector<double> x(tree.size(), 0.0);
  double next_column = 0;
  std::vector<std::pair<NodeId, bool>> stack{{tree.root(), false}};
  while (!stack.empty()) {
    auto [id, done] = stack.back();
    stack.pop_back();
    const auto& kids = tree.children(id);
    if (kids.empty()) {
      x[id] = next_column++;
    } else if (done) {
      x[id] = (x[kids.front()] + x[kids.back()]) / 2;
    } else {
      stack.push_back({id, true});
      for (auto it = kids.rbegin(); it != kids.rend(); ++it) stack.push_back({*it, false});
    }
  }
  int deepest = 0;
  for (const auto& n : tree.nodes()) deepest = std::max(deepest, n.step);

  const double dx = 90, dy = 90, margin = 50;
  const double width = margin * 2 + dx * std::max(0.0, next_column - 1);
  const double height = margin * 2 + dy * deepest;
  auto px = [&](NodeId id) { return margin + dx * x[id]; };
  auto py = [&](NodeId id) { return margin + dy * tree.node(id).step; };

  std::ostringstream svg;
  svg << "<svg width=\"" << fixed(width, 0) << "\" height=\""
      << fixed(height, 0) << "\" viewBox=\"0 0 " << fixed(width, 0) << " " << fixed(height, 0) << "\">\n";
  for (std::size_t k = 0; k < tree.edges().size(); ++k) {
    const auto& e = tree.edges()[k];
    const double w = importance_of(doc, k);
    const std::string stroke = function_color(e.function);
    const double sw = doc.importance ? pen_width(w) : 1.5;
    const double op = doc.importance ? opacity(w) : 1.0;
    svg << "  <line class=\"edge " << to_string(e.function) << "\" x1=\"" << fixed(px(e.parent)) << "\" y1=\""
        << fixed(py(e.parent)) << "\" x2=\"" << fixed(px(e.child)) << "\" y2=\"" << fixed(py(e.child))
        << "\" stroke=\"" << stroke << "\" stroke-width=\"" << fixed(sw) << "\" stroke-opacity=\"" << fixed(op)
        << "\"><title>" << to_string(e.function);
    if (doc.importance) svg << " " << fixed(w, 3);
    svg << "</title></line>\n";
    if (e.function == ThoughtFunction::Backtracking) {
      const double mx = (px(e.parent) + px(e.child)) / 2 + 25, my = (py(e.parent) + py(e.child)) / 2;
      svg << "  <path class=\"back\" d=\"M " << fixed(px(e.child)) << " " << fixed(py(e.child)) << " Q "
          << fixed(mx) << " " << fixed(my) << " " << fixed(px(e.parent)) << " " << fixed(py(e.parent))
          << "\" fill=\"none\" stroke=\"" << stroke << "\" stroke-dasharray=\"5,4\" stroke-opacity=\"" << fixed(op)
          << "\"/>\n";
    }
  }
  for (const auto& n : tree.nodes()) {
    const std::string text =
        n.thought_index < doc.thoughts.size() ? doc.thoughts[n.thought_index].text : std::string{};
    svg << "  <g class=\"node\"><circle cx=\"" << fixed(px(n.id)) << "\" cy=\"" << fixed(py(n.id))
        << "\" r=\"16\" fill=\"" << (n.imputed ? "#e8e8e8" : "#ffffff") << "\" stroke=\"#444444\"/>"
        << "<text x=\"" << fixed(px(n.id)) << "\" y=\"" << fixed(py(n.id) + 4)
        << "\" text-anchor=\"middle\" font-size=\"10\">" << node_name(n) << "</text><title>"
        << html_escape(node_name(n) + " (step " + std::to_string(n.step) + ")\n" + text) << "</title></g>\n";
  }
  svg << "</svg>\n";

  std::ostringstream html;
  const std::string title = doc.sample_id.empty() ? "reasoning tree" : doc.sample_id;
  html << "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n<title>" << html_escape(title)
       << "</title>\n<style>\n"
       << "body { font-family: sans-serif; margin: 1em; }\n"
       << ".layout { display: flex; gap: 2em; align-items: flex-start; }\n"
       << ".tree { overflow: auto; border: 1px solid #ddd; }\n"
       << ".side { max-width: 36em; }\n"
       << "pre { white-space: pre-wrap; background: #fafafa; padding: 0.4em; }\n"
       << ".legend span { display: inline-block; margin-right: 1em; }\n"
       << "</style>\n</head>\n<body>\n<h1>" << html_escape(title) << "</h1>\n<p class=\"legend\">";
  for (auto f : {ThoughtFunction::Continuation, ThoughtFunction::Exploration, ThoughtFunction::Backtracking,
                 ThoughtFunction::Verification}) {
    html << "<span style=\"color:" << function_color(f) << "\">&#9632; " << to_string(f) << "</span>";
  }
  html << "</p>\n<div class=\"layout\">\n<div class=\"tree\">\n" << svg.str() << "</div>\n<div class=\"side\">\n";
  html << "<h2>Sketch</h2>\n<ol>\n";
  for (const auto& s : doc.sketch.steps) html << "<li>" << html_escape(s.text) << "</li>\n";
  html << "</ol>\n<h2>Thoughts</h2>\n";
  for (const auto& t : doc.thoughts) {
    html << "<details><summary>T" << t.index << " (" << t.token_count << " tokens)</summary><pre>"
         << html_escape(t.text) << "</pre></details>\n";
  }
  html << "</div>\n</div>\n</body>\n</html>\n";
  return html.str();
}

}  // namespace thoughttree
