#include "fluidc/svg.hpp"

#include <cmath>

#include "fluidc/fchdl.hpp"

namespace fluidc::svg {

namespace {

std::string num(double v) {
  // Two decimals are well below any seal tolerance.
  double r = std::round(v * 100.0) / 100.0;
  if (r == 0.0) r = 0.0;  // no "-0"
  return format_number(r);
}

}  // namespace

std::string escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

Document::Document(double width_mm, double height_mm, double min_x, double min_y)
    : width_(width_mm), height_(height_mm), min_x_(min_x), min_y_(min_y) {}

void Document::open_group(std::string_view attrs) {
  body_ << std::string(depth_ * 2, ' ') << "<g " << attrs << ">\n";
  ++depth_;
}

void Document::close_group() {
  --depth_;
  body_ << std::string(depth_ * 2, ' ') << "</g>\n";
}

void Document::rect(double x, double y, double w, double h, std::string_view attrs) {
  body_ << std::string(depth_ * 2, ' ') << "<rect x=\"" << num(x) << "\" y=\"" << num(y)
        << "\" width=\"" << num(w) << "\" height=\"" << num(h) << "\" " << attrs << "/>\n";
}

void Document::line(double x1, double y1, double x2, double y2, std::string_view attrs) {
  body_ << std::string(depth_ * 2, ' ') << "<line x1=\"" << num(x1) << "\" y1=\"" << num(y1)
        << "\" x2=\"" << num(x2) << "\" y2=\"" << num(y2) << "\" " << attrs << "/>\n";
}

void Document::polyline(const std::vector<Point>& points, std::string_view attrs) {
  body_ << std::string(depth_ * 2, ' ') << "<polyline points=\"";
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (i) body_ << ' ';
    body_ << num(points[i].first) << ',' << num(points[i].second);
  }
  body_ << "\" " << attrs << "/>\n";
}

void Document::circle(double cx, double cy, double r, std::string_view attrs) {
  body_ << std::string(depth_ * 2, ' ') << "<circle cx=\"" << num(cx) << "\" cy=\"" << num(cy)
        << "\" r=\"" << num(r) << "\" " << attrs << "/>\n";
}

void Document::text(double x, double y, std::string_view content, std::string_view attrs) {
  body_ << std::string(depth_ * 2, ' ') << "<text x=\"" << num(x) << "\" y=\"" << num(y)
        << "\" " << attrs << ">" << escape(content) << "</text>\n";
}

void Document::comment(std::string_view content) {
  std::string safe(content);
  for (std::size_t p; (p = safe.find("--")) != std::string::npos;) safe.replace(p, 2, "- ");
  body_ << std::string(depth_ * 2, ' ') << "<!-- " << safe << " -->\n";
}

std::string Document::str() const {
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"no\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << num(width_)
      << "mm\" height=\"" << num(height_) << "mm\" viewBox=\"" << num(min_x_) << ' '
      << num(min_y_) << ' ' << num(width_) << ' ' << num(height_) << "\">\n"
      << body_.str() << "</svg>\n";
  return out.str();
}

}  // namespace fluidc::svg
