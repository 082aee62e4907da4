#pragma once

#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fluidc::svg {

using Point = std::pair<double, double>;

std::string escape(std::string_view text);

/// Minimal standalone SVG writer; user units are millimeters.
class Document {
 public:
  Document(double width_mm, double height_mm, double min_x = 0.0, double min_y = 0.0);

  void open_group(std::string_view attrs);
  void close_group();
  void rect(double x, double y, double w, double h, std::string_view attrs);
  void line(double x1, double y1, double x2, double y2, std::string_view attrs);
  void polyline(const std::vector<Point>& points, std::string_view attrs);
  void circle(double cx, double cy, double r, std::string_view attrs);
  void text(double x, double y, std::string_view content, std::string_view attrs);
  void comment(std::string_view content);

  std::string str() const;

 private:
  double width_;
  double height_;
  double min_x_;
  double min_y_;
  std::ostringstream body_;
  int depth_ = 1;
};

}  // namespace fluidc::svg
