#pragma once

// Minimal SVG document builder for the diagnostic plots.

#include <string>
#include <string_view>
#include <vector>

namespace mortboost::detail {

struct Rgb {
    int r = 255;
    int g = 255;
    int b = 255;

    std::string hex() const;
    friend bool operator==(const Rgb &, const Rgb &) = default;
};

class Svg {
  public:
    Svg(double width, double height);

    void rect(double x, double y, double w, double h, const Rgb &fill);
    void line(double x1, double y1, double x2, double y2, const Rgb &stroke, double width = 1.0);
    void polyline(const std::vector<std::pair<double, double>> &points, const Rgb &stroke,
                  double width = 1.0);
    void circle(double cx, double cy, double r, const Rgb &fill);
    void text(double x, double y, std::string_view content, double size = 10.0,
              std::string_view anchor = "start");

    std::string finish() const;

  private:
    std::string body_;
    double width_;
    double height_;
};

/// Distinct colours for line series.
Rgb palette(std::size_t index);

} // namespace mortboost::detail
