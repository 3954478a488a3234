#include "detail/svg.hpp"

#include <array>
#include <cstdio>

namespace mortboost::detail {

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string escape(std::string_view s) {
    std::string out;
    for (const char c : s) {
        switch (c) {
        case '<':
            out += "&lt;";
            break;
        case '>':
            out += "&gt;";
            break;
        case '&':
            out += "&amp;";
            break;
        case '"':
            out += "&quot;";
            break;
        default:
            out += c;
        }
    }
    return out;
}

} // namespace

std::string Rgb::hex() const {
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r & 0xff, g & 0xff, b & 0xff);
    return buf;
}

Svg::Svg(double width, double height) : width_{width}, height_{height} {}

void Svg::rect(double x, double y, double w, double h, const Rgb &fill) {
    body_ += "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(w) +
             "\" height=\"" + num(h) + "\" fill=\"" + fill.hex() + "\"/>\n";
}

void Svg::line(double x1, double y1, double x2, double y2, const Rgb &stroke, double width) {
    body_ += "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) +
             "\" y2=\"" + num(y2) + "\" stroke=\"" + stroke.hex() + "\" stroke-width=\"" +
             num(width) + "\"/>\n";
}

void Svg::polyline(const std::vector<std::pair<double, double>> &points, const Rgb &stroke,
                   double width) {
    body_ += "<polyline fill=\"none\" stroke=\"" + stroke.hex() + "\" stroke-width=\"" +
             num(width) + "\" points=\"";
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (i > 0) {
            body_ += ' ';
        }
        body_ += num(points[i].first) + "," + num(points[i].second);
    }
    body_ += "\"/>\n";
}

void Svg::circle(double cx, double cy, double r, const Rgb &fill) {
    body_ += "<circle cx=\"" + num(cx) + "\" cy=\"" + num(cy) + "\" r=\"" + num(r) +
             "\" fill=\"" + fill.hex() + "\"/>\n";
}

void Svg::text(double x, double y, std::string_view content, double size,
               std::string_view anchor) {
    body_ += "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-size=\"" + num(size) +
             "\" font-family=\"sans-serif\" text-anchor=\"" + std::string(anchor) + "\">" +
             escape(content) + "</text>\n";
}

std::string Svg::finish() const {
    return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
           "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
           num(width_) + "\" height=\"" + num(height_) + "\" viewBox=\"0 0 " + num(width_) +
           " " + num(height_) + "\">\n" + body_ + "</svg>\n";
}

Rgb palette(std::size_t index) {
    static constexpr std::array<Rgb, 12> colours{{{31, 119, 180},
                                                  {255, 127, 14},
                                                  {44, 160, 44},
                                                  {214, 39, 40},
                                                  {148, 103, 189},
                                                  {140, 86, 75},
                                                  {227, 119, 194},
                                                  {127, 127, 127},
                                                  {188, 189, 34},
                                                  {23, 190, 207},
                                                  {0, 0, 128},
                                                  {128, 0, 0}}};
    return colours[index % colours.size()];
}

} // namespace mortboost::detail
