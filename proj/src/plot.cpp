#include "synse/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "synse/container.hpp"

namespace synse {

namespace {

constexpr double kWidth = 720, kHeight = 400, kLeft = 70, kRight = 150, kTop = 30, kBottom = 50;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

std::string render_loss_svg(const std::vector<EpochRecord>& t) {
  if (t.empty()) throw Error(ErrorKind::Parameter, "empty trajectory: nothing to plot");
  struct Series {
    const char* name;
    const char* color;
    double EpochRecord::*field;
  };
  const Series series[] = {{"total", "#1f77b4", &EpochRecord::total_loss},
                           {"vae", "#2ca02c", &EpochRecord::vae_loss},
                           {"cross-modal", "#d62728", &EpochRecord::cmr_loss}};
  double lo = 0.0, hi = 0.0;
  for (const auto& r : t) {
    for (const auto& s : series) hi = std::max(hi, r.*s.field);
  }
  if (hi <= lo) hi = lo + 1.0;
  const double e0 = static_cast<double>(t.front().epoch);
  const double e1 = std::max(e0 + 1.0, static_cast<double>(t.back().epoch));
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto x = [&](double e) { return kLeft + (e - e0) / (e1 - e0) * pw; };
  auto y = [&](double v) { return kTop + (1.0 - (v - lo) / (hi - lo)) * ph; };

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) +
                    "\" height=\"" + num(kHeight) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop + ph) + "\" x2=\"" + num(kLeft + pw) +
         "\" y2=\"" + num(kTop + ph) + "\" stroke=\"black\"/>\n";
  svg += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop) + "\" x2=\"" + num(kLeft) +
         "\" y2=\"" + num(kTop + ph) + "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = lo + (hi - lo) * i / 4.0;
    svg += "<text x=\"" + num(kLeft - 6) + "\" y=\"" + num(y(v) + 4) +
           "\" text-anchor=\"end\">" + num(v) + "</text>\n";
    const double e = e0 + (e1 - e0) * i / 4.0;
    svg += "<text x=\"" + num(x(e)) + "\" y=\"" + num(kTop + ph + 18) +
           "\" text-anchor=\"middle\">" + std::to_string(static_cast<long long>(std::lround(e))) +
           "</text>\n";
  }
  svg += "<text x=\"" + num(kLeft + pw / 2) + "\" y=\"" + num(kHeight - 10) +
         "\" text-anchor=\"middle\">epoch</text>\n";
  for (std::size_t k = 0; k < std::size(series); ++k) {
    const auto& s = series[k];
    svg += "<polyline fill=\"none\" stroke=\"" + std::string(s.color) + "\" points=\"";
    for (const auto& r : t) {
      svg += num(x(static_cast<double>(r.epoch))) + "," + num(y(r.*s.field)) + " ";
    }
    svg += "\"/>\n";
    const double ly = kTop + 10 + 18.0 * static_cast<double>(k);
    svg += "<line x1=\"" + num(kLeft + pw + 15) + "\" y1=\"" + num(ly) + "\" x2=\"" +
           num(kLeft + pw + 35) + "\" y2=\"" + num(ly) + "\" stroke=\"" + s.color + "\"/>\n";
    svg += "<text x=\"" + num(kLeft + pw + 40) + "\" y=\"" + num(ly + 4) + "\">" + s.name +
           "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

void write_loss_plot(const std::vector<EpochRecord>& t, const std::filesystem::path& path) {
  write_file(path, render_loss_svg(t));
}

}  // namespace synse
