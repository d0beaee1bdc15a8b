#pragma once

#include <cmath>
#include <vector>

namespace roughfio {

/// Least-squares fit of log2(value) against j. Non-positive values are skipped;
/// fewer than two usable points gives a degenerate fit with slope 0.
struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // root-mean-square residual in log2 units
  std::size_t points = 0;
  bool degenerate = true;
};

inline SlopeFit fit_log2_slope(const std::vector<int>& js, const std::vector<double>& values) {
  SlopeFit fit;
  std::vector<double> x, y;
  for (std::size_t k = 0; k < js.size() && k < values.size(); ++k)
    if (values[k] > 0.0 && std::isfinite(values[k])) {
      x.push_back(js[k]);
      y.push_back(std::log2(values[k]));
    }
  fit.points = x.size();
  if (x.size() < 2) return fit;
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
  }
  if (sxx == 0.0) return fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double e = y[k] - (fit.intercept + fit.slope * x[k]);
    ss += e * e;
  }
  fit.residual = std::sqrt(ss / static_cast<double>(x.size()));
  fit.degenerate = false;
  return fit;
}

}  // namespace roughfio
