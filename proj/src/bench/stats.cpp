#include "edgeprov/bench/stats.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <numeric>

#include "edgeprov/error.hpp"

namespace edgeprov::bench {

double overhead_pct(double t_base_ms, double t_capture_ms) {
  if (!(t_base_ms > 0)) throw Error(Errc::InvalidArgument, "baseline time must be positive");
  return 100.0 * (t_capture_ms - t_base_ms) / t_base_ms;
}

double mean(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double stddev(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

double ci95_half_width(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const boost::math::students_t dist(static_cast<double>(xs.size() - 1));
  const double t = boost::math::quantile(boost::math::complement(dist, 0.025));
  return t * stddev(xs) / std::sqrt(static_cast<double>(xs.size()));
}

}  // namespace edgeprov::bench
