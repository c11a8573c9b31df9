#pragma once

#include <span>

namespace edgeprov::bench {

/// 100 * (t_capture - t_base) / t_base
double overhead_pct(double t_base_ms, double t_capture_ms);

double mean(std::span<const double> xs);
/// Sample standard deviation (n - 1); 0 for fewer than two values.
double stddev(std::span<const double> xs);
/// Half-width of the two-sided 95% Student-t interval of the mean.
double ci95_half_width(std::span<const double> xs);

}  // namespace edgeprov::bench
