#pragma once

#include <span>
#include <vector>

namespace sdom {

enum class Kernel { gaussian };
enum class BandwidthRule { fixed, silverman };

struct KdeConfig {
    Kernel kernel = Kernel::gaussian;
    double bandwidth = 3.0;
    BandwidthRule bandwidth_rule = BandwidthRule::fixed;
};

// K(u) = exp(-u^2 / 2) / sqrt(2 pi)
double gaussian_kernel(double u);

// (1 / (n h)) * sum_i K((query - p_i) / h) over all points, the query's own
// term included when it is one of them.
double kde_density(double query, std::span<const double> points, const KdeConfig& cfg);

// kde_density evaluated at every point against the full list.
std::vector<double> density_at_points(std::span<const double> points, const KdeConfig& cfg);

// 1.06 * sigma_hat * n^(-1/5). Requires n >= 2 and nonzero sample variance.
double silverman_bandwidth(std::span<const double> points);

// Bandwidth a density call actually uses: the configured constant, or the
// Silverman rule when selected. Zero-variance point sets, where the rule is
// undefined, fall back to the constant.
double resolve_bandwidth(std::span<const double> points, const KdeConfig& cfg);

} // namespace sdom
