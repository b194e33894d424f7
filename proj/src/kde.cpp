#include "sdom/kde.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace sdom {

double gaussian_kernel(double u) {
    static const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    return norm * std::exp(-0.5 * u * u);
}

static double checked_bandwidth(double h) {
    if (!(h > 0.0)) {
        throw std::invalid_argument("kde: bandwidth must be > 0, got " + std::to_string(h));
    }
    return h;
}

double kde_density(double query, std::span<const double> points, const KdeConfig& cfg) {
    if (points.empty()) throw std::invalid_argument("kde_density: empty point set");
    const double h = checked_bandwidth(resolve_bandwidth(points, cfg));
    double sum = 0.0;
    for (double p : points) sum += gaussian_kernel((query - p) / h);
    return sum / (static_cast<double>(points.size()) * h);
}

std::vector<double> density_at_points(std::span<const double> points, const KdeConfig& cfg) {
    if (points.empty()) throw std::invalid_argument("density_at_points: empty point set");
    const double h = checked_bandwidth(resolve_bandwidth(points, cfg));
    const double n = static_cast<double>(points.size());
    std::vector<double> out(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        double sum = 0.0;
        for (double p : points) sum += gaussian_kernel((points[i] - p) / h);
        out[i] = sum / (n * h);
    }
    return out;
}

static double sample_stddev(std::span<const double> points) {
    const double n = static_cast<double>(points.size());
    double mean = 0.0;
    for (double p : points) mean += p;
    mean /= n;
    double ss = 0.0;
    for (double p : points) ss += (p - mean) * (p - mean);
    return std::sqrt(ss / (n - 1.0));
}

static bool all_equal(std::span<const double> points) {
    for (double p : points) {
        if (p != points.front()) return false;
    }
    return true;
}

double silverman_bandwidth(std::span<const double> points) {
    if (points.size() < 2) {
        throw std::invalid_argument("silverman_bandwidth: need at least 2 points");
    }
    if (all_equal(points)) {
        throw std::invalid_argument("silverman_bandwidth: degenerate distribution (zero variance)");
    }
    const double sd = sample_stddev(points);
    if (!(sd > 0.0)) {
        throw std::invalid_argument("silverman_bandwidth: degenerate distribution (zero variance)");
    }
    return 1.06 * sd * std::pow(static_cast<double>(points.size()), -0.2);
}

double resolve_bandwidth(std::span<const double> points, const KdeConfig& cfg) {
    if (cfg.bandwidth_rule == BandwidthRule::silverman && points.size() >= 2 &&
        !all_equal(points) && sample_stddev(points) > 0.0) {
        return silverman_bandwidth(points);
    }
    return cfg.bandwidth;
}

} // namespace sdom
