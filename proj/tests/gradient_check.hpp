#pragma once

// Central-difference gradient checking shared by the unit and acceptance
// suites. The error metric is the infinity norm of the difference scaled by
// the infinity norm of the gradients themselves.

#include <cmath>
#include <functional>
#include <vector>

#include "sdom/matrix.hpp"

namespace gradcheck {

struct Result {
    double max_abs_diff = 0.0;
    double scale = 0.0;
    double relative() const { return max_abs_diff / (scale + 1e-12); }
};

// loss() must evaluate the objective at the current parameter values.
inline Result compare(const std::vector<sdom::Matrix*>& params,
                      const std::vector<const sdom::Matrix*>& analytic,
                      const std::function<double()>& loss, double step = 1e-5) {
    Result res;
    for (std::size_t p = 0; p < params.size(); ++p) {
        for (std::size_t i = 0; i < params[p]->size(); ++i) {
            double& value = params[p]->data()[i];
            const double saved = value;
            value = saved + step;
            const double up = loss();
            value = saved - step;
            const double down = loss();
            value = saved;
            const double fd = (up - down) / (2.0 * step);
            const double an = analytic[p]->data()[i];
            res.max_abs_diff = std::max(res.max_abs_diff, std::abs(an - fd));
            res.scale = std::max({res.scale, std::abs(an), std::abs(fd)});
        }
    }
    return res;
}

} // namespace gradcheck
