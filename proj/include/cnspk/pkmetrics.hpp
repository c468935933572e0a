#ifndef CNSPK_PKMETRICS_HPP
#define CNSPK_PKMETRICS_HPP

#include <array>
#include <span>

#include "cnspk/model.hpp"
#include "cnspk/odeint.hpp"

namespace cnspk {

struct PkMetrics {
    double cmax = 0.0;  // mg/L
    double tmax = 0.0;  // h, first time the maximum is reached
    double auc = 0.0;   // mg*h/L, linear trapezoid over the whole grid

    friend bool operator==(const PkMetrics&, const PkMetrics&) = default;
};

struct PkSummary {
    std::array<PkMetrics, kCompartmentCount> compartments{};
    double t0 = 0.0;
    double t_end = 0.0;

    const PkMetrics& operator[](Compartment k) const {
        return compartments[static_cast<std::size_t>(k)];
    }

    friend bool operator==(const PkSummary&, const PkSummary&) = default;
};

/// Cmax/Tmax/AUC of one sampled series. Throws InvalidArgument with fewer than
/// two points or mismatched lengths.
PkMetrics summarize_series(std::span<const double> times, std::span<const double> values);

/// Metrics on the reported output grid of a trajectory.
PkSummary summarize(const Trajectory& traj);

}  // namespace cnspk

#endif  // CNSPK_PKMETRICS_HPP
