#include "cnspk/pkmetrics.hpp"

#include "cnspk/error.hpp"

namespace cnspk {

PkMetrics summarize_series(std::span<const double> times, std::span<const double> values) {
    if (times.size() != values.size()) throw InvalidArgument("times/values length mismatch");
    if (times.size() < 2) throw InvalidArgument("PK metrics need at least 2 points");

    PkMetrics m;
    m.cmax = values[0];
    m.tmax = times[0];
    for (std::size_t i = 1; i < values.size(); ++i) {
        // Strict comparison keeps the earliest time on ties.
        if (values[i] > m.cmax) {
            m.cmax = values[i];
            m.tmax = times[i];
        }
        m.auc += 0.5 * (times[i] - times[i - 1]) * (values[i] + values[i - 1]);
    }
    return m;
}

PkSummary summarize(const Trajectory& traj) {
    if (traj.size() < 2 || traj.states.size() != traj.times.size()) {
        throw InvalidArgument("invalid trajectory: PK metrics need at least 2 points");
    }
    PkSummary s;
    s.t0 = traj.times.front();
    s.t_end = traj.times.back();
    for (std::size_t k = 0; k < kCompartmentCount; ++k) {
        const auto series = traj.series(static_cast<Compartment>(k));
        s.compartments[k] = summarize_series(traj.times, series);
    }
    return s;
}

}  // namespace cnspk
