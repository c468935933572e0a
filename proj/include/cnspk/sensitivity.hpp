#ifndef CNSPK_SENSITIVITY_HPP
#define CNSPK_SENSITIVITY_HPP

#include <array>
#include <cstddef>
#include <stop_token>
#include <string>
#include <vector>

#include "cnspk/odeint.hpp"
#include "cnspk/parameters.hpp"
#include "cnspk/pkmetrics.hpp"

namespace cnspk {

inline const std::vector<double> kDefaultMultipliers{0.1, 0.5, 1.0, 2.0, 10.0};

/// One-at-a-time sweep of a single parameter.
struct SweepSpec {
    std::string parameter;
    PlasmaProfile plasma;
    std::vector<double> multipliers = kDefaultMultipliers;
    ParameterSet base = ParameterSet::reference();
    std::vector<double> output_times;
    IntegratorConfig integrator;
    /// Relative step of the central difference (+-1% by default).
    double perturbation = 0.01;
    /// Worker threads for the per-multiplier integrations; 0 = hardware.
    std::size_t threads = 0;

    /// Throws UnknownParameter or InvalidArgument (non-positive, non-finite or
    /// duplicated multipliers, bad perturbation, empty grid).
    void validate() const;
};

struct SweepCurve {
    double multiplier = 1.0;
    Trajectory trajectory;
    PkSummary metrics;
};

struct SweepResult {
    std::string parameter;
    std::vector<SweepCurve> curves;  // in multiplier order
    /// Normalized sensitivity S_j = (dC_j / C_j) / (dp / p) by central
    /// difference, evaluated at the base-curve Tmax of compartment j. NaN where
    /// the base concentration there is not above atol.
    std::array<double, kCompartmentCount> coefficients{};
    std::array<double, kCompartmentCount> coefficient_times{};
    /// Integrations performed: one per multiplier plus two for the central
    /// difference.
    std::size_t integrations = 0;
};

/// Runs the sweep. The base curve for the coefficients is the multiplier-1
/// curve when present, otherwise the mean of the two perturbed curves.
///
/// Errors: BoundViolation naming the multiplier when a scaled value leaves its
/// manifest range; integration failures are rethrown as the same error type
/// with the multiplier in the message.
SweepResult run_sweep(const SweepSpec& spec, std::stop_token stop = {});

/// max_t |other_j(t) - base_j(t)| / max_t |base_j(t)| per compartment, on a
/// shared grid. Zero when the base series is identically zero.
std::array<double, kCompartmentCount> max_relative_change(const Trajectory& base,
                                                          const Trajectory& other);

}  // namespace cnspk

#endif  // CNSPK_SENSITIVITY_HPP
