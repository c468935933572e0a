#ifndef CNSPK_ODEINT_HPP
#define CNSPK_ODEINT_HPP

#include <cstddef>
#include <limits>
#include <span>
#include <stop_token>
#include <vector>

#include "cnspk/model.hpp"
#include "cnspk/parameters.hpp"

namespace cnspk {

/// Which integration families the solver may use.
enum class MethodPolicy {
    automatic,      ///< start explicit, switch on the stiffness heuristic
    nonstiff_only,  ///< Dormand-Prince 5(4) only (switching disabled)
    stiff_only,     ///< Radau IIA only
};

struct IntegratorConfig {
    double rtol = 1e-6;
    double atol = 1e-9;    // mg/L
    double h_init = 0.0;   // h; 0 selects the step automatically
    double h_max = std::numeric_limits<double>::infinity();  // h
    std::size_t max_steps = 500000;
    MethodPolicy method = MethodPolicy::automatic;

    /// Throws InvalidArgument when rtol/atol are not positive and finite,
    /// h_init is negative, h_max is not positive or max_steps is 0.
    void validate() const;
};

struct IntegratorStats {
    std::size_t steps = 0;           ///< accepted steps
    std::size_t rejected = 0;        ///< rejected step attempts
    std::size_t nonstiff_steps = 0;  ///< accepted explicit steps
    std::size_t stiff_steps = 0;     ///< accepted implicit steps
    std::size_t nonstiff_segments = 0;  ///< maximal runs of explicit steps
    std::size_t stiff_segments = 0;     ///< maximal runs of implicit steps
    std::size_t switches = 0;

    friend bool operator==(const IntegratorStats&, const IntegratorStats&) = default;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<CompartmentState> states;
    IntegratorStats stats;

    std::size_t size() const noexcept { return times.size(); }
    std::vector<double> series(Compartment k) const;

    friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

/// Solves the brain model from a drug-free state at the first plasma sample
/// and reports the state at exactly `output_times`.
///
/// The solver steps between plasma samples (the forcing has kinks there);
/// output points never shorten the step sequence. Inside explicit steps the
/// state is interpolated with quintic Hermite polynomials built from the exact
/// first and second derivatives of the affine system; inside implicit steps it
/// is re-solved by a Radau side step from the step start.
///
/// Stiffness heuristic: the spectral radius rho of the (constant) Jacobian
/// gives the explicit stability limit h_stab = 3.3 / rho. In explicit mode,
/// five consecutive accepted steps with h >= h_stab / 2 mean the step size is
/// stability-bound, and the solver switches to Radau IIA. In implicit mode,
/// five consecutive accepted steps with h < h_stab / 4 switch back.
///
/// Errors: InvalidArgument for a non-increasing grid or output times before
/// the first plasma sample; IntegrationFailure (carrying the last good time)
/// when the attempted step count exceeds max_steps or the step size
/// underflows; NumericBlowup on non-finite states; Cancelled when `stop` is
/// requested (checked at every output point).
Trajectory integrate(const ParameterSet& p, const PlasmaProfile& profile,
                     std::span<const double> output_times, const IntegratorConfig& cfg = {},
                     std::stop_token stop = {});

/// n uniformly spaced points on [t0, t1], both endpoints included exactly.
std::vector<double> dense_grid(double t0, double t1, std::size_t n);

/// Spectral radius of the model Jacobian (1/h).
double spectral_radius(const SystemMatrix& m);

}  // namespace cnspk

#endif  // CNSPK_ODEINT_HPP
