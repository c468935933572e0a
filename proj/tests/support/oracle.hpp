#ifndef CNSPK_TESTS_ORACLE_HPP
#define CNSPK_TESTS_ORACLE_HPP

// Reference computations written independently of the library code paths
// they check. They favour obviousness over speed.

#include <array>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "cnspk/dataset.hpp"
#include "cnspk/model.hpp"
#include "cnspk/parameters.hpp"

namespace oracle {

using State = std::array<double, 4>;

/// Single-peak plasma curve 1.2 (exp(-0.04 t) - exp(-0.7 t)) sampled every
/// `dt` hours on [0, t_end].
cnspk::PlasmaProfile bateman_profile(double t_end, double dt);

/// Manifest reference values scaled by independent log-uniform factors in
/// [1/spread, spread], clipped to the manifest range.
cnspk::ParameterSet random_parameters(std::mt19937_64& rng, double spread = 2.0);

/// Any point of each manifest box, drawn log-uniformly where the range allows.
cnspk::ParameterSet random_valid_parameters(std::mt19937_64& rng);

/// Fixed-step classical RK4 on the affine system rebuilt from the transfer
/// list, stepping exactly onto every plasma sample and output time.
std::vector<State> rk4(const cnspk::ParameterSet& p, const cnspk::PlasmaProfile& profile,
                       const std::vector<double>& outputs, double h);

/// Own piecewise-linear interpolation with constant extrapolation.
double plasma(const cnspk::PlasmaProfile& profile, double t);

/// Per-segment trapezoid sum.
double trapezoid(const std::vector<double>& t, const std::vector<double>& y);

/// The double sum of the weighted least-squares loss over (i, j), with the
/// model supplied column by column.
double weighted_sse(const std::vector<std::vector<double>>& observed,
                    const std::vector<std::vector<double>>& model);

/// Best value of f on an n x n lattice covering [lo0, hi0] x [lo1, hi1],
/// endpoints included.
double grid_minimum(const std::function<double(double, double)>& f, double lo0, double hi0,
                    double lo1, double hi1, int n);

}  // namespace oracle

#endif  // CNSPK_TESTS_ORACLE_HPP
