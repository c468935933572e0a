#include "cnspk/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "cnspk/error.hpp"
#include "csv.hpp"
#include "parallel.hpp"

namespace cnspk {

namespace {

std::string multiplier_label(double m) { return "multiplier " + csv::format_number(m); }

}  // namespace

void SweepSpec::validate() const {
    Manifest::builtin().index_of(parameter);
    if (multipliers.empty()) throw InvalidArgument("sweep needs at least one multiplier");
    for (std::size_t i = 0; i < multipliers.size(); ++i) {
        const double m = multipliers[i];
        if (!std::isfinite(m) || !(m > 0.0)) {
            throw InvalidArgument("sweep multipliers must be positive and finite");
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (multipliers[j] == m) {
                throw InvalidArgument("duplicate sweep " + multiplier_label(m));
            }
        }
    }
    if (!(perturbation > 0.0 && perturbation < 1.0)) {
        throw InvalidArgument("sweep perturbation must be in (0, 1)");
    }
    if (output_times.size() < 2) throw InvalidArgument("sweep needs an output grid of >= 2 points");
    integrator.validate();
    base.validate();
}

SweepResult run_sweep(const SweepSpec& spec, std::stop_token stop) {
    spec.validate();
    const auto& manifest = Manifest::builtin();
    const std::size_t idx = manifest.index_of(spec.parameter);
    const auto& info = manifest[idx];
    const double base_value = spec.base[idx];

    const std::size_t k = spec.multipliers.size();

    // Jobs 0..k-1 are the curves, k and k+1 the central difference.
    std::vector<ParameterSet> sets;
    sets.reserve(k + 2);
    for (double m : spec.multipliers) {
        // Multiplier 1 keeps the base value bit for bit.
        const double v = m == 1.0 ? base_value : base_value * m;
        if (v < info.min || v > info.max) {
            throw BoundViolation(multiplier_label(m) + " puts " + info.name + " at " +
                                     csv::format_number(v) + ", outside [" +
                                     csv::format_number(info.min) + ", " +
                                     csv::format_number(info.max) + "]",
                                 m);
        }
        ParameterSet p = spec.base;
        p[idx] = v;
        sets.push_back(p);
    }
    const double delta = spec.perturbation;
    for (double sign : {1.0, -1.0}) {
        ParameterSet p = spec.base;
        p[idx] = base_value * (1.0 + sign * delta);
        sets.push_back(p);
    }

    std::vector<std::optional<Trajectory>> runs(sets.size());
    detail::parallel_for(sets.size(), spec.threads, [&](std::size_t i) {
        try {
            runs[i] = integrate(sets[i], spec.plasma, spec.output_times, spec.integrator, stop);
        } catch (const NumericBlowup& e) {
            const double m = i < k ? spec.multipliers[i] : 1.0 + (i == k ? delta : -delta);
            throw NumericBlowup(multiplier_label(m) + ": " + e.what(), e.last_good_time());
        } catch (const IntegrationFailure& e) {
            const double m = i < k ? spec.multipliers[i] : 1.0 + (i == k ? delta : -delta);
            throw IntegrationFailure(multiplier_label(m) + ": " + e.what(), e.last_good_time());
        }
    });

    SweepResult result;
    result.parameter = info.name;
    result.integrations = runs.size();
    result.curves.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        SweepCurve curve;
        curve.multiplier = spec.multipliers[i];
        curve.trajectory = std::move(*runs[i]);
        curve.metrics = summarize(curve.trajectory);
        result.curves.push_back(std::move(curve));
    }

    const Trajectory& plus = *runs[k];
    const Trajectory& minus = *runs[k + 1];
    const auto unit = std::find(spec.multipliers.begin(), spec.multipliers.end(), 1.0);
    const Trajectory* base_curve =
        unit == spec.multipliers.end()
            ? nullptr
            : &result.curves[static_cast<std::size_t>(unit - spec.multipliers.begin())].trajectory;

    for (std::size_t c = 0; c < kCompartmentCount; ++c) {
        auto base_at = [&](std::size_t i) {
            return base_curve ? base_curve->states[i][c]
                              : 0.5 * (plus.states[i][c] + minus.states[i][c]);
        };
        std::size_t at = 0;
        for (std::size_t i = 1; i < plus.size(); ++i) {
            if (base_at(i) > base_at(at)) at = i;
        }
        const double base_conc = base_at(at);
        result.coefficient_times[c] = spec.output_times[at];
        result.coefficients[c] =
            base_conc > spec.integrator.atol
                ? ((plus.states[at][c] - minus.states[at][c]) / base_conc) / (2.0 * delta)
                : std::numeric_limits<double>::quiet_NaN();
    }
    return result;
}

std::array<double, kCompartmentCount> max_relative_change(const Trajectory& base,
                                                          const Trajectory& other) {
    if (base.size() != other.size()) throw InvalidArgument("trajectories differ in length");
    std::array<double, kCompartmentCount> out{};
    for (std::size_t c = 0; c < kCompartmentCount; ++c) {
        double peak = 0.0;
        double diff = 0.0;
        for (std::size_t i = 0; i < base.size(); ++i) {
            peak = std::max(peak, std::abs(base.states[i][c]));
            diff = std::max(diff, std::abs(other.states[i][c] - base.states[i][c]));
        }
        out[c] = peak > 0.0 ? diff / peak : 0.0;
    }
    return out;
}

}  // namespace cnspk
