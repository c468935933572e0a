#ifndef CNSPK_ESTIMATE_HPP
#define CNSPK_ESTIMATE_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <stop_token>
#include <string>
#include <string_view>
#include <vector>

#include "cnspk/dataset.hpp"
#include "cnspk/odeint.hpp"
#include "cnspk/parameters.hpp"

namespace cnspk {

/// Loss returned for parameter sets whose integration fails, so the optimizer
/// can keep searching.
inline constexpr double kLossPenalty = 1e12;

/// One row of a bounds file `name,min,max,fixed_value`: either a (min,max)
/// pair or a fixed value.
struct BoundsRow {
    std::string name;
    std::optional<double> min;
    std::optional<double> max;
    std::optional<double> fixed_value;
};

struct EstimatedParameter {
    std::size_t index = 0;
    std::string name;
    double min = 0.0;
    double max = 0.0;
};

/// Which parameters are searched (and in which box); all others are pinned.
struct BoundsSpec {
    std::vector<EstimatedParameter> estimated;
    /// Values of every parameter; estimated entries are overwritten by the
    /// search.
    ParameterSet pinned = ParameterSet::reference();

    /// Rows not mentioned stay at their value in `base`.
    static BoundsSpec from_rows(const std::vector<BoundsRow>& rows, const ParameterSet& base);

    /// Throws InvalidBounds: empty estimated set, min >= max, duplicates, or a
    /// box outside the manifest range.
    void validate() const;

    ParameterSet materialize(const std::vector<double>& member) const;
};

struct DeConfig {
    std::size_t np = 0;  ///< population size; 0 = 10 x estimated dimension
    double f = 0.8;      ///< differential weight
    double cr = 0.9;     ///< crossover rate
    std::size_t max_iter = 200;
    double vtr = 0.0;    ///< stop once best loss <= vtr
    double rel_tol = 1e-8;
    std::size_t stall_window = 50;
    std::uint64_t seed = 1;
    std::size_t threads = 0;  ///< loss evaluations in parallel; 0 = hardware

    std::size_t population_for(std::size_t dimension) const {
        return np == 0 ? 10 * dimension : np;
    }
    void validate(std::size_t dimension) const;
};

enum class TerminationReason { vtr, max_iter, stall, cancelled };

std::string_view to_string(TerminationReason r);

struct EstimationProgress {
    std::size_t iteration = 0;
    double best_loss = 0.0;
    const std::vector<double>* best_member = nullptr;
};

using ProgressSink = std::function<void(const EstimationProgress&)>;

struct EstimationReport {
    ParameterSet best;
    double best_loss = 0.0;
    std::vector<std::string> names;           ///< estimated parameters, search order
    std::vector<double> loss_trace;           ///< best loss per iteration (0 = initial population)
    std::vector<std::vector<double>> member_trace;  ///< best member per iteration
    TerminationReason termination = TerminationReason::max_iter;
    std::size_t evaluations = 0;
    std::uint64_t seed = 0;

    std::size_t iterations() const noexcept {
        return loss_trace.empty() ? 0 : loss_trace.size() - 1;
    }

    friend bool operator==(const EstimationReport&, const EstimationReport&) = default;
};

/// Variance-weighted least squares between observed series and the model
/// solved at the observed times:
///   sum_i sum_j (obs_j(t_i) - model_j(t_i))^2 / (2 sigma_j^2)
/// with sigma_j^2 the sample variance of observed series j (1.0 when below
/// 1e-30). Integration failures yield kLossPenalty.
class LossFunction {
public:
    /// Throws DataError when the dataset has no observed series or fewer than
    /// two time points.
    LossFunction(const ObservedDataset& obs, IntegratorConfig cfg);

    double operator()(const ParameterSet& p) const;

    const std::vector<double>& variances() const noexcept { return variance_; }
    const std::vector<std::size_t>& columns() const noexcept { return columns_; }

private:
    PlasmaProfile profile_;
    std::vector<double> times_;
    std::vector<std::size_t> columns_;
    std::vector<std::vector<double>> observed_;
    std::vector<double> variance_;
    IntegratorConfig cfg_;
};

double loss(const ParameterSet& p, const ObservedDataset& obs, const IntegratorConfig& cfg);

/// sum_j sum_i (observed_j[i] - model_j[i])^2 / (2 variances[j]). Throws
/// InvalidArgument on mismatched shapes.
double weighted_squared_error(const std::vector<std::vector<double>>& observed,
                              const std::vector<std::vector<double>>& model,
                              const std::vector<double>& variances);

/// Sample variance (n - 1 denominator).
double sample_variance(const std::vector<double>& v);

/// DE/rand/1/bin over the estimated subset. Deterministic for a fixed seed,
/// independent of the thread count. Cancellation is checked between
/// generations and yields a partial report with TerminationReason::cancelled.
///
/// Errors: InvalidBounds for an empty estimated set, InfeasibleProblem when
/// every initial member fails to integrate.
EstimationReport estimate(const ObservedDataset& obs, const BoundsSpec& bounds,
                          const DeConfig& de, const IntegratorConfig& icfg,
                          const ProgressSink& progress = {}, std::stop_token stop = {});

struct DeOutcome {
    std::vector<double> best_member;
    double best_loss = 0.0;
    std::vector<double> loss_trace;
    std::vector<std::vector<double>> member_trace;
    TerminationReason termination = TerminationReason::max_iter;
    std::size_t evaluations = 0;
};

using Objective = std::function<double(const std::vector<double>&)>;
/// Sees the whole population after initialization and after every generation.
using PopulationObserver =
    std::function<void(std::size_t iteration, const std::vector<std::vector<double>>& population)>;

/// Generic minimizer behind estimate(); `f` must be safe to call concurrently.
/// Throws InfeasibleProblem when every initial member scores >= kLossPenalty.
DeOutcome differential_evolution(const Objective& f, const std::vector<EstimatedParameter>& box,
                                 const DeConfig& de, const ProgressSink& progress = {},
                                 std::stop_token stop = {},
                                 const PopulationObserver& observer = {});

/// Folds x back into [lo, hi] by mirror reflection at the walls.
double reflect_into(double x, double lo, double hi);

}  // namespace cnspk

#endif  // CNSPK_ESTIMATE_HPP
