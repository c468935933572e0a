#ifndef CNSPK_WORKBENCH_HPP
#define CNSPK_WORKBENCH_HPP

// Request vocabulary shared by the CLI and the HTTP service. Both front ends
// turn their input into the same JSON object (flag names equal field names)
// and hand it to parse_request/run_job, so they cannot drift apart.
//
// Request fields:
//   kind         "simulate" | "sweep" | "estimate"
//   params       "manifest-refs" | {name: value, ...}; absent = dataset table
//   rtol, atol   integrator tolerances
//   grid         output points on [t_first, t_last]; 0 = the dataset time grid
//   parameter    swept parameter (sweep)
//   multipliers  sweep factors (sweep)
//   bounds       [{name, min, max, fixed_value}, ...] or the text of a
//                bounds CSV (estimate)
//   np, f, cr, max_iter, vtr, seed   DE settings (estimate)

#include <functional>
#include <optional>
#include <stop_token>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cnspk/dataio.hpp"
#include "cnspk/dataset.hpp"
#include "cnspk/estimate.hpp"
#include "cnspk/sensitivity.hpp"

namespace cnspk {

enum class JobKind { simulate, sweep, estimate };

std::string_view to_string(JobKind kind);
JobKind parse_job_kind(std::string_view s);

struct JobRequest {
    JobKind kind = JobKind::simulate;
    ParameterSet params = ParameterSet::reference();
    IntegratorConfig integrator;
    std::vector<double> output_times;
    std::string parameter;
    std::vector<double> multipliers = kDefaultMultipliers;
    BoundsSpec bounds;
    DeConfig de;
};

/// Validates `body` against `data`. Throws ValidationError subclasses; unknown
/// fields are rejected so misspelled options never pass silently.
JobRequest parse_request(const nlohmann::json& body, const ObservedDataset& data);

struct JobResult {
    JobKind kind = JobKind::simulate;
    Trajectory trajectory;  ///< simulate, and the best fit for estimate
    PkSummary summary;
    std::optional<SweepResult> sweep;
    std::optional<EstimationReport> report;
};

/// Runs a validated request. Progress is reported for estimate only.
/// An estimate stopped through `stop` returns its partial report; simulate and
/// sweep throw Cancelled.
JobResult run_job(const JobRequest& req, const ObservedDataset& data,
                  const ProgressSink& progress = {}, std::stop_token stop = {});

/// (file name, CSV bytes) in a fixed order; names carry no directory.
std::vector<std::pair<std::string, std::string>> result_tables(const JobResult& result);

/// The same tables as JSON arrays of row objects, at full double precision.
nlohmann::json result_json(const JobResult& result);

nlohmann::json manifest_json();
nlohmann::json dataset_json(const ObservedDataset& data);
nlohmann::json parameters_json(const std::vector<std::pair<std::string, double>>& params);
nlohmann::json bounds_json(const std::vector<BoundsRow>& rows);

}  // namespace cnspk

#endif  // CNSPK_WORKBENCH_HPP
