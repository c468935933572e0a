#ifndef CNSPK_DATAIO_HPP
#define CNSPK_DATAIO_HPP

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cnspk/dataset.hpp"
#include "cnspk/estimate.hpp"
#include "cnspk/odeint.hpp"
#include "cnspk/pkmetrics.hpp"
#include "cnspk/sensitivity.hpp"

namespace cnspk {

/// Input columns, matched case-insensitively.
inline constexpr std::string_view kTimeColumn = "time";
inline constexpr std::string_view kPlasmaColumn = "plasma";
inline constexpr std::string_view kParamNameColumn = "param_name";
inline constexpr std::string_view kParamValueColumn = "param_value";

/// Parses an input file `time,plasma[,Cbb,Cbm,Cccsf,Cscsf][,param_name,param_value]`.
///
/// Columns may come in any order. The parameter pair fills the first rows of
/// the file; rows that carry only a parameter are allowed after the last time
/// point. Every rejection is a DataError with row and column.
ObservedDataset parse_input(std::string_view bytes);

/// Inverse of parse_input: canonical column order, `%.9g` numbers.
std::string export_dataset(const ObservedDataset& data);

/// `time,Cbb,Cbm,Cccsf,Cscsf`
std::string export_table(const Trajectory& traj);
/// `compartment,Cmax,Tmax,AUC`
std::string export_table(const PkSummary& summary);
/// Long format `parameter,multiplier,time,Cbb,Cbm,Cccsf,Cscsf`.
std::string export_table(const SweepResult& sweep);
/// `parameter,multiplier,compartment,Cmax,Tmax,AUC`
std::string export_sweep_metrics(const SweepResult& sweep);
/// `parameter,compartment,time,coefficient`; NaN coefficients are left blank.
std::string export_sweep_coefficients(const SweepResult& sweep);

struct EstimationTables {
    std::string parameters;  ///< `name,value,estimated` for all parameters
    std::string trace;       ///< `iteration,best_loss,<estimated names...>`
};
EstimationTables export_table(const EstimationReport& report);

/// Reads back a trajectory export (timing statistics are not stored).
Trajectory parse_trajectory(std::string_view bytes);

/// `name,value` rows, names canonicalized against the roster.
std::vector<std::pair<std::string, double>> parse_parameter_file(std::string_view bytes);

/// `name,min,max,fixed_value`. A file without data rows is an InvalidBounds
/// error naming the schema.
std::vector<BoundsRow> parse_bounds(std::string_view bytes);

/// Tolerances used to synthesize the sample dataset.
IntegratorConfig sample_integrator();

/// Synthetic single-dose dataset: hourly grid over 48 h, plasma
/// 1.2 (exp(-0.04 t) - exp(-0.7 t)) mg/L, all four compartments simulated
/// from the manifest references, plus the full reference parameter table.
ObservedDataset make_sample_dataset();

}  // namespace cnspk

#endif  // CNSPK_DATAIO_HPP
