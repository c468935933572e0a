#include "cnspk/workbench.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "cnspk/error.hpp"
#include "csv.hpp"

namespace cnspk {

using nlohmann::json;

namespace {

const std::set<std::string>& known_fields() {
    static const std::set<std::string> fields{
        "kind", "dataset", "params", "rtol", "atol", "grid", "parameter", "multipliers",
        "bounds", "np", "f", "cr", "max_iter", "vtr", "seed"};
    return fields;
}

double number_field(const json& body, const char* key, double fallback) {
    if (!body.contains(key)) return fallback;
    const json& v = body.at(key);
    if (!v.is_number()) throw InvalidArgument(std::string("field '") + key + "' must be a number");
    return v.get<double>();
}

std::uint64_t count_field(const json& body, const char* key, std::uint64_t fallback) {
    if (!body.contains(key)) return fallback;
    const json& v = body.at(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
        return static_cast<std::uint64_t>(v.get<std::int64_t>());
    }
    throw InvalidArgument(std::string("field '") + key + "' must be a nonnegative integer");
}

ParameterSet resolve_params(const json& body, const ObservedDataset& data) {
    if (!body.contains("params")) return data.apply_parameters(ParameterSet::reference());
    const json& v = body.at("params");
    if (v.is_string() && v.get<std::string>() == "manifest-refs") return ParameterSet::reference();
    if (!v.is_object()) {
        throw InvalidArgument("field 'params' must be \"manifest-refs\" or an object of name: value");
    }
    ParameterSet p = data.apply_parameters(ParameterSet::reference());
    for (const auto& [name, value] : v.items()) {
        if (!value.is_number()) {
            throw InvalidArgument("parameter '" + name + "' must be a number");
        }
        p.set(name, value.get<double>());
    }
    return p;
}

std::vector<BoundsRow> resolve_bounds(const json& v) {
    if (v.is_string()) return parse_bounds(v.get<std::string>());
    if (!v.is_array()) {
        throw InvalidBounds(
            "field 'bounds' must be an array of rows or bounds CSV text (bounds schema: "
            "name,min,max,fixed_value)");
    }
    std::vector<BoundsRow> rows;
    for (const json& r : v) {
        if (!r.is_object() || !r.contains("name") || !r.at("name").is_string()) {
            throw InvalidBounds("each bounds row needs a name (bounds schema: name,min,max,fixed_value)");
        }
        BoundsRow row;
        row.name = r.at("name").get<std::string>();
        for (const auto& [key, value] : r.items()) {
            if (key == "name") continue;
            if (key != "min" && key != "max" && key != "fixed_value") {
                throw InvalidBounds("unknown bounds field '" + key +
                                    "' (bounds schema: name,min,max,fixed_value)");
            }
            if (value.is_null()) continue;
            if (!value.is_number()) {
                throw InvalidBounds("bounds field '" + key + "' of " + row.name + " must be a number");
            }
            const double x = value.get<double>();
            (key == "min" ? row.min : key == "max" ? row.max : row.fixed_value) = x;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

json trajectory_rows(const Trajectory& traj) {
    json rows = json::array();
    for (std::size_t i = 0; i < traj.size(); ++i) {
        json row{{"time", traj.times[i]}};
        for (std::size_t c = 0; c < kCompartmentCount; ++c) {
            row[std::string(kCompartmentColumns[c])] = traj.states[i][c];
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

json summary_rows(const PkSummary& s) {
    json rows = json::array();
    for (std::size_t c = 0; c < kCompartmentCount; ++c) {
        const auto& m = s.compartments[c];
        rows.push_back({{"compartment", std::string(kCompartmentColumns[c])},
                        {"Cmax", m.cmax},
                        {"Tmax", m.tmax},
                        {"AUC", m.auc}});
    }
    return rows;
}

json nan_as_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

std::string_view to_string(JobKind kind) {
    switch (kind) {
        case JobKind::simulate: return "simulate";
        case JobKind::sweep: return "sweep";
        case JobKind::estimate: return "estimate";
    }
    return "unknown";
}

JobKind parse_job_kind(std::string_view s) {
    if (s == "simulate") return JobKind::simulate;
    if (s == "sweep") return JobKind::sweep;
    if (s == "estimate") return JobKind::estimate;
    throw InvalidArgument("unknown job kind '" + std::string(s) +
                          "' (expected simulate, sweep or estimate)");
}

JobRequest parse_request(const json& body, const ObservedDataset& data) {
    if (!body.is_object()) throw InvalidArgument("request body must be a JSON object");
    for (const auto& [key, value] : body.items()) {
        if (!known_fields().contains(key)) throw InvalidArgument("unknown field '" + key + "'");
    }
    if (!body.contains("kind") || !body.at("kind").is_string()) {
        throw InvalidArgument("field 'kind' is required");
    }

    JobRequest req;
    req.kind = parse_job_kind(body.at("kind").get<std::string>());
    req.params = resolve_params(body, data);
    req.params.validate();

    req.integrator.rtol = number_field(body, "rtol", req.integrator.rtol);
    req.integrator.atol = number_field(body, "atol", req.integrator.atol);
    req.integrator.validate();

    const std::uint64_t grid = count_field(body, "grid", 0);
    if (grid == 1) throw InvalidArgument("field 'grid' must be 0 or at least 2");
    if (grid > 10'000'000) throw InvalidArgument("field 'grid' is too large");
    req.output_times = grid == 0 ? data.time
                                 : dense_grid(data.time.front(), data.time.back(),
                                              static_cast<std::size_t>(grid));

    if (req.kind == JobKind::sweep) {
        if (!body.contains("parameter") || !body.at("parameter").is_string()) {
            throw InvalidArgument("sweep needs field 'parameter'");
        }
        const auto& manifest = Manifest::builtin();
        req.parameter = manifest[manifest.index_of(body.at("parameter").get<std::string>())].name;
        if (body.contains("multipliers")) {
            const json& m = body.at("multipliers");
            if (!m.is_array()) throw InvalidArgument("field 'multipliers' must be an array");
            req.multipliers.clear();
            for (const json& x : m) {
                if (!x.is_number()) throw InvalidArgument("multipliers must be numbers");
                req.multipliers.push_back(x.get<double>());
            }
        }
        SweepSpec probe{req.parameter, data.profile(), req.multipliers, req.params,
                        req.output_times, req.integrator};
        probe.validate();
    }

    if (req.kind == JobKind::estimate) {
        if (!body.contains("bounds")) {
            throw InvalidBounds("estimate needs field 'bounds' (bounds schema: name,min,max,fixed_value)");
        }
        req.bounds = BoundsSpec::from_rows(resolve_bounds(body.at("bounds")), req.params);
        if (data.observed_count() == 0) {
            throw DataError("estimate needs at least one observed column (Cbb, Cbm, Cccsf, Cscsf)",
                            1, 3);
        }
        req.de.np = static_cast<std::size_t>(count_field(body, "np", req.de.np));
        req.de.f = number_field(body, "f", req.de.f);
        req.de.cr = number_field(body, "cr", req.de.cr);
        req.de.max_iter = static_cast<std::size_t>(count_field(body, "max_iter", req.de.max_iter));
        req.de.vtr = number_field(body, "vtr", req.de.vtr);
        req.de.seed = count_field(body, "seed", req.de.seed);
        req.de.validate(req.bounds.estimated.size());
    }
    return req;
}

JobResult run_job(const JobRequest& req, const ObservedDataset& data,
                  const ProgressSink& progress, std::stop_token stop) {
    JobResult out;
    out.kind = req.kind;
    const PlasmaProfile profile = data.profile();
    switch (req.kind) {
        case JobKind::simulate:
            out.trajectory = integrate(req.params, profile, req.output_times, req.integrator, stop);
            out.summary = summarize(out.trajectory);
            break;
        case JobKind::sweep: {
            SweepSpec spec{req.parameter, profile, req.multipliers, req.params,
                           req.output_times, req.integrator};
            out.sweep = run_sweep(spec, stop);
            break;
        }
        case JobKind::estimate:
            out.report = estimate(data, req.bounds, req.de, req.integrator, progress, stop);
            // The best fit is reported even for a cancelled search.
            out.trajectory = integrate(out.report->best, profile, req.output_times, req.integrator);
            out.summary = summarize(out.trajectory);
            break;
    }
    return out;
}

std::vector<std::pair<std::string, std::string>> result_tables(const JobResult& result) {
    std::vector<std::pair<std::string, std::string>> t;
    switch (result.kind) {
        case JobKind::simulate:
            t.emplace_back("trajectory.csv", export_table(result.trajectory));
            t.emplace_back("pk_summary.csv", export_table(result.summary));
            break;
        case JobKind::sweep:
            t.emplace_back("sweep_curves.csv", export_table(*result.sweep));
            t.emplace_back("sweep_metrics.csv", export_sweep_metrics(*result.sweep));
            t.emplace_back("sweep_coefficients.csv", export_sweep_coefficients(*result.sweep));
            break;
        case JobKind::estimate: {
            auto tables = export_table(*result.report);
            t.emplace_back("estimate_parameters.csv", std::move(tables.parameters));
            t.emplace_back("estimate_trace.csv", std::move(tables.trace));
            t.emplace_back("estimate_trajectory.csv", export_table(result.trajectory));
            t.emplace_back("pk_summary.csv", export_table(result.summary));
            break;
        }
    }
    return t;
}

json result_json(const JobResult& result) {
    json out{{"kind", std::string(to_string(result.kind))}};
    json tables = json::object();
    switch (result.kind) {
        case JobKind::simulate:
            tables["trajectory"] = trajectory_rows(result.trajectory);
            tables["pk_summary"] = summary_rows(result.summary);
            break;
        case JobKind::sweep: {
            const SweepResult& s = *result.sweep;
            json curves = json::array();
            json metrics = json::array();
            for (const auto& curve : s.curves) {
                for (json row : trajectory_rows(curve.trajectory)) {
                    json full{{"parameter", s.parameter}, {"multiplier", curve.multiplier}};
                    full.update(row);
                    curves.push_back(std::move(full));
                }
                for (json row : summary_rows(curve.metrics)) {
                    json full{{"parameter", s.parameter}, {"multiplier", curve.multiplier}};
                    full.update(row);
                    metrics.push_back(std::move(full));
                }
            }
            json coeffs = json::array();
            for (std::size_t c = 0; c < kCompartmentCount; ++c) {
                coeffs.push_back({{"parameter", s.parameter},
                                  {"compartment", std::string(kCompartmentColumns[c])},
                                  {"time", s.coefficient_times[c]},
                                  {"coefficient", nan_as_null(s.coefficients[c])}});
            }
            tables["sweep_curves"] = std::move(curves);
            tables["sweep_metrics"] = std::move(metrics);
            tables["sweep_coefficients"] = std::move(coeffs);
            out["integrations"] = s.integrations;
            break;
        }
        case JobKind::estimate: {
            const EstimationReport& r = *result.report;
            json params = json::array();
            for (std::size_t i = 0; i < kParameterCount; ++i) {
                const std::string name(ParameterSet::name_of(i));
                const bool est = std::find(r.names.begin(), r.names.end(), name) != r.names.end();
                params.push_back({{"name", name}, {"value", r.best[i]}, {"estimated", est ? 1 : 0}});
            }
            json trace = json::array();
            for (std::size_t it = 0; it < r.loss_trace.size(); ++it) {
                json row{{"iteration", it}, {"best_loss", r.loss_trace[it]}};
                for (std::size_t d = 0; d < r.names.size(); ++d) {
                    row[r.names[d]] = r.member_trace[it][d];
                }
                trace.push_back(std::move(row));
            }
            tables["estimate_parameters"] = std::move(params);
            tables["estimate_trace"] = std::move(trace);
            tables["estimate_trajectory"] = trajectory_rows(result.trajectory);
            tables["pk_summary"] = summary_rows(result.summary);
            out["best_loss"] = r.best_loss;
            out["termination"] = std::string(to_string(r.termination));
            out["iterations"] = r.iterations();
            out["evaluations"] = r.evaluations;
            out["seed"] = r.seed;
            break;
        }
    }
    out["tables"] = std::move(tables);
    return out;
}

json manifest_json() {
    json rows = json::array();
    for (const auto& e : Manifest::builtin().entries()) {
        rows.push_back({{"name", e.name},
                        {"description", e.description},
                        {"unit", e.unit},
                        {"ref_value", e.ref_value},
                        {"min", e.min},
                        {"max", e.max}});
    }
    return rows;
}

json dataset_json(const ObservedDataset& data) {
    json observed = json::object();
    for (std::size_t c = 0; c < kCompartmentCount; ++c) {
        if (data.observed[c]) observed[std::string(kCompartmentColumns[c])] = *data.observed[c];
    }
    return {{"time", data.time},
            {"plasma", data.plasma},
            {"observed", std::move(observed)},
            {"parameters", parameters_json(data.parameters)}};
}

json parameters_json(const std::vector<std::pair<std::string, double>>& params) {
    json obj = json::object();
    for (const auto& [name, value] : params) obj[name] = value;
    return obj;
}

json bounds_json(const std::vector<BoundsRow>& rows) {
    json out = json::array();
    for (const auto& r : rows) {
        json row{{"name", r.name}};
        if (r.min) row["min"] = *r.min;
        if (r.max) row["max"] = *r.max;
        if (r.fixed_value) row["fixed_value"] = *r.fixed_value;
        out.push_back(std::move(row));
    }
    return out;
}

}  // namespace cnspk
