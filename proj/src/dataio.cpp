#include "cnspk/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "cnspk/error.hpp"
#include "csv.hpp"

namespace cnspk {

namespace {

using csv::format_number;

struct Header {
    std::vector<std::string> names;  // canonical spelling per column
    std::optional<std::size_t> time, plasma, param_name, param_value;
    std::array<std::optional<std::size_t>, kCompartmentCount> observed;
};

// Case-insensitive lookup of one header cell in a fixed vocabulary.
std::optional<std::string> canonical(std::string_view cell,
                                     std::initializer_list<std::string_view> vocabulary) {
    const std::string key = csv::lower(csv::trim(cell));
    for (auto v : vocabulary) {
        if (csv::lower(v) == key) return std::string(v);
    }
    return std::nullopt;
}

Header read_header(const csv::Record& rec) {
    Header h;
    for (std::size_t j = 0; j < rec.fields.size(); ++j) {
        const auto name = canonical(rec.fields[j],
                                    {kTimeColumn, kPlasmaColumn, kCompartmentColumns[0],
                                     kCompartmentColumns[1], kCompartmentColumns[2],
                                     kCompartmentColumns[3], kParamNameColumn, kParamValueColumn});
        const std::string shown(csv::trim(rec.fields[j]));
        if (!name) {
            throw DataError("unknown column '" + shown +
                                "' (expected time, plasma, Cbb, Cbm, Cccsf, Cscsf, "
                                "param_name, param_value)",
                            rec.line, j + 1, shown);
        }
        if (std::find(h.names.begin(), h.names.end(), *name) != h.names.end()) {
            throw DataError("duplicate column '" + *name + "'", rec.line, j + 1, *name);
        }
        h.names.push_back(*name);
        if (*name == kTimeColumn) h.time = j;
        else if (*name == kPlasmaColumn) h.plasma = j;
        else if (*name == kParamNameColumn) h.param_name = j;
        else if (*name == kParamValueColumn) h.param_value = j;
        else {
            for (std::size_t c = 0; c < kCompartmentCount; ++c) {
                if (*name == kCompartmentColumns[c]) h.observed[c] = j;
            }
        }
    }
    std::vector<std::string> missing;
    if (!h.time) missing.emplace_back(kTimeColumn);
    if (!h.plasma) missing.emplace_back(kPlasmaColumn);
    if (!missing.empty()) {
        std::string list = missing[0];
        for (std::size_t i = 1; i < missing.size(); ++i) list += ", " + missing[i];
        throw DataError("missing required column(s): " + list, rec.line,
                        rec.fields.size() + 1, missing[0]);
    }
    if (h.param_name.has_value() != h.param_value.has_value()) {
        const bool has_name = h.param_name.has_value();
        throw DataError(std::string(has_name ? "param_name" : "param_value") +
                            " needs its companion column " +
                            std::string(has_name ? kParamValueColumn : kParamNameColumn),
                        rec.line, rec.fields.size() + 1,
                        std::string(has_name ? kParamValueColumn : kParamNameColumn));
    }
    return h;
}

void check_width(const csv::Record& rec, std::size_t width) {
    if (rec.fields.size() < width) {
        throw DataError("row has " + std::to_string(rec.fields.size()) + " cells, header has " +
                            std::to_string(width),
                        rec.line, rec.fields.size() + 1);
    }
    if (rec.fields.size() > width) {
        throw DataError("row has " + std::to_string(rec.fields.size()) + " cells, header has " +
                            std::to_string(width),
                        rec.line, width + 1);
    }
}

double number_cell(const csv::Record& rec, std::size_t col, const std::string& name) {
    const std::string_view cell = csv::trim(rec.fields[col]);
    if (cell.empty()) throw DataError("missing value", rec.line, col + 1, name);
    const auto v = csv::parse_number(cell);
    if (!v) {
        throw DataError("not a number: '" + std::string(cell) + "'", rec.line, col + 1, name);
    }
    return *v;
}

bool blank(const csv::Record& rec, std::size_t col) { return csv::trim(rec.fields[col]).empty(); }

std::string join(const std::vector<std::string>& cells) {
    std::string line;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) line += ',';
        line += csv::escape(cells[i]);
    }
    line += '\n';
    return line;
}

std::size_t require_column(const csv::Record& header, std::string_view name,
                           const std::string& schema) {
    for (std::size_t j = 0; j < header.fields.size(); ++j) {
        if (csv::lower(csv::trim(header.fields[j])) == csv::lower(name)) return j;
    }
    throw DataError("missing column '" + std::string(name) + "' (schema: " + schema + ")",
                    header.line, header.fields.size() + 1, std::string(name));
}

void reject_extra_columns(const csv::Record& header, std::initializer_list<std::string_view> known,
                          const std::string& schema) {
    for (std::size_t j = 0; j < header.fields.size(); ++j) {
        if (!canonical(header.fields[j], known)) {
            const std::string shown(csv::trim(header.fields[j]));
            throw DataError("unknown column '" + shown + "' (schema: " + schema + ")",
                            header.line, j + 1, shown);
        }
    }
}

}  // namespace

std::size_t ObservedDataset::observed_count() const {
    return static_cast<std::size_t>(
        std::count_if(observed.begin(), observed.end(), [](const auto& s) { return s.has_value(); }));
}

ParameterSet ObservedDataset::apply_parameters(ParameterSet base) const {
    for (const auto& [name, value] : parameters) base.set(name, value);
    return base;
}

ObservedDataset parse_input(std::string_view bytes) {
    const auto records = csv::read(bytes);
    if (records.empty()) throw DataError("empty file: a header row is required", 1, 1);
    const Header h = read_header(records[0]);
    const std::size_t width = records[0].fields.size();
    const auto& manifest = Manifest::builtin();

    ObservedDataset out;
    for (std::size_t c = 0; c < kCompartmentCount; ++c) {
        if (h.observed[c]) out.observed[c].emplace();
    }
    std::vector<bool> seen_param(kParameterCount, false);
    bool trailing = false;

    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& rec = records[r];
        check_width(rec, width);

        bool data_blank = blank(rec, *h.time) && blank(rec, *h.plasma);
        for (const auto& col : h.observed) data_blank = data_blank && (!col || blank(rec, *col));

        const bool param_blank =
            !h.param_name || (blank(rec, *h.param_name) && blank(rec, *h.param_value));

        if (data_blank && param_blank) throw DataError("empty row", rec.line, 1);

        if (!data_blank) {
            if (trailing) {
                throw DataError("time point after parameter-only rows", rec.line, *h.time + 1,
                                std::string(kTimeColumn));
            }
            const double t = number_cell(rec, *h.time, std::string(kTimeColumn));
            if (!out.time.empty() && !(t > out.time.back())) {
                throw DataError("time must be strictly increasing (previous " +
                                    format_number(out.time.back()) + ")",
                                rec.line, *h.time + 1, std::string(kTimeColumn));
            }
            const double cp = number_cell(rec, *h.plasma, std::string(kPlasmaColumn));
            if (cp < 0.0) {
                throw DataError("plasma concentration must be nonnegative", rec.line,
                                *h.plasma + 1, std::string(kPlasmaColumn));
            }
            out.time.push_back(t);
            out.plasma.push_back(cp);
            for (std::size_t c = 0; c < kCompartmentCount; ++c) {
                if (!h.observed[c]) continue;
                const std::string name(kCompartmentColumns[c]);
                if (blank(rec, *h.observed[c])) {
                    throw DataError("gap in observed series " + name, rec.line,
                                    *h.observed[c] + 1, name);
                }
                out.observed[c]->push_back(number_cell(rec, *h.observed[c], name));
            }
        } else {
            trailing = true;
        }

        if (!param_blank) {
            const std::string pname(kParamNameColumn);
            const std::string pvalue(kParamValueColumn);
            if (blank(rec, *h.param_name)) {
                throw DataError("parameter value without a name", rec.line, *h.param_name + 1,
                                pname);
            }
            const std::string_view raw = csv::trim(rec.fields[*h.param_name]);
            const auto idx = manifest.find(raw);
            if (!idx) {
                throw DataError("unknown parameter '" + std::string(raw) + "'", rec.line,
                                *h.param_name + 1, pname);
            }
            if (seen_param[*idx]) {
                throw DataError("duplicate parameter '" + manifest[*idx].name + "'", rec.line,
                                *h.param_name + 1, pname);
            }
            seen_param[*idx] = true;
            const double v = number_cell(rec, *h.param_value, pvalue);
            out.parameters.emplace_back(manifest[*idx].name, v);
        }
    }

    if (out.time.size() < 2) {
        const std::size_t row = records.back().line + 1;
        throw DataError("at least 2 time points are required", row, *h.time + 1,
                        std::string(kTimeColumn));
    }
    return out;
}

std::string export_dataset(const ObservedDataset& data) {
    std::vector<std::string> header{std::string(kTimeColumn), std::string(kPlasmaColumn)};
    for (std::size_t c = 0; c < kCompartmentCount; ++c) {
        if (data.observed[c]) header.emplace_back(kCompartmentColumns[c]);
    }
    const bool params = !data.parameters.empty();
    if (params) {
        header.emplace_back(kParamNameColumn);
        header.emplace_back(kParamValueColumn);
    }
    std::string out = join(header);
    const std::size_t rows = std::max(data.time.size(), data.parameters.size());
    for (std::size_t i = 0; i < rows; ++i) {
        std::vector<std::string> cells;
        const bool point = i < data.time.size();
        cells.push_back(point ? format_number(data.time[i]) : "");
        cells.push_back(point ? format_number(data.plasma[i]) : "");
        for (std::size_t c = 0; c < kCompartmentCount; ++c) {
            if (data.observed[c]) cells.push_back(point ? format_number((*data.observed[c])[i]) : "");
        }
        if (params) {
            const bool has = i < data.parameters.size();
            cells.push_back(has ? data.parameters[i].first : "");
            cells.push_back(has ? format_number(data.parameters[i].second) : "");
        }
        out += join(cells);
    }
    return out;
}

std::string export_table(const Trajectory& traj) {
    std::string out = "time,Cbb,Cbm,Cccsf,Cscsf\n";
    for (std::size_t i = 0; i < traj.size(); ++i) {
        out += format_number(traj.times[i]);
        for (std::size_t c = 0; c < kCompartmentCount; ++c) {
            out += ',';
            out += format_number(traj.states[i][c]);
        }
        out += '\n';
    }
    return out;
}

std::string export_table(const PkSummary& summary) {
    std::string out = "compartment,Cmax,Tmax,AUC\n";
    for (std::size_t c = 0; c < kCompartmentCount; ++c) {
        const auto& m = summary.compartments[c];
        out += join({std::string(kCompartmentColumns[c]), format_number(m.cmax),
                     format_number(m.tmax), format_number(m.auc)});
    }
    return out;
}

std::string export_table(const SweepResult& sweep) {
    std::string out = "parameter,multiplier,time,Cbb,Cbm,Cccsf,Cscsf\n";
    const std::string name = csv::escape(sweep.parameter);
    for (const auto& curve : sweep.curves) {
        const std::string prefix = name + ',' + format_number(curve.multiplier) + ',';
        const auto& traj = curve.trajectory;
        for (std::size_t i = 0; i < traj.size(); ++i) {
            out += prefix;
            out += format_number(traj.times[i]);
            for (std::size_t c = 0; c < kCompartmentCount; ++c) {
                out += ',';
                out += format_number(traj.states[i][c]);
            }
            out += '\n';
        }
    }
    return out;
}

std::string export_sweep_metrics(const SweepResult& sweep) {
    std::string out = "parameter,multiplier,compartment,Cmax,Tmax,AUC\n";
    for (const auto& curve : sweep.curves) {
        for (std::size_t c = 0; c < kCompartmentCount; ++c) {
            const auto& m = curve.metrics.compartments[c];
            out += join({sweep.parameter, format_number(curve.multiplier),
                         std::string(kCompartmentColumns[c]), format_number(m.cmax),
                         format_number(m.tmax), format_number(m.auc)});
        }
    }
    return out;
}

std::string export_sweep_coefficients(const SweepResult& sweep) {
    std::string out = "parameter,compartment,time,coefficient\n";
    for (std::size_t c = 0; c < kCompartmentCount; ++c) {
        const double s = sweep.coefficients[c];
        out += join({sweep.parameter, std::string(kCompartmentColumns[c]),
                     format_number(sweep.coefficient_times[c]),
                     std::isfinite(s) ? format_number(s) : ""});
    }
    return out;
}

EstimationTables export_table(const EstimationReport& report) {
    EstimationTables t;
    t.parameters = "name,value,estimated\n";
    for (std::size_t i = 0; i < kParameterCount; ++i) {
        const std::string name(ParameterSet::name_of(i));
        const bool estimated =
            std::find(report.names.begin(), report.names.end(), name) != report.names.end();
        t.parameters += join({name, format_number(report.best[i]), estimated ? "1" : "0"});
    }
    std::vector<std::string> header{"iteration", "best_loss"};
    header.insert(header.end(), report.names.begin(), report.names.end());
    t.trace = join(header);
    for (std::size_t it = 0; it < report.loss_trace.size(); ++it) {
        std::vector<std::string> cells{std::to_string(it), format_number(report.loss_trace[it])};
        for (double v : report.member_trace[it]) cells.push_back(format_number(v));
        t.trace += join(cells);
    }
    return t;
}

Trajectory parse_trajectory(std::string_view bytes) {
    static const std::string kSchema = "time,Cbb,Cbm,Cccsf,Cscsf";
    const auto records = csv::read(bytes);
    if (records.empty()) throw DataError("empty file (schema: " + kSchema + ")", 1, 1);
    const auto& header = records[0];
    reject_extra_columns(header,
                         {kTimeColumn, kCompartmentColumns[0], kCompartmentColumns[1],
                          kCompartmentColumns[2], kCompartmentColumns[3]},
                         kSchema);
    const std::size_t tcol = require_column(header, kTimeColumn, kSchema);
    std::array<std::size_t, kCompartmentCount> cols{};
    for (std::size_t c = 0; c < kCompartmentCount; ++c) {
        cols[c] = require_column(header, kCompartmentColumns[c], kSchema);
    }
    Trajectory traj;
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& rec = records[r];
        check_width(rec, header.fields.size());
        const double t = number_cell(rec, tcol, std::string(kTimeColumn));
        if (!traj.times.empty() && !(t > traj.times.back())) {
            throw DataError("time must be strictly increasing", rec.line, tcol + 1,
                            std::string(kTimeColumn));
        }
        CompartmentState s;
        for (std::size_t c = 0; c < kCompartmentCount; ++c) {
            s[c] = number_cell(rec, cols[c], std::string(kCompartmentColumns[c]));
        }
        traj.times.push_back(t);
        traj.states.push_back(s);
    }
    return traj;
}

std::vector<std::pair<std::string, double>> parse_parameter_file(std::string_view bytes) {
    static const std::string kSchema = "name,value";
    const auto records = csv::read(bytes);
    if (records.empty()) throw DataError("empty file (schema: " + kSchema + ")", 1, 1);
    const auto& header = records[0];
    reject_extra_columns(header, {"name", "value"}, kSchema);
    const std::size_t ncol = require_column(header, "name", kSchema);
    const std::size_t vcol = require_column(header, "value", kSchema);
    const auto& manifest = Manifest::builtin();
    std::vector<bool> seen(kParameterCount, false);
    std::vector<std::pair<std::string, double>> out;
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& rec = records[r];
        check_width(rec, header.fields.size());
        const std::string_view raw = csv::trim(rec.fields[ncol]);
        const auto idx = manifest.find(raw);
        if (!idx) {
            throw DataError("unknown parameter '" + std::string(raw) + "'", rec.line, ncol + 1,
                            "name");
        }
        if (seen[*idx]) {
            throw DataError("duplicate parameter '" + manifest[*idx].name + "'", rec.line,
                            ncol + 1, "name");
        }
        seen[*idx] = true;
        out.emplace_back(manifest[*idx].name, number_cell(rec, vcol, "value"));
    }
    return out;
}

std::vector<BoundsRow> parse_bounds(std::string_view bytes) {
    static const std::string kSchema = "name,min,max,fixed_value";
    const auto records = csv::read(bytes);
    if (records.size() < 2) {
        throw InvalidBounds("bounds file has no rows (bounds schema: " + kSchema + ")");
    }
    const auto& header = records[0];
    reject_extra_columns(header, {"name", "min", "max", "fixed_value"}, kSchema);
    const std::size_t ncol = require_column(header, "name", kSchema);
    const std::size_t lo = require_column(header, "min", kSchema);
    const std::size_t hi = require_column(header, "max", kSchema);
    const std::size_t fx = require_column(header, "fixed_value", kSchema);
    std::vector<BoundsRow> rows;
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& rec = records[r];
        check_width(rec, header.fields.size());
        BoundsRow row;
        row.name = std::string(csv::trim(rec.fields[ncol]));
        if (row.name.empty()) throw DataError("missing parameter name", rec.line, ncol + 1, "name");
        auto optional_cell = [&](std::size_t col, const char* name) -> std::optional<double> {
            if (blank(rec, col)) return std::nullopt;
            return number_cell(rec, col, name);
        };
        row.min = optional_cell(lo, "min");
        row.max = optional_cell(hi, "max");
        row.fixed_value = optional_cell(fx, "fixed_value");
        const bool has_box = row.min || row.max;
        if (has_box == row.fixed_value.has_value() || (has_box && !(row.min && row.max))) {
            throw DataError("give either min and max or fixed_value (bounds schema: " + kSchema +
                                ")",
                            rec.line, (row.min ? hi : lo) + 1, row.min ? "max" : "min");
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

IntegratorConfig sample_integrator() {
    IntegratorConfig cfg;
    cfg.rtol = 1e-10;
    cfg.atol = 1e-14;
    return cfg;
}

ObservedDataset make_sample_dataset() {
    // Every value is rounded to its exported form so that the in-memory
    // dataset equals the parsed file, and inputs are rounded before simulating
    // so that re-simulating the file reproduces its observed columns.
    const auto rounded = [](double v) { return *csv::parse_number(format_number(v)); };
    ObservedDataset data;
    data.time = dense_grid(0.0, 48.0, 49);
    for (double t : data.time) {
        data.plasma.push_back(rounded(1.2 * (std::exp(-0.04 * t) - std::exp(-0.7 * t))));
    }
    const ParameterSet ref = ParameterSet::reference();
    for (std::size_t i = 0; i < kParameterCount; ++i) {
        data.parameters.emplace_back(std::string(ParameterSet::name_of(i)), rounded(ref[i]));
    }
    const ParameterSet p = data.apply_parameters(ref);
    const Trajectory traj = integrate(p, data.profile(), data.time, sample_integrator());
    for (std::size_t c = 0; c < kCompartmentCount; ++c) {
        auto series = traj.series(static_cast<Compartment>(c));
        for (double& v : series) v = rounded(v);
        data.observed[c] = std::move(series);
    }
    return data;
}

}  // namespace cnspk
