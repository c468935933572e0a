#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include "cnspk/dataio.hpp"
#include "cnspk/error.hpp"
#include "cnspk/service.hpp"
#include "cnspk/workbench.hpp"

namespace cnspk::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidArgument("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidArgument("cannot write '" + path.string() + "'");
    out << bytes;
    if (!out) throw InvalidArgument("cannot write '" + path.string() + "'");
}

fs::path prepare_out(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (!fs::is_directory(dir)) throw InvalidArgument("output directory '" + dir + "' is not usable");
    return dir;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

void print_summary(std::ostream& out, const PkSummary& s) {
    out << std::left << std::setw(12) << "compartment" << std::setw(14) << "Cmax"
        << std::setw(14) << "Tmax" << "AUC\n";
    for (std::size_t c = 0; c < kCompartmentCount; ++c) {
        const auto& m = s.compartments[c];
        out << std::setw(12) << kCompartmentColumns[c] << std::setw(14) << fmt(m.cmax)
            << std::setw(14) << fmt(m.tmax) << fmt(m.auc) << '\n';
    }
}

// Options shared by the computing subcommands; names match the JSON fields.
struct Common {
    std::string input;
    std::string params;
    std::string out = ".";
    std::optional<double> rtol, atol;
    std::optional<std::uint64_t> grid;

    void attach(CLI::App* cmd) {
        cmd->add_option("--input", input, "input CSV (time,plasma[,Cbb,Cbm,Cccsf,Cscsf][,param_name,param_value])")
            ->required();
        cmd->add_option("--params", params,
                        "manifest-refs, or a name,value CSV applied over the input's parameter table");
        cmd->add_option("--out", out, "output directory");
        cmd->add_option("--rtol", rtol, "relative tolerance");
        cmd->add_option("--atol", atol, "absolute tolerance (mg/L)");
        cmd->add_option("--grid", grid, "output points; 0 = the input time grid");
    }

    json request(std::string_view kind) const {
        json body{{"kind", std::string(kind)}};
        if (params == "manifest-refs") {
            body["params"] = "manifest-refs";
        } else if (!params.empty()) {
            body["params"] = parameters_json(parse_parameter_file(read_file(params)));
        }
        if (rtol) body["rtol"] = *rtol;
        if (atol) body["atol"] = *atol;
        if (grid) body["grid"] = *grid;
        return body;
    }
};

int execute(const Common& common, const json& body, std::ostream& out, std::ostream& err) {
    const ObservedDataset data = parse_input(read_file(common.input));
    const JobRequest req = parse_request(body, data);
    const fs::path dir = prepare_out(common.out);

    ProgressSink progress;
    if (req.kind == JobKind::estimate) {
        progress = [&err](const EstimationProgress& p) {
            if (p.iteration % 10 == 0) {
                err << "iteration " << p.iteration << " best_loss " << fmt(p.best_loss) << '\n';
            }
        };
    }
    const JobResult result = run_job(req, data, progress);
    for (const auto& [name, bytes] : result_tables(result)) write_file(dir / name, bytes);

    switch (result.kind) {
        case JobKind::simulate:
            print_summary(out, result.summary);
            break;
        case JobKind::sweep: {
            const auto& s = *result.sweep;
            out << "sweep " << s.parameter << ", " << s.curves.size() << " curves\n";
            for (const auto& curve : s.curves) {
                out << "multiplier " << fmt(curve.multiplier) << '\n';
                print_summary(out, curve.metrics);
            }
            out << "sensitivity at base Tmax:";
            for (std::size_t c = 0; c < kCompartmentCount; ++c) {
                out << ' ' << kCompartmentColumns[c] << '=' << fmt(s.coefficients[c]);
            }
            out << '\n';
            break;
        }
        case JobKind::estimate: {
            const auto& r = *result.report;
            out << "termination: " << to_string(r.termination) << '\n';
            out << "iterations: " << r.iterations() << ", evaluations: " << r.evaluations
                << ", best loss: " << fmt(r.best_loss) << '\n';
            for (const auto& name : r.names) out << name << " = " << fmt(r.best.get(name)) << '\n';
            print_summary(out, result.summary);
            break;
        }
    }
    return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"CNS pharmacokinetics workbench", "cnspk"};
    app.require_subcommand(1);

    Common sim_opts;
    auto* simulate = app.add_subcommand("simulate", "simulate the four brain compartments");
    sim_opts.attach(simulate);

    Common sweep_opts;
    std::string parameter;
    std::vector<double> multipliers;
    auto* sweep = app.add_subcommand("sweep", "one-at-a-time parameter sweep");
    sweep_opts.attach(sweep);
    sweep->add_option("--parameter", parameter, "parameter to sweep")->required();
    sweep->add_option("--multipliers", multipliers, "factors applied to the base value")
        ->delimiter(',');

    Common est_opts;
    std::string bounds;
    std::optional<std::uint64_t> np, max_iter, seed;
    std::optional<double> f, cr, vtr;
    auto* estimate = app.add_subcommand("estimate", "fit parameters by differential evolution");
    est_opts.attach(estimate);
    estimate->add_option("--bounds", bounds, "bounds CSV (name,min,max,fixed_value)")->required();
    estimate->add_option("--np", np, "population size; 0 = 10 x estimated parameters");
    estimate->add_option("--f", f, "differential weight");
    estimate->add_option("--cr", cr, "crossover rate");
    estimate->add_option("--max-iter", max_iter, "maximum generations");
    estimate->add_option("--vtr", vtr, "value to reach");
    estimate->add_option("--seed", seed, "random seed");

    std::string metrics_input;
    std::string metrics_out = ".";
    auto* metrics = app.add_subcommand("metrics", "Cmax, Tmax and AUC of a trajectory table");
    metrics->add_option("--input", metrics_input, "trajectory CSV (time,Cbb,Cbm,Cccsf,Cscsf)")
        ->required();
    metrics->add_option("--out", metrics_out, "output directory");

    std::string host = "127.0.0.1";
    int port = default_port();
    std::size_t workers = 2;
    auto* serve = app.add_subcommand("serve", "run the HTTP service");
    serve->add_option("--host", host, "listen address");
    serve->add_option("--port", port, "listen port (default from CNSPK_PORT, else 8080)");
    serve->add_option("--workers", workers, "jobs computed concurrently");

    std::string sample_out = ".";
    auto* sample = app.add_subcommand("sample", "write the synthetic sample dataset");
    sample->add_option("--out", sample_out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    try {
        if (simulate->parsed()) return execute(sim_opts, sim_opts.request("simulate"), out, err);
        if (sweep->parsed()) {
            json body = sweep_opts.request("sweep");
            body["parameter"] = parameter;
            if (!multipliers.empty()) body["multipliers"] = multipliers;
            return execute(sweep_opts, body, out, err);
        }
        if (estimate->parsed()) {
            json body = est_opts.request("estimate");
            body["bounds"] = read_file(bounds);
            if (np) body["np"] = *np;
            if (f) body["f"] = *f;
            if (cr) body["cr"] = *cr;
            if (max_iter) body["max_iter"] = *max_iter;
            if (vtr) body["vtr"] = *vtr;
            if (seed) body["seed"] = *seed;
            return execute(est_opts, body, out, err);
        }
        if (metrics->parsed()) {
            const Trajectory traj = parse_trajectory(read_file(metrics_input));
            const PkSummary s = summarize(traj);
            write_file(prepare_out(metrics_out) / "pk_summary.csv", export_table(s));
            print_summary(out, s);
            return 0;
        }
        if (sample->parsed()) {
            const fs::path path = prepare_out(sample_out) / "sample.csv";
            write_file(path, export_dataset(make_sample_dataset()));
            out << "wrote " << path.string() << '\n';
            return 0;
        }
        if (serve->parsed()) {
            ServiceConfig cfg;
            cfg.workers = workers;
            Service service(cfg);
            const int bound = service.bind(host, port);
            if (bound < 0) {
                err << "error: cannot listen on " << host << ':' << port << '\n';
                return 1;
            }
            out << "listening on http://" << host << ':' << bound << std::endl;
            service.serve();
            return 0;
        }
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const ComputationError& e) {
        err << "computation failed: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}

}  // namespace cnspk::cli
