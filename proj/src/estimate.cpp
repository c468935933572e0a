#include "cnspk/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "cnspk/error.hpp"
#include "csv.hpp"
#include "parallel.hpp"

namespace cnspk {

std::string_view to_string(TerminationReason r) {
    switch (r) {
        case TerminationReason::vtr: return "vtr";
        case TerminationReason::max_iter: return "max-iter";
        case TerminationReason::stall: return "stall";
        case TerminationReason::cancelled: return "cancelled";
    }
    return "unknown";
}

BoundsSpec BoundsSpec::from_rows(const std::vector<BoundsRow>& rows, const ParameterSet& base) {
    static constexpr const char* kSchema = " (bounds schema: name,min,max,fixed_value)";
    const auto& manifest = Manifest::builtin();
    BoundsSpec spec;
    spec.pinned = base;
    std::vector<bool> seen(kParameterCount, false);
    for (const auto& row : rows) {
        const auto idx = manifest.find(row.name);
        if (!idx) throw InvalidBounds("unknown parameter '" + row.name + "'" + kSchema);
        if (seen[*idx]) throw InvalidBounds("duplicate bounds row for " + row.name + kSchema);
        seen[*idx] = true;
        const bool has_box = row.min.has_value() || row.max.has_value();
        if (has_box == row.fixed_value.has_value()) {
            throw InvalidBounds("row " + row.name +
                                " must give either min and max or fixed_value" + kSchema);
        }
        if (row.fixed_value) {
            spec.pinned[*idx] = *row.fixed_value;
            continue;
        }
        if (!row.min || !row.max) {
            throw InvalidBounds("row " + row.name + " needs both min and max" + kSchema);
        }
        spec.estimated.push_back({*idx, manifest[*idx].name, *row.min, *row.max});
    }
    spec.validate();
    return spec;
}

void BoundsSpec::validate() const {
    static constexpr const char* kSchema = " (bounds schema: name,min,max,fixed_value)";
    if (estimated.empty()) {
        throw InvalidBounds("no parameter to estimate: at least one row needs min and max" +
                            std::string(kSchema));
    }
    const auto& manifest = Manifest::builtin();
    std::vector<bool> seen(kParameterCount, false);
    for (const auto& e : estimated) {
        if (e.index >= kParameterCount) throw InvalidBounds("parameter index out of range");
        if (seen[e.index]) throw InvalidBounds("parameter " + e.name + " estimated twice");
        seen[e.index] = true;
        const auto& info = manifest[e.index];
        if (!std::isfinite(e.min) || !std::isfinite(e.max) || !(e.min < e.max)) {
            throw InvalidBounds("bounds for " + info.name + " need finite min < max");
        }
        if (e.min < info.min || e.max > info.max) {
            throw InvalidBounds("bounds for " + info.name + " leave the physical range [" +
                                csv::format_number(info.min) + ", " +
                                csv::format_number(info.max) + "]");
        }
    }
    ParameterSet probe = pinned;
    for (const auto& e : estimated) probe[e.index] = e.min;
    try {
        probe.validate();
    } catch (const ValidationError& err) {
        throw InvalidBounds(std::string("pinned values invalid: ") + err.what());
    }
}

ParameterSet BoundsSpec::materialize(const std::vector<double>& member) const {
    ParameterSet p = pinned;
    for (std::size_t d = 0; d < estimated.size(); ++d) p[estimated[d].index] = member[d];
    return p;
}

void DeConfig::validate(std::size_t dimension) const {
    const std::size_t n = population_for(dimension);
    if (n < 4) throw InvalidArgument("DE population size must be >= 4");
    if (!(f > 0.0 && f <= 2.0)) throw InvalidArgument("DE weight F must be in (0, 2]");
    if (!(cr >= 0.0 && cr <= 1.0)) throw InvalidArgument("DE crossover CR must be in [0, 1]");
    if (max_iter < 1) throw InvalidArgument("DE max_iter must be >= 1");
    if (!(vtr >= 0.0)) throw InvalidArgument("DE vtr must be >= 0");
    if (!(rel_tol >= 0.0)) throw InvalidArgument("DE rel_tol must be >= 0");
    if (stall_window < 1) throw InvalidArgument("DE stall_window must be >= 1");
}

double sample_variance(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return ss / static_cast<double>(v.size() - 1);
}

double weighted_squared_error(const std::vector<std::vector<double>>& observed,
                              const std::vector<std::vector<double>>& model,
                              const std::vector<double>& variances) {
    if (observed.size() != model.size() || observed.size() != variances.size()) {
        throw InvalidArgument("loss: series count mismatch");
    }
    double total = 0.0;
    for (std::size_t j = 0; j < observed.size(); ++j) {
        if (observed[j].size() != model[j].size()) throw InvalidArgument("loss: series length mismatch");
        double acc = 0.0;
        for (std::size_t i = 0; i < observed[j].size(); ++i) {
            const double r = observed[j][i] - model[j][i];
            acc += r * r;
        }
        total += acc / (2.0 * variances[j]);
    }
    return total;
}

LossFunction::LossFunction(const ObservedDataset& obs, IntegratorConfig cfg)
    : profile_(obs.profile()), times_(obs.time), cfg_(cfg) {
    cfg_.validate();
    if (obs.time.size() < 2) throw DataError("loss needs at least 2 time points", 1, 1, "time");
    for (std::size_t c = 0; c < kCompartmentCount; ++c) {
        if (!obs.observed[c]) continue;
        if (obs.observed[c]->size() != obs.time.size()) {
            throw DataError("observed series length differs from time grid", 1, c + 3,
                            std::string(kCompartmentColumns[c]));
        }
        columns_.push_back(c);
        observed_.push_back(*obs.observed[c]);
        const double var = sample_variance(*obs.observed[c]);
        variance_.push_back(var < 1e-30 ? 1.0 : var);
    }
    if (columns_.empty()) {
        throw DataError("loss needs at least one observed compartment column", 1, 3);
    }
}

double LossFunction::operator()(const ParameterSet& p) const {
    Trajectory traj;
    try {
        traj = integrate(p, profile_, times_, cfg_);
    } catch (const ComputationError&) {
        return kLossPenalty;
    }
    std::vector<std::vector<double>> model(columns_.size());
    for (std::size_t j = 0; j < columns_.size(); ++j) model[j] = traj.series(static_cast<Compartment>(columns_[j]));
    const double total = weighted_squared_error(observed_, model, variance_);
    return std::isfinite(total) ? total : kLossPenalty;
}

double loss(const ParameterSet& p, const ObservedDataset& obs, const IntegratorConfig& cfg) {
    return LossFunction(obs, cfg)(p);
}

double reflect_into(double x, double lo, double hi) {
    if (x >= lo && x <= hi) return x;
    const double w = hi - lo;
    double y = std::fmod(x - lo, 2.0 * w);
    if (y < 0.0) y += 2.0 * w;
    const double r = y <= w ? lo + y : hi - (y - w);
    return std::clamp(r, lo, hi);
}

DeOutcome differential_evolution(const Objective& f, const std::vector<EstimatedParameter>& box,
                                 const DeConfig& de, const ProgressSink& progress,
                                 std::stop_token stop, const PopulationObserver& observer) {
    const std::size_t dim = box.size();
    if (dim == 0) throw InvalidBounds("no parameter to estimate");
    de.validate(dim);
    const std::size_t np = de.population_for(dim);

    std::mt19937_64 rng(de.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick_member(0, np - 1);
    std::uniform_int_distribution<std::size_t> pick_gene(0, dim - 1);

    std::vector<std::vector<double>> pop(np, std::vector<double>(dim));
    for (auto& member : pop) {
        for (std::size_t d = 0; d < dim; ++d) {
            member[d] = box[d].min + unit(rng) * (box[d].max - box[d].min);
        }
    }
    std::vector<double> cost(np);
    detail::parallel_for(np, de.threads, [&](std::size_t i) { cost[i] = f(pop[i]); });

    DeOutcome out;
    out.evaluations = np;
    if (std::all_of(cost.begin(), cost.end(), [](double c) { return !(c < kLossPenalty); })) {
        throw InfeasibleProblem("every initial DE member failed to evaluate");
    }

    auto best_index = [&] {
        std::size_t b = 0;
        for (std::size_t i = 1; i < np; ++i) {
            if (cost[i] < cost[b]) b = i;
        }
        return b;
    };
    auto record = [&](std::size_t iteration) {
        const std::size_t b = best_index();
        out.loss_trace.push_back(cost[b]);
        out.member_trace.push_back(pop[b]);
        if (observer) observer(iteration, pop);
        if (progress) progress({iteration, cost[b], &out.member_trace.back()});
    };

    record(0);
    out.termination = TerminationReason::max_iter;
    std::vector<std::vector<double>> trial(np, std::vector<double>(dim));
    std::vector<double> trial_cost(np);

    for (std::size_t gen = 1;; ++gen) {
        if (out.loss_trace.back() <= de.vtr) {
            out.termination = TerminationReason::vtr;
            break;
        }
        if (gen > de.max_iter) {
            out.termination = TerminationReason::max_iter;
            break;
        }
        if (stop.stop_requested()) {
            out.termination = TerminationReason::cancelled;
            break;
        }

        // Trial vectors are drawn from the frozen generation, in member order,
        // so the random stream does not depend on evaluation scheduling.
        for (std::size_t i = 0; i < np; ++i) {
            std::size_t a, b, c;
            do a = pick_member(rng); while (a == i);
            do b = pick_member(rng); while (b == i || b == a);
            do c = pick_member(rng); while (c == i || c == a || c == b);
            const std::size_t forced = pick_gene(rng);
            for (std::size_t d = 0; d < dim; ++d) {
                const double u = unit(rng);
                if (d == forced || u < de.cr) {
                    const double v = pop[a][d] + de.f * (pop[b][d] - pop[c][d]);
                    trial[i][d] = reflect_into(v, box[d].min, box[d].max);
                } else {
                    trial[i][d] = pop[i][d];
                }
            }
        }
        detail::parallel_for(np, de.threads,
                             [&](std::size_t i) { trial_cost[i] = f(trial[i]); });
        out.evaluations += np;
        for (std::size_t i = 0; i < np; ++i) {
            if (trial_cost[i] <= cost[i]) {
                pop[i] = trial[i];
                cost[i] = trial_cost[i];
            }
        }
        record(gen);

        if (gen >= de.stall_window) {
            const double then = out.loss_trace[gen - de.stall_window];
            const double now = out.loss_trace[gen];
            const double improvement = then > 0.0 ? (then - now) / then : 0.0;
            if (improvement < de.rel_tol && now > de.vtr) {
                out.termination = TerminationReason::stall;
                break;
            }
        }
    }

    out.best_loss = out.loss_trace.back();
    out.best_member = out.member_trace.back();
    return out;
}

EstimationReport estimate(const ObservedDataset& obs, const BoundsSpec& bounds,
                          const DeConfig& de, const IntegratorConfig& icfg,
                          const ProgressSink& progress, std::stop_token stop) {
    bounds.validate();
    de.validate(bounds.estimated.size());
    const LossFunction objective(obs, icfg);

    const auto f = [&](const std::vector<double>& member) {
        return objective(bounds.materialize(member));
    };
    const DeOutcome outcome = differential_evolution(f, bounds.estimated, de, progress, stop);

    EstimationReport report;
    report.best = bounds.materialize(outcome.best_member);
    report.best_loss = outcome.best_loss;
    for (const auto& e : bounds.estimated) report.names.push_back(e.name);
    report.loss_trace = outcome.loss_trace;
    report.member_trace = outcome.member_trace;
    report.termination = outcome.termination;
    report.evaluations = outcome.evaluations;
    report.seed = de.seed;
    return report;
}

}  // namespace cnspk
