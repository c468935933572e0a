#include "oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace oracle {

cnspk::PlasmaProfile bateman_profile(double t_end, double dt) {
    std::vector<double> t, c;
    const int n = static_cast<int>(std::lround(t_end / dt));
    for (int i = 0; i <= n; ++i) {
        const double x = dt * i;
        t.push_back(x);
        c.push_back(1.2 * (std::exp(-0.04 * x) - std::exp(-0.7 * x)));
    }
    return {t, c};
}

cnspk::ParameterSet random_parameters(std::mt19937_64& rng, double spread) {
    const auto& manifest = cnspk::Manifest::builtin();
    std::uniform_real_distribution<double> u(-std::log(spread), std::log(spread));
    cnspk::ParameterSet p = cnspk::ParameterSet::reference();
    for (std::size_t i = 0; i < cnspk::kParameterCount; ++i) {
        p[i] = std::clamp(p[i] * std::exp(u(rng)), manifest[i].min, manifest[i].max);
    }
    return p;
}

cnspk::ParameterSet random_valid_parameters(std::mt19937_64& rng) {
    const auto& manifest = cnspk::Manifest::builtin();
    std::uniform_real_distribution<double> u(0.0, 1.0);
    cnspk::ParameterSet p;
    for (std::size_t i = 0; i < cnspk::kParameterCount; ++i) {
        const auto& e = manifest[i];
        if (e.min == 0.0 && u(rng) < 0.1) {
            p[i] = 0.0;
            continue;
        }
        const double lo = e.min > 0.0 ? e.min : e.max * 1e-6;
        p[i] = std::clamp(std::exp(std::log(lo) + u(rng) * std::log(e.max / lo)), e.min, e.max);
    }
    return p;
}

double plasma(const cnspk::PlasmaProfile& profile, double t) {
    const auto& x = profile.times();
    const auto& y = profile.concentrations();
    if (t <= x.front()) return y.front();
    if (t >= x.back()) return y.back();
    std::size_t k = 0;
    while (x[k + 1] < t) ++k;
    const double w = (t - x[k]) / (x[k + 1] - x[k]);
    return y[k] * (1.0 - w) + y[k + 1] * w;
}

std::vector<State> rk4(const cnspk::ParameterSet& p, const cnspk::PlasmaProfile& profile,
                       const std::vector<double>& outputs, double h) {
    // Concentration-space matrix assembled directly from the labeled fluxes.
    double a[4][4] = {};
    double g[4] = {};
    const auto vol = cnspk::volumes(p);
    for (const auto& tr : cnspk::transfers(p)) {
        const int from = static_cast<int>(tr.from);
        const int to = static_cast<int>(tr.to);
        if (tr.from == cnspk::Node::plasma) {
            g[to] += tr.clearance / vol[to];
            continue;
        }
        a[from][from] -= tr.clearance / vol[from];
        if (to < 4) a[to][from] += tr.clearance / vol[to];
    }
    auto f = [&](double t, const State& y) {
        const double cp = plasma(profile, t);
        State d{};
        for (int i = 0; i < 4; ++i) {
            d[i] = g[i] * cp;
            for (int j = 0; j < 4; ++j) d[i] += a[i][j] * y[j];
        }
        return d;
    };
    auto axpy = [](const State& y, double s, const State& k) {
        State r;
        for (int i = 0; i < 4; ++i) r[i] = y[i] + s * k[i];
        return r;
    };

    std::vector<double> stops = profile.times();
    stops.insert(stops.end(), outputs.begin(), outputs.end());
    std::sort(stops.begin(), stops.end());
    stops.erase(std::unique(stops.begin(), stops.end()), stops.end());

    std::vector<State> out;
    State y{};
    double t = profile.first_time();
    std::size_t next = 0;
    while (next < outputs.size() && outputs[next] <= t) {
        out.push_back(y);
        ++next;
    }
    for (double stop : stops) {
        if (stop <= t) continue;
        const long n = std::max(1L, static_cast<long>(std::ceil((stop - t) / h)));
        const double step = (stop - t) / static_cast<double>(n);
        for (long s = 0; s < n; ++s) {
            const double ts = t + static_cast<double>(s) * step;
            const State k1 = f(ts, y);
            const State k2 = f(ts + step / 2, axpy(y, step / 2, k1));
            const State k3 = f(ts + step / 2, axpy(y, step / 2, k2));
            const State k4 = f(ts + step, axpy(y, step, k3));
            for (int i = 0; i < 4; ++i) y[i] += step / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
        }
        t = stop;
        while (next < outputs.size() && outputs[next] == t) {
            out.push_back(y);
            ++next;
        }
    }
    return out;
}

double trapezoid(const std::vector<double>& t, const std::vector<double>& y) {
    double area = 0.0;
    for (std::size_t i = 0; i + 1 < t.size(); ++i) {
        area += (t[i + 1] - t[i]) * (y[i] + y[i + 1]) / 2;
    }
    return area;
}

double weighted_sse(const std::vector<std::vector<double>>& observed,
                    const std::vector<std::vector<double>>& model) {
    double total = 0.0;
    for (std::size_t j = 0; j < observed.size(); ++j) {
        const auto& y = observed[j];
        double mean = 0.0;
        for (double v : y) mean += v;
        mean /= static_cast<double>(y.size());
        double var = 0.0;
        for (double v : y) var += (v - mean) * (v - mean);
        var /= static_cast<double>(y.size() - 1);
        if (var < 1e-30) var = 1.0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double r = y[i] - model[j][i];
            total += r * r / (2 * var);
        }
    }
    return total;
}

double grid_minimum(const std::function<double(double, double)>& f, double lo0, double hi0,
                    double lo1, double hi1, int n) {
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        const double x = lo0 + (hi0 - lo0) * i / (n - 1);
        for (int j = 0; j < n; ++j) {
            const double y = lo1 + (hi1 - lo1) * j / (n - 1);
            best = std::min(best, f(x, y));
        }
    }
    return best;
}

}  // namespace oracle
