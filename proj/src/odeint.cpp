#include "cnspk/odeint.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "cnspk/error.hpp"

namespace cnspk {

namespace {

using Vec = Eigen::Vector4d;
using Mat = Eigen::Matrix4d;
using Mat12 = Eigen::Matrix<double, 12, 12>;
using Vec12 = Eigen::Matrix<double, 12, 1>;

// Dormand-Prince 5(4).
namespace dp {
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
// b (5th order) minus bhat (4th order)
constexpr double e1 = b1 - 5179.0 / 57600, e3 = b3 - 7571.0 / 16695, e4 = b4 - 393.0 / 640,
                 e5 = b5 - -92097.0 / 339200, e6 = b6 - 187.0 / 2100, e7 = -1.0 / 40;
}  // namespace dp

// Three-stage Radau IIA, order 5, stiffly accurate.
struct RadauTableau {
    std::array<double, 3> c;
    std::array<std::array<double, 3>, 3> a;
};

const RadauTableau& radau() {
    static const RadauTableau t = [] {
        const double s6 = std::sqrt(6.0);
        RadauTableau r;
        r.c = {(4.0 - s6) / 10.0, (4.0 + s6) / 10.0, 1.0};
        r.a = {{{(88.0 - 7.0 * s6) / 360.0, (296.0 - 169.0 * s6) / 1800.0, (-2.0 + 3.0 * s6) / 225.0},
                {(296.0 + 169.0 * s6) / 1800.0, (88.0 + 7.0 * s6) / 360.0, (-2.0 - 3.0 * s6) / 225.0},
                {(16.0 - s6) / 36.0, (16.0 + s6) / 36.0, 1.0 / 9.0}}};
        return r;
    }();
    return t;
}

enum class Mode { nonstiff, stiff };

constexpr double kSafety = 0.9;
constexpr double kFacMin = 0.2;
constexpr double kFacMax = 5.0;
constexpr double kStabilityBoundary = 3.3;  // DOPRI5 on the negative real axis
constexpr int kSwitchAfter = 5;

// Forcing is linear on every segment between plasma samples.
struct Segment {
    double t0;
    double t1;
    double c0;
    double slope;
    double plasma(double t) const { return c0 + slope * (t - t0); }
};

class Stepper {
public:
    Stepper(const SystemMatrix& m, const IntegratorConfig& cfg) : m_(m), cfg_(cfg) {}

    Vec f(const Segment& seg, double t, const Vec& y) const {
        return m_.rate * y + m_.plasma_gain * seg.plasma(t);
    }
    Vec fdot(const Segment& seg, const Vec& fy) const {
        return m_.rate * fy + m_.plasma_gain * seg.slope;
    }

    double norm(const Vec& e, const Vec& y0, const Vec& y1) const {
        double worst = 0.0;
        for (int i = 0; i < 4; ++i) {
            const double sc = cfg_.atol + cfg_.rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
            worst = std::max(worst, std::abs(e[i]) / sc);
        }
        return worst;
    }

    // Returns the 5th-order solution, writes the error estimate and f(t+h).
    Vec dopri(const Segment& seg, double t, const Vec& y, const Vec& k1, double h, Vec& err,
              Vec& k7) const {
        using namespace dp;
        const Vec k2 = f(seg, t + c2 * h, y + h * (a21 * k1));
        const Vec k3 = f(seg, t + c3 * h, y + h * (a31 * k1 + a32 * k2));
        const Vec k4 = f(seg, t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
        const Vec k5 = f(seg, t + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        const Vec k6 = f(seg, t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        const Vec y1 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        k7 = f(seg, t + h, y1);
        err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        return y1;
    }

    // Radau IIA with step doubling; returns the two-half-step solution.
    Vec radau_doubled(const Segment& seg, double t, const Vec& y, double h, Vec& err) const {
        const Vec full = radau_step(lu(h), seg, t, y, h);
        const auto half_lu = lu(0.5 * h);
        const Vec mid = radau_step(half_lu, seg, t, y, 0.5 * h);
        const Vec half = radau_step(half_lu, seg, t + 0.5 * h, mid, 0.5 * h);
        err = (half - full) / 31.0;
        return half;
    }

    // Error-controlled implicit solve from (t, y) to t_out < t + accepted step.
    Vec radau_to(const Segment& seg, double t, Vec y, double t_out) const {
        double h = t_out - t;
        while (t < t_out) {
            const bool last = h >= t_out - t;
            const double h_try = last ? t_out - t : h;
            Vec err;
            const Vec y_new = radau_doubled(seg, t, y, h_try, err);
            const double e = norm(err, y, y_new);
            const double fac = e == 0.0 ? kFacMax : kSafety * std::pow(e, -1.0 / 6.0);
            if (e <= 1.0) {
                t = last ? t_out : t + h_try;
                y = y_new;
                h = h_try * std::clamp(fac, kFacMin, kFacMax);
            } else {
                h = h_try * std::clamp(fac, kFacMin, 1.0);
            }
        }
        return y;
    }

private:
    Eigen::PartialPivLU<Mat12> lu(double h) const {
        const auto& tab = radau();
        Mat12 sys = Mat12::Identity();
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                sys.block<4, 4>(4 * i, 4 * j) -= (h * tab.a[i][j]) * m_.rate;
            }
        }
        return Eigen::PartialPivLU<Mat12>(sys);
    }

    Vec radau_step(const Eigen::PartialPivLU<Mat12>& lu, const Segment& seg, double t,
                   const Vec& y, double h) const {
        const auto& tab = radau();
        std::array<double, 3> cp{};
        for (int j = 0; j < 3; ++j) cp[j] = seg.plasma(t + tab.c[j] * h);
        Vec12 rhs;
        for (int i = 0; i < 3; ++i) {
            double forcing = 0.0;
            for (int j = 0; j < 3; ++j) forcing += tab.a[i][j] * cp[j];
            rhs.segment<4>(4 * i) = y + (h * forcing) * m_.plasma_gain;
        }
        const Vec12 stages = lu.solve(rhs);
        return stages.segment<4>(8);
    }

    const SystemMatrix& m_;
    const IntegratorConfig& cfg_;
};

// Quintic Hermite interpolation from values, first and second derivatives.
Vec hermite5(double s, double h, const Vec& y0, const Vec& d0, const Vec& dd0, const Vec& y1,
             const Vec& d1, const Vec& dd1) {
    const double s2 = s * s, s3 = s2 * s, s4 = s3 * s, s5 = s4 * s;
    const double h0 = 1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5;
    const double h1 = s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5;
    const double h2 = 0.5 * (s2 - 3.0 * s3 + 3.0 * s4 - s5);
    const double h3 = 10.0 * s3 - 15.0 * s4 + 6.0 * s5;
    const double h4 = -4.0 * s3 + 7.0 * s4 - 3.0 * s5;
    const double h5 = 0.5 * (s3 - 2.0 * s4 + s5);
    return h0 * y0 + (h * h1) * d0 + (h * h * h2) * dd0 + h3 * y1 + (h * h4) * d1 +
           (h * h * h5) * dd1;
}

double initial_step(const Stepper& st, const Segment& seg, double t, const Vec& y0, const Vec& f0,
                    const IntegratorConfig& cfg) {
    const Vec zero = Vec::Zero();
    auto scaled = [&](const Vec& v, const Vec& ref) { return st.norm(v, ref, zero); };
    const double d0 = scaled(y0, y0);
    const double d1 = scaled(f0, y0);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, seg.t1 - seg.t0);
    const Vec y1 = y0 + h0 * f0;
    const Vec f1 = st.f(seg, t + h0, y1);
    const double d2 = scaled(f1 - f0, y0) / h0;
    const double h1 = (d1 <= 1e-15 && d2 <= 1e-15) ? std::max(1e-6, h0 * 1e-3)
                                                   : std::pow(0.01 / std::max(d1, d2), 0.2);
    return std::min({100.0 * h0, h1, cfg.h_max});
}

}  // namespace

void IntegratorConfig::validate() const {
    if (!(rtol > 0.0) || !std::isfinite(rtol)) throw InvalidArgument("rtol must be > 0");
    if (!(atol > 0.0) || !std::isfinite(atol)) throw InvalidArgument("atol must be > 0");
    if (!(h_init >= 0.0) || !std::isfinite(h_init)) throw InvalidArgument("h_init must be >= 0");
    if (!(h_max > 0.0)) throw InvalidArgument("h_max must be > 0");
    if (max_steps < 1) throw InvalidArgument("max_steps must be >= 1");
}

std::vector<double> Trajectory::series(Compartment k) const {
    std::vector<double> out;
    out.reserve(states.size());
    for (const auto& s : states) out.push_back(s[k]);
    return out;
}

std::vector<double> dense_grid(double t0, double t1, std::size_t n) {
    if (n < 2) throw InvalidArgument("dense_grid needs n >= 2");
    if (!(t1 > t0) || !std::isfinite(t0) || !std::isfinite(t1)) {
        throw InvalidArgument("dense_grid needs finite t1 > t0");
    }
    std::vector<double> g(n);
    const double span = t1 - t0;
    for (std::size_t i = 0; i < n; ++i) {
        g[i] = t0 + span * (static_cast<double>(i) / static_cast<double>(n - 1));
    }
    g.back() = t1;
    return g;
}

double spectral_radius(const SystemMatrix& m) {
    Eigen::EigenSolver<Mat> es(m.rate, false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

Trajectory integrate(const ParameterSet& p, const PlasmaProfile& profile,
                     std::span<const double> output_times, const IntegratorConfig& cfg,
                     std::stop_token stop) {
    cfg.validate();
    if (output_times.empty()) throw InvalidArgument("integrate: empty output grid");
    for (std::size_t i = 0; i < output_times.size(); ++i) {
        if (!std::isfinite(output_times[i])) throw InvalidArgument("integrate: non-finite time");
        if (i > 0 && !(output_times[i] > output_times[i - 1])) {
            throw InvalidArgument("integrate: output times must be strictly increasing");
        }
    }
    const double t_start = profile.first_time();
    if (output_times.front() < t_start) {
        throw InvalidArgument("integrate: output time before the first plasma sample");
    }

    const SystemMatrix m = system_matrix(p);
    const double rho = spectral_radius(m);
    const double h_stab = rho > 0.0 ? kStabilityBoundary / rho : std::numeric_limits<double>::infinity();
    const Stepper st(m, cfg);

    Trajectory traj;
    traj.times.assign(output_times.begin(), output_times.end());
    traj.states.reserve(output_times.size());
    auto& stats = traj.stats;

    std::size_t next_out = 0;
    auto emit = [&](const Vec& y) {
        if (stop.stop_requested()) throw Cancelled();
        traj.states.push_back(CompartmentState::from(y));
        ++next_out;
    };

    Vec y = Vec::Zero();
    double t = t_start;
    if (output_times.front() == t_start) emit(y);

    const double t_end = output_times.back();
    // Segment boundaries: plasma samples inside (t_start, t_end), then t_end.
    std::vector<double> bounds;
    for (double tp : profile.times()) {
        if (tp > t_start && tp < t_end) bounds.push_back(tp);
    }
    if (t_end > t_start) bounds.push_back(t_end);

    Mode mode = cfg.method == MethodPolicy::stiff_only ? Mode::stiff : Mode::nonstiff;
    bool have_h = false;
    double h = cfg.h_init;
    int stiff_hits = 0;
    int nonstiff_hits = 0;
    std::size_t attempts = 0;
    bool run_open = false;
    Mode run_mode = mode;

    double seg_start = t_start;
    for (double seg_end : bounds) {
        Segment seg{seg_start, seg_end, profile.at(seg_start), 0.0};
        if (seg_start < profile.last_time()) {
            seg.slope = (profile.at(seg_end) - seg.c0) / (seg_end - seg_start);
        }
        Vec fy = st.f(seg, t, y);
        if (!have_h) {
            if (h <= 0.0) h = initial_step(st, seg, t, y, fy, cfg);
            have_h = true;
        }
        bool last_rejected = false;

        while (t < seg_end) {
            const double remaining = seg_end - t;
            double h_try = std::min(h, cfg.h_max);
            bool clipped = false;
            if (h_try >= remaining - 1e-12 * std::max(1.0, std::abs(seg_end))) {
                h_try = remaining;
                clipped = true;
            }
            if (++attempts > cfg.max_steps) {
                throw IntegrationFailure("integration exceeded max_steps (" +
                                             std::to_string(cfg.max_steps) + ")",
                                         t);
            }
            if (!(h_try > 1e-14 * std::max(1.0, std::abs(t)))) {
                throw IntegrationFailure("step size underflow", t);
            }

            Vec err;
            Vec y_new;
            Vec f_new;
            double order_exp;
            if (mode == Mode::nonstiff) {
                y_new = st.dopri(seg, t, y, fy, h_try, err, f_new);
                order_exp = 1.0 / 5.0;
            } else {
                y_new = st.radau_doubled(seg, t, y, h_try, err);
                f_new = st.f(seg, t + h_try, y_new);
                order_exp = 1.0 / 6.0;
            }
            if (!y_new.allFinite()) throw NumericBlowup("non-finite state", t);

            const double e = st.norm(err, y, y_new);
            double fac = e == 0.0 ? kFacMax : kSafety * std::pow(e, -order_exp);
            if (!(e <= 1.0)) {
                ++stats.rejected;
                h = h_try * std::clamp(fac, kFacMin, 1.0);
                last_rejected = true;
                continue;
            }

            const double t_new = clipped ? seg_end : t + h_try;
            // Outputs inside (t, t_new].
            if (next_out < output_times.size() && output_times[next_out] <= t_new) {
                const Vec dd0 = st.fdot(seg, fy);
                const Vec dd1 = st.fdot(seg, f_new);
                const double hs = t_new - t;
                while (next_out < output_times.size() && output_times[next_out] <= t_new) {
                    const double to = output_times[next_out];
                    if (to == t_new) {
                        emit(y_new);
                    } else if (mode == Mode::nonstiff) {
                        emit(hermite5((to - t) / hs, hs, y, fy, dd0, y_new, f_new, dd1));
                    } else {
                        // A long implicit step spans the fast transient excited at
                        // plasma kinks, which no polynomial over the step captures;
                        // re-solve from the step start instead.
                        emit(st.radau_to(seg, t, y, to));
                    }
                }
            }

            ++stats.steps;
            if (!run_open || run_mode != mode) {
                (mode == Mode::nonstiff ? stats.nonstiff_segments : stats.stiff_segments)++;
                if (run_open) ++stats.switches;
                run_open = true;
                run_mode = mode;
            }
            (mode == Mode::nonstiff ? stats.nonstiff_steps : stats.stiff_steps)++;

            t = t_new;
            y = y_new;
            fy = f_new;
            const double fac_max = last_rejected ? 1.0 : kFacMax;
            last_rejected = false;
            const double h_next = h_try * std::clamp(fac, kFacMin, fac_max);
            if (!clipped || h_next < h) h = h_next;

            if (cfg.method == MethodPolicy::automatic && !clipped) {
                if (mode == Mode::nonstiff) {
                    stiff_hits = h_try >= 0.5 * h_stab ? stiff_hits + 1 : 0;
                    if (stiff_hits >= kSwitchAfter) {
                        mode = Mode::stiff;
                        stiff_hits = 0;
                    }
                } else {
                    nonstiff_hits = h_try < 0.25 * h_stab ? nonstiff_hits + 1 : 0;
                    if (nonstiff_hits >= kSwitchAfter) {
                        mode = Mode::nonstiff;
                        nonstiff_hits = 0;
                        h = std::min(h, 0.5 * h_stab);
                    }
                }
            }
        }
        seg_start = seg_end;
    }
    return traj;
}

}  // namespace cnspk
