#include "cnspk/model.hpp"

#include <algorithm>
#include <cmath>

#include "cnspk/error.hpp"

namespace cnspk {

namespace {

// Roster positions resolved by name from the manifest, so reordering the
// manifest does not silently rewire the equations.
struct Index {
    std::size_t V_bb, V_bm, V_ccsf, V_scsf;
    std::size_t Q_B, Q_ECF, Q_CSF, f_scsf;
    std::size_t BP, fu_p, fu_bb, fu_bm, fu_ccsf, fu_scsf;
    std::size_t lambda_bb, lambda_bm, lambda_ccsf, lambda_scsf;
    std::size_t PSB, PS_BCSFB, PS_ISF, PS_SCSF;
    std::size_t CL_in_BBB, CL_eff_BBB, CL_in_BCSFB, CL_eff_BCSFB, CL_met_bm;
};

const Index& index() {
    static const Index idx = [] {
        const auto& m = Manifest::builtin();
        auto at = [&](std::string_view n) { return m.index_of(n); };
        return Index{at("V_bb"),        at("V_bm"),         at("V_ccsf"),      at("V_scsf"),
                     at("Q_B"),         at("Q_ECF"),        at("Q_CSF"),       at("f_scsf"),
                     at("BP"),          at("fu_p"),         at("fu_bb"),       at("fu_bm"),
                     at("fu_ccsf"),     at("fu_scsf"),      at("lambda_bb"),   at("lambda_bm"),
                     at("lambda_ccsf"), at("lambda_scsf"),  at("PSB"),         at("PS_BCSFB"),
                     at("PS_ISF"),      at("PS_SCSF"),      at("CL_in_BBB"),   at("CL_eff_BBB"),
                     at("CL_in_BCSFB"), at("CL_eff_BCSFB"), at("CL_met_bm")};
    }();
    return idx;
}

void require_finite(const ParameterSet& p) {
    if (!p.all_finite()) throw NumericDomainError("non-finite model parameter");
}

void require_finite(const CompartmentState& s) {
    if (!s.finite()) throw NumericDomainError("non-finite compartment state");
}

constexpr bool is_compartment(Node n) { return n != Node::plasma && n != Node::sink; }
constexpr std::size_t slot(Node n) { return static_cast<std::size_t>(n); }

}  // namespace

bool CompartmentState::finite() const noexcept {
    return std::all_of(c.begin(), c.end(), [](double v) { return std::isfinite(v); });
}

PlasmaProfile::PlasmaProfile(std::vector<double> times, std::vector<double> concentrations)
    : times_(std::move(times)), conc_(std::move(concentrations)) {
    if (times_.size() != conc_.size()) {
        throw InvalidProfile("plasma profile: times and concentrations differ in length");
    }
    if (times_.size() < 2) throw InvalidProfile("plasma profile needs at least 2 samples");
    for (std::size_t i = 0; i < times_.size(); ++i) {
        if (!std::isfinite(times_[i]) || !std::isfinite(conc_[i])) {
            throw InvalidProfile("plasma profile: non-finite sample " + std::to_string(i));
        }
        if (conc_[i] < 0.0) {
            throw InvalidProfile("plasma profile: negative concentration at sample " +
                                 std::to_string(i));
        }
        if (i > 0 && !(times_[i] > times_[i - 1])) {
            throw InvalidProfile("plasma profile: times not strictly increasing at sample " +
                                 std::to_string(i));
        }
    }
}

double PlasmaProfile::at(double t) const {
    if (t <= times_.front()) return conc_.front();
    if (t >= times_.back()) return conc_.back();
    const auto hi = static_cast<std::size_t>(
        std::upper_bound(times_.begin(), times_.end(), t) - times_.begin());
    const std::size_t lo = hi - 1;
    if (t == times_[lo]) return conc_[lo];
    const double w = (t - times_[lo]) / (times_[hi] - times_[lo]);
    return conc_[lo] + w * (conc_[hi] - conc_[lo]);
}

double plasma_at(const PlasmaProfile& profile, double t) { return profile.at(t); }

std::array<double, kCompartmentCount> volumes(const ParameterSet& p) {
    const auto& i = index();
    return {p[i.V_bb], p[i.V_bm], p[i.V_ccsf], p[i.V_scsf]};
}

std::vector<Transfer> transfers(const ParameterSet& p) {
    const auto& i = index();
    // Unbound drug in each compartment; un-ionized unbound drug drives passive
    // diffusion, unbound drug is the transporter substrate.
    const double u_p = p[i.fu_p] * p[i.lambda_bb];
    const double u_bb = p[i.fu_bb] * p[i.lambda_bb];
    const double u_bm = p[i.fu_bm] * p[i.lambda_bm];
    const double u_ccsf = p[i.fu_ccsf] * p[i.lambda_ccsf];
    const double u_scsf = p[i.fu_scsf] * p[i.lambda_scsf];
    const double q_csf_out = p[i.Q_ECF] + p[i.Q_CSF];
    const double f = p[i.f_scsf];

    using N = Node;
    return {
        // Q_B * BP * C_p: arterial inflow
        {"arterial_inflow", N::plasma, N::brain_blood, p[i.Q_B] * p[i.BP]},
        // Q_B * C_bb: venous outflow
        {"venous_outflow", N::brain_blood, N::sink, p[i.Q_B]},
        // PSB * (fu_bb*lambda_bb*C_bb - fu_bm*lambda_bm*C_bm)
        {"bbb_passive_in", N::brain_blood, N::brain_mass, p[i.PSB] * u_bb},
        {"bbb_passive_out", N::brain_mass, N::brain_blood, p[i.PSB] * u_bm},
        // CL_in_BBB * fu_bb * C_bb, CL_eff_BBB * fu_bm * C_bm
        {"bbb_active_influx", N::brain_blood, N::brain_mass, p[i.CL_in_BBB] * p[i.fu_bb]},
        {"bbb_active_efflux", N::brain_mass, N::brain_blood, p[i.CL_eff_BBB] * p[i.fu_bm]},
        // CL_met_bm * fu_bm * C_bm
        {"brain_metabolism", N::brain_mass, N::sink, p[i.CL_met_bm] * p[i.fu_bm]},
        // Q_ECF * fu_bm * C_bm: ECF bulk flow into cranial CSF
        {"ecf_bulk_flow", N::brain_mass, N::cranial_csf, p[i.Q_ECF] * p[i.fu_bm]},
        // PS_ISF * (fu_bm*lambda_bm*C_bm - fu_ccsf*lambda_ccsf*C_ccsf)
        {"isf_csf_passive_in", N::brain_mass, N::cranial_csf, p[i.PS_ISF] * u_bm},
        {"isf_csf_passive_out", N::cranial_csf, N::brain_mass, p[i.PS_ISF] * u_ccsf},
        // PS_BCSFB * (fu_bb*lambda_bb*C_bb - fu_ccsf*lambda_ccsf*C_ccsf)
        {"bcsfb_passive_in", N::brain_blood, N::cranial_csf, p[i.PS_BCSFB] * u_bb},
        {"bcsfb_passive_out", N::cranial_csf, N::brain_blood, p[i.PS_BCSFB] * u_ccsf},
        // CL_in_BCSFB * fu_bb * C_bb, CL_eff_BCSFB * fu_ccsf * C_ccsf
        {"bcsfb_active_influx", N::brain_blood, N::cranial_csf, p[i.CL_in_BCSFB] * p[i.fu_bb]},
        {"bcsfb_active_efflux", N::cranial_csf, N::brain_blood, p[i.CL_eff_BCSFB] * p[i.fu_ccsf]},
        // f_scsf * (Q_ECF + Q_CSF) * C_ccsf: cranial to spinal CSF flow
        {"csf_cranial_to_spinal", N::cranial_csf, N::spinal_csf, f * q_csf_out},
        // (1 - f_scsf) * (Q_ECF + Q_CSF) * C_ccsf: cranial reabsorption
        {"csf_cranial_absorption", N::cranial_csf, N::sink, (1.0 - f) * q_csf_out},
        // f_scsf * (Q_ECF + Q_CSF) * C_scsf: spinal reabsorption
        {"csf_spinal_absorption", N::spinal_csf, N::sink, f * q_csf_out},
        // PS_SCSF * (fu_p*lambda_bb*C_p - fu_scsf*lambda_scsf*C_scsf)
        {"scsf_passive_in", N::plasma, N::spinal_csf, p[i.PS_SCSF] * u_p},
        {"scsf_passive_out", N::spinal_csf, N::sink, p[i.PS_SCSF] * u_scsf},
    };
}

SystemMatrix system_matrix(const ParameterSet& p) {
    require_finite(p);
    const auto vol = volumes(p);
    // Assemble in amount space (mg/h per mg/L), then divide rows by volume.
    Eigen::Matrix4d amount = Eigen::Matrix4d::Zero();
    Eigen::Vector4d gain = Eigen::Vector4d::Zero();
    for (const auto& tr : transfers(p)) {
        if (tr.from == Node::plasma) {
            gain[slot(tr.to)] += tr.clearance;
            continue;
        }
        const std::size_t src = slot(tr.from);
        amount(src, src) -= tr.clearance;
        if (is_compartment(tr.to)) amount(slot(tr.to), src) += tr.clearance;
    }
    SystemMatrix m;
    for (std::size_t r = 0; r < kCompartmentCount; ++r) {
        m.rate.row(r) = amount.row(r) / vol[r];
        m.plasma_gain[r] = gain[r] / vol[r];
    }
    return m;
}

CompartmentState evaluate_rhs(const SystemMatrix& m, const CompartmentState& s, double plasma) {
    const Eigen::Vector4d d = m.rate * s.vec() + m.plasma_gain * plasma;
    return CompartmentState::from(d);
}

CompartmentState evaluate_rhs(const ParameterSet& p, const CompartmentState& s, double t,
                              const PlasmaProfile& profile) {
    require_finite(s);
    return evaluate_rhs(system_matrix(p), s, profile.at(t));
}

CompartmentState evaluate_rhs_by_flux(const ParameterSet& p, const CompartmentState& s, double t,
                                      const PlasmaProfile& profile) {
    require_finite(p);
    require_finite(s);
    const double cp = profile.at(t);
    std::array<double, kCompartmentCount> amount_rate{};
    for (const auto& tr : transfers(p)) {
        const double source_conc = tr.from == Node::plasma ? cp : s.c[slot(tr.from)];
        const double flux = tr.clearance * source_conc;
        if (is_compartment(tr.from)) amount_rate[slot(tr.from)] -= flux;
        if (is_compartment(tr.to)) amount_rate[slot(tr.to)] += flux;
    }
    const auto vol = volumes(p);
    CompartmentState d;
    for (std::size_t k = 0; k < kCompartmentCount; ++k) d.c[k] = amount_rate[k] / vol[k];
    return d;
}

CompartmentState steady_state(const SystemMatrix& m, double plasma) {
    Eigen::FullPivLU<Eigen::Matrix4d> lu(m.rate);
    if (!lu.isInvertible()) throw NumericDomainError("rate matrix is singular");
    const Eigen::Vector4d s = lu.solve(-m.plasma_gain * plasma);
    return CompartmentState::from(s);
}

}  // namespace cnspk
