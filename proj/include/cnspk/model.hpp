#ifndef CNSPK_MODEL_HPP
#define CNSPK_MODEL_HPP

#include <array>
#include <cstddef>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "cnspk/parameters.hpp"

namespace cnspk {

enum class Compartment : std::size_t { brain_blood = 0, brain_mass, cranial_csf, spinal_csf };

inline constexpr std::size_t kCompartmentCount = 4;

/// Column names used by every table: Cbb, Cbm, Cccsf, Cscsf.
inline constexpr std::array<std::string_view, kCompartmentCount> kCompartmentColumns{
    "Cbb", "Cbm", "Cccsf", "Cscsf"};

/// Concentrations (mg/L) of brain blood, brain mass, cranial CSF and spinal CSF.
struct CompartmentState {
    std::array<double, kCompartmentCount> c{};

    double& operator[](std::size_t i) { return c[i]; }
    double operator[](std::size_t i) const { return c[i]; }
    double& operator[](Compartment k) { return c[static_cast<std::size_t>(k)]; }
    double operator[](Compartment k) const { return c[static_cast<std::size_t>(k)]; }

    bool finite() const noexcept;

    Eigen::Vector4d vec() const { return {c[0], c[1], c[2], c[3]}; }
    static CompartmentState from(const Eigen::Vector4d& v) { return {{v[0], v[1], v[2], v[3]}}; }

    friend bool operator==(const CompartmentState&, const CompartmentState&) = default;
};

/// Time-stamped plasma concentrations (h, mg/L) forcing the brain model.
/// Piecewise-linear between samples, constant outside the sampled range.
class PlasmaProfile {
public:
    /// Throws InvalidProfile unless there are >= 2 samples with strictly
    /// increasing finite times and finite nonnegative concentrations.
    PlasmaProfile(std::vector<double> times, std::vector<double> concentrations);

    double at(double t) const;

    const std::vector<double>& times() const noexcept { return times_; }
    const std::vector<double>& concentrations() const noexcept { return conc_; }
    std::size_t size() const noexcept { return times_.size(); }
    double first_time() const { return times_.front(); }
    double last_time() const { return times_.back(); }

private:
    std::vector<double> times_;
    std::vector<double> conc_;
};

double plasma_at(const PlasmaProfile& profile, double t);

/// Endpoint of a transfer: one of the four compartments, the plasma forcing
/// (source only) or a sink outside the brain (target only).
enum class Node { brain_blood = 0, brain_mass, cranial_csf, spinal_csf, plasma, sink };

/// One labeled term of the model: amount rate `clearance * C(from)` (mg/h)
/// moves from `from` to `to`. Clearances are nonnegative.
struct Transfer {
    std::string_view label;
    Node from;
    Node to;
    double clearance;  // L/h
};

/// Every flux term of the four-compartment permeability-limited brain model.
std::vector<Transfer> transfers(const ParameterSet& p);

/// Compartment volumes (L), in compartment order.
std::array<double, kCompartmentCount> volumes(const ParameterSet& p);

/// Affine factorization of the model: ds/dt = rate * s + plasma_gain * C_p(t).
struct SystemMatrix {
    Eigen::Matrix4d rate;
    Eigen::Vector4d plasma_gain;
};

/// Throws NumericDomainError for non-finite parameters.
SystemMatrix system_matrix(const ParameterSet& p);

/// Time derivative of the state; evaluated as rate * s + plasma_gain * C_p(t).
CompartmentState evaluate_rhs(const ParameterSet& p, const CompartmentState& s, double t,
                              const PlasmaProfile& profile);
CompartmentState evaluate_rhs(const SystemMatrix& m, const CompartmentState& s, double plasma);

/// Same derivative accumulated transfer by transfer in amount space and then
/// divided by volume. Independent of system_matrix; used for auditing.
CompartmentState evaluate_rhs_by_flux(const ParameterSet& p, const CompartmentState& s, double t,
                                      const PlasmaProfile& profile);

/// State where the derivative vanishes under constant plasma concentration.
/// Throws NumericDomainError if the rate matrix is singular.
CompartmentState steady_state(const SystemMatrix& m, double plasma);

}  // namespace cnspk

#endif  // CNSPK_MODEL_HPP
