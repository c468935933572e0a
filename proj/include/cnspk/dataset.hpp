#ifndef CNSPK_DATASET_HPP
#define CNSPK_DATASET_HPP

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cnspk/model.hpp"
#include "cnspk/parameters.hpp"

namespace cnspk {

/// Parsed user input: time grid, plasma forcing, optional observed series per
/// compartment and an optional parameter table.
struct ObservedDataset {
    std::vector<double> time;    // h
    std::vector<double> plasma;  // mg/L
    std::array<std::optional<std::vector<double>>, kCompartmentCount> observed;
    /// (canonical name, value) in file order.
    std::vector<std::pair<std::string, double>> parameters;

    PlasmaProfile profile() const { return PlasmaProfile(time, plasma); }
    std::size_t observed_count() const;
    /// `base` with the dataset's parameter table applied on top.
    ParameterSet apply_parameters(ParameterSet base) const;

    friend bool operator==(const ObservedDataset&, const ObservedDataset&) = default;
};

}  // namespace cnspk

#endif  // CNSPK_DATASET_HPP
