#ifndef CNSPK_PARAMETERS_HPP
#define CNSPK_PARAMETERS_HPP

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cnspk {

/// Size of the closed parameter roster of the four-compartment brain model.
inline constexpr std::size_t kParameterCount = 27;

/// One row of the parameter manifest.
struct ParameterInfo {
    std::string name;
    std::string description;
    std::string unit;
    double ref_value = 0.0;
    double min = 0.0;
    double max = 0.0;
};

/// The parameter registry. The roster, reference values and physical bounds
/// are data (CSV `name,description,unit,ref_value,min,max`), not code; the
/// built-in manifest is compiled from data/manifest.csv.
class Manifest {
public:
    static const Manifest& builtin();

    /// Parses manifest CSV; throws DataError on malformed rows and
    /// InvalidArgument when the roster does not have kParameterCount entries.
    static Manifest parse(std::string_view csv);

    std::size_t size() const noexcept { return entries_.size(); }
    const ParameterInfo& operator[](std::size_t i) const { return entries_.at(i); }
    const std::vector<ParameterInfo>& entries() const noexcept { return entries_; }

    /// Exact match first, then ASCII case-insensitive.
    std::optional<std::size_t> find(std::string_view name) const;
    /// Like find(), but throws UnknownParameter.
    std::size_t index_of(std::string_view name) const;

    std::string to_csv() const;

private:
    std::vector<ParameterInfo> entries_;
};

/// Named vector of the 27 model parameters, in manifest order.
///
/// Values may be set freely; validate() enforces that every value is finite
/// and inside its manifest range (which encodes positivity of volumes,
/// unbound fractions in (0,1] and nonnegative flows).
class ParameterSet {
public:
    /// All parameters at their manifest reference values.
    static ParameterSet reference();

    double get(std::string_view name) const;
    void set(std::string_view name, double value);
    ParameterSet with(std::string_view name, double value) const;

    double operator[](std::size_t i) const { return values_.at(i); }
    double& operator[](std::size_t i) { return values_.at(i); }

    std::span<const double, kParameterCount> values() const noexcept { return values_; }
    static std::string_view name_of(std::size_t i);

    bool all_finite() const noexcept;
    bool is_valid() const noexcept;
    /// Throws NumericDomainError for non-finite values, InvalidArgument for
    /// values outside manifest bounds.
    void validate() const;

    friend bool operator==(const ParameterSet&, const ParameterSet&) = default;

private:
    std::array<double, kParameterCount> values_{};
};

}  // namespace cnspk

#endif  // CNSPK_PARAMETERS_HPP
