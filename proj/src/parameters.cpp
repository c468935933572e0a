#include "cnspk/parameters.hpp"

#include <cmath>
#include <sstream>

#include "cnspk/error.hpp"
#include "csv.hpp"

namespace cnspk {

namespace detail {
extern const std::string_view kBuiltinManifest;
}

const Manifest& Manifest::builtin() {
    static const Manifest manifest = Manifest::parse(detail::kBuiltinManifest);
    return manifest;
}

Manifest Manifest::parse(std::string_view text) {
    static constexpr std::array<std::string_view, 6> kHeader{"name", "description", "unit",
                                                             "ref_value", "min", "max"};
    const auto records = csv::read(text);
    if (records.empty()) throw DataError("empty manifest", 1, 1);

    const auto& header = records.front();
    if (header.fields.size() != kHeader.size()) {
        throw DataError("manifest header must be name,description,unit,ref_value,min,max",
                        header.line, 1);
    }
    for (std::size_t c = 0; c < kHeader.size(); ++c) {
        if (csv::lower(csv::trim(header.fields[c])) != kHeader[c]) {
            throw DataError("expected column '" + std::string(kHeader[c]) + "'", header.line, c + 1,
                            header.fields[c]);
        }
    }

    Manifest m;
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& rec = records[r];
        if (rec.fields.size() != kHeader.size()) {
            throw DataError("expected 6 fields", rec.line, rec.fields.size());
        }
        ParameterInfo info;
        info.name = std::string(csv::trim(rec.fields[0]));
        info.description = std::string(csv::trim(rec.fields[1]));
        info.unit = std::string(csv::trim(rec.fields[2]));
        double* targets[3] = {&info.ref_value, &info.min, &info.max};
        for (std::size_t c = 0; c < 3; ++c) {
            auto v = csv::parse_number(rec.fields[3 + c]);
            if (!v) {
                throw DataError("not a number", rec.line, 4 + c, std::string(kHeader[3 + c]));
            }
            *targets[c] = *v;
        }
        if (info.name.empty()) throw DataError("empty parameter name", rec.line, 1, "name");
        if (m.find(info.name)) throw DataError("duplicate parameter", rec.line, 1, "name");
        if (!(info.min <= info.ref_value && info.ref_value <= info.max)) {
            throw DataError("ref_value outside [min,max]", rec.line, 4, "ref_value");
        }
        m.entries_.push_back(std::move(info));
    }
    if (m.entries_.size() != kParameterCount) {
        throw InvalidArgument("manifest must list exactly " + std::to_string(kParameterCount) +
                              " parameters, found " + std::to_string(m.entries_.size()));
    }
    return m;
}

std::optional<std::size_t> Manifest::find(std::string_view name) const {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].name == name) return i;
    }
    const auto key = csv::lower(name);
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (csv::lower(entries_[i].name) == key) return i;
    }
    return std::nullopt;
}

std::size_t Manifest::index_of(std::string_view name) const {
    if (auto i = find(name)) return *i;
    throw UnknownParameter(std::string(name));
}

std::string Manifest::to_csv() const {
    std::ostringstream out;
    out << "name,description,unit,ref_value,min,max\n";
    for (const auto& e : entries_) {
        out << csv::escape(e.name) << ',' << csv::escape(e.description) << ','
            << csv::escape(e.unit) << ',' << csv::format_number(e.ref_value) << ','
            << csv::format_number(e.min) << ',' << csv::format_number(e.max) << '\n';
    }
    return out.str();
}

ParameterSet ParameterSet::reference() {
    const auto& m = Manifest::builtin();
    ParameterSet p;
    for (std::size_t i = 0; i < kParameterCount; ++i) p.values_[i] = m[i].ref_value;
    return p;
}

double ParameterSet::get(std::string_view name) const {
    return values_[Manifest::builtin().index_of(name)];
}

void ParameterSet::set(std::string_view name, double value) {
    values_[Manifest::builtin().index_of(name)] = value;
}

ParameterSet ParameterSet::with(std::string_view name, double value) const {
    ParameterSet copy = *this;
    copy.set(name, value);
    return copy;
}

std::string_view ParameterSet::name_of(std::size_t i) { return Manifest::builtin()[i].name; }

bool ParameterSet::all_finite() const noexcept {
    for (double v : values_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

bool ParameterSet::is_valid() const noexcept {
    const auto& m = Manifest::builtin();
    for (std::size_t i = 0; i < kParameterCount; ++i) {
        const double v = values_[i];
        if (!std::isfinite(v) || v < m[i].min || v > m[i].max) return false;
    }
    return true;
}

void ParameterSet::validate() const {
    const auto& m = Manifest::builtin();
    for (std::size_t i = 0; i < kParameterCount; ++i) {
        const double v = values_[i];
        if (!std::isfinite(v)) {
            throw NumericDomainError("parameter " + m[i].name + " is not finite");
        }
        if (v < m[i].min || v > m[i].max) {
            throw InvalidArgument("parameter " + m[i].name + " = " + csv::format_number(v) +
                                  " outside [" + csv::format_number(m[i].min) + ", " +
                                  csv::format_number(m[i].max) + "]");
        }
    }
}

}  // namespace cnspk
