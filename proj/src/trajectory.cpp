#include "mcf/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mcf {

std::size_t MonitorSeries::add_column(std::string name, bool interval_max) {
    if (has(name)) throw std::invalid_argument("duplicate series column " + name);
    if (rows() != 0) throw std::logic_error("columns must be declared before rows are added");
    names_.push_back(std::move(name));
    interval_max_.push_back(interval_max);
    columns_.emplace_back();
    return names_.size() - 1;
}

bool MonitorSeries::has(std::string_view name) const {
    return std::find(names_.begin(), names_.end(), name) != names_.end();
}

std::size_t MonitorSeries::column_index(std::string_view name) const {
    auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) throw std::out_of_range("no series column " + std::string(name));
    return static_cast<std::size_t>(it - names_.begin());
}

std::span<const double> MonitorSeries::column(std::string_view name) const {
    return columns_[column_index(name)];
}

void MonitorSeries::append(std::span<const double> row) {
    if (row.size() != names_.size()) throw std::invalid_argument("row width mismatch");
    for (std::size_t c = 0; c < row.size(); ++c) columns_[c].push_back(row[c]);
}

std::vector<double> MonitorSeries::row(std::size_t r) const {
    std::vector<double> out(names_.size());
    for (std::size_t c = 0; c < names_.size(); ++c) out[c] = columns_[c][r];
    return out;
}

std::vector<double> MonitorSeries::halve() {
    const std::size_t n = rows();
    std::vector<double> carry(names_.size(), 0.0);
    if (n <= 1) return carry;
    // Rows 1..n-1 pair up as (1,2), (3,4), ...; the even one survives.
    for (std::size_t c = 0; c < names_.size(); ++c) {
        auto& col = columns_[c];
        std::vector<double> kept;
        kept.reserve(n / 2 + 1);
        kept.push_back(col[0]);
        std::size_t r = 1;
        for (; r + 1 < n; r += 2) {
            double v = col[r + 1];
            if (interval_max_[c]) v = std::fmax(v, col[r]);
            kept.push_back(v);
        }
        if (r < n && interval_max_[c]) carry[c] = col[r];
        col = std::move(kept);
    }
    return carry;
}

std::string_view to_string(Termination t) {
    switch (t) {
        case Termination::Converged: return "Converged";
        case Termination::ReachedTmax: return "ReachedTmax";
        case Termination::SingularityDetected: return "SingularityDetected";
        case Termination::DegenerateGrid: return "DegenerateGrid";
    }
    return "Unknown";
}

std::string_view to_string(SingularityType t) {
    switch (t) {
        case SingularityType::None: return "None";
        case SingularityType::TypeI: return "TypeI";
        case SingularityType::TypeII: return "TypeII";
    }
    return "Unknown";
}

}  // namespace mcf
