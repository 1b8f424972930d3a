#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mcf/grid_geometry.hpp"

namespace mcf {

// Named scalar time series stored column-wise. Columns flagged as interval
// maxima hold the largest per-step value since the previous row; thinning
// merges them instead of discarding.
class MonitorSeries {
public:
    std::size_t add_column(std::string name, bool interval_max = false);
    bool has(std::string_view name) const;
    std::size_t column_index(std::string_view name) const;  // throws std::out_of_range

    std::span<const double> column(std::string_view name) const;
    std::span<const double> column(std::size_t idx) const { return columns_[idx]; }
    const std::vector<std::string>& names() const { return names_; }
    bool is_interval_max(std::size_t idx) const { return interval_max_[idx]; }

    std::size_t rows() const { return columns_.empty() ? 0 : columns_.front().size(); }
    std::size_t cols() const { return names_.size(); }

    // `row` is in column order.
    void append(std::span<const double> row);
    std::vector<double> row(std::size_t r) const;

    // Keeps row 0 and every other subsequent row. Interval-max columns of a
    // dropped row fold into the next kept row; if the last row is dropped its
    // interval-max values are returned so the caller can fold them forward.
    std::vector<double> halve();

private:
    std::vector<std::string> names_;
    std::vector<bool> interval_max_;
    std::vector<std::vector<double>> columns_;
};

struct Snapshot {
    std::size_t step = 0;
    double t = 0.0;
    double dt = 0.0;  // size of the step that produced this state (0 for the initial state)
    Immersion state;
};

enum class Termination { Converged, ReachedTmax, SingularityDetected, DegenerateGrid };
std::string_view to_string(Termination t);

enum class SingularityType { None, TypeI, TypeII };
std::string_view to_string(SingularityType t);

struct SingularityReport {
    SingularityType type = SingularityType::None;
    double t0_est = 0.0;
    double C_est = 0.0;
    std::pair<double, double> fit_window{0.0, 0.0};
    double fit_residual = 0.0;
};

struct FlowTrajectory {
    std::vector<Snapshot> snapshots;
    MonitorSeries series;
    Termination termination = Termination::ReachedTmax;
    std::optional<SingularityReport> singularity;
    std::string termination_detail;
    std::vector<std::string> warnings;
    std::size_t steps = 0;

    const Snapshot& final_snapshot() const { return snapshots.back(); }
};

}  // namespace mcf
