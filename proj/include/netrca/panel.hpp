#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace netrca {

using Matrix = Eigen::MatrixXd;
using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Half-open index interval [begin, end).
struct IndexRange {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t size() const { return end > begin ? end - begin : 0; }
    bool empty() const { return end <= begin; }
    bool contains(std::size_t i) const { return i >= begin && i < end; }
    bool operator==(const IndexRange&) const = default;
};

/**
 * T x D matrix of KPI samples on a uniform time grid.
 *
 * Missing cells are NaN in values() until imputation; missing_mask() keeps the
 * original provenance through every preprocessing step.
 */
class TimeSeriesPanel {
public:
    TimeSeriesPanel(std::vector<std::int64_t> timestamps, std::vector<std::string> channel_names,
                    Matrix values, BoolMatrix missing_mask);

    /// Panel without missing cells.
    TimeSeriesPanel(std::vector<std::int64_t> timestamps, std::vector<std::string> channel_names,
                    Matrix values);

    std::size_t length() const { return static_cast<std::size_t>(values_.rows()); }
    std::size_t channels() const { return static_cast<std::size_t>(values_.cols()); }

    const std::vector<std::int64_t>& timestamps() const { return timestamps_; }
    const std::vector<std::string>& channel_names() const { return channel_names_; }
    const Matrix& values() const { return values_; }
    const BoolMatrix& missing_mask() const { return missing_mask_; }

    double at(std::size_t t, std::size_t c) const { return values_(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c)); }
    Eigen::VectorXd column(std::size_t c) const { return values_.col(static_cast<Eigen::Index>(c)); }

    /// Index of a channel by name, or -1.
    long find_channel(const std::string& name) const;

    bool has_undefined() const;

    /// Same grid and names, new values (mask carried over).
    TimeSeriesPanel with_values(Matrix values) const;

private:
    std::vector<std::int64_t> timestamps_;
    std::vector<std::string> channel_names_;
    Matrix values_;
    BoolMatrix missing_mask_;
};

struct ChannelStats {
    std::vector<double> mean;
    std::vector<double> std;
    std::vector<bool> constant;
    IndexRange train_range;
};

enum class ImputeMethod { LinearInterpolate, HoldLast, ChannelMean };

ImputeMethod parse_impute_method(const std::string& name);
std::string to_string(ImputeMethod method);

/**
 * Parse the CSV layout `timestamp,<name1>,...,<nameD>` with UNIX-epoch-second
 * timestamps; an empty field marks a missing cell. Rows that are not on a
 * uniform grid are resampled to the median step (nearest sample).
 */
TimeSeriesPanel load_panel(std::istream& in);
TimeSeriesPanel load_panel_file(const std::string& path);

/// Shortest round-trip decimal representation, so save/load is lossless.
void save_panel(const TimeSeriesPanel& panel, std::ostream& out);
void save_panel_file(const TimeSeriesPanel& panel, const std::string& path);

/// Nearest-sample resampling onto timestamps[0] + k * step.
TimeSeriesPanel resample_uniform(const std::vector<std::int64_t>& timestamps,
                                 const std::vector<std::string>& names, const Matrix& values,
                                 std::int64_t step);

TimeSeriesPanel impute_missing(const TimeSeriesPanel& panel,
                               ImputeMethod method = ImputeMethod::LinearInterpolate);

/// Centered moving average; the averaging window shrinks at both edges.
TimeSeriesPanel smooth(const TimeSeriesPanel& panel, std::size_t window = 5);

ChannelStats compute_stats(const TimeSeriesPanel& panel, IndexRange train_range);

struct Standardized {
    TimeSeriesPanel panel;
    ChannelStats stats;
};

/// (x - mean) / std with statistics from train_range only; constant channels become 0.
Standardized standardize(const TimeSeriesPanel& panel, IndexRange train_range);

/// Standardize with previously fitted statistics (used at detection time).
TimeSeriesPanel apply_stats(const TimeSeriesPanel& panel, const ChannelStats& stats);

TimeSeriesPanel invert_standardize(const TimeSeriesPanel& panel, const ChannelStats& stats);

void to_json(nlohmann::json& j, const IndexRange& r);
void from_json(const nlohmann::json& j, IndexRange& r);
void to_json(nlohmann::json& j, const ChannelStats& s);
void from_json(const nlohmann::json& j, ChannelStats& s);

}  // namespace netrca
