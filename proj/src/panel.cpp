#include "netrca/panel.hpp"

#include "netrca/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

namespace netrca {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            out.push_back(trim(std::string_view(line).substr(start)));
            break;
        }
        out.push_back(trim(std::string_view(line).substr(start, comma - start)));
        start = comma + 1;
    }
    return out;
}

bool is_uniform(const std::vector<std::int64_t>& ts) {
    if (ts.size() < 3) return true;
    const std::int64_t step = ts[1] - ts[0];
    for (std::size_t i = 2; i < ts.size(); ++i) {
        if (ts[i] - ts[i - 1] != step) return false;
    }
    return true;
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void check_train_range(const TimeSeriesPanel& panel, IndexRange r) {
    if (r.empty()) {
        throw Error(ErrorKind::InvalidWindow, "empty training range");
    }
    if (r.end > panel.length()) {
        throw Error(ErrorKind::InvalidWindow, "training range exceeds panel length");
    }
}

}  // namespace

TimeSeriesPanel::TimeSeriesPanel(std::vector<std::int64_t> timestamps, std::vector<std::string> channel_names,
                                 Matrix values, BoolMatrix missing_mask)
    : timestamps_(std::move(timestamps)),
      channel_names_(std::move(channel_names)),
      values_(std::move(values)),
      missing_mask_(std::move(missing_mask)) {
    if (values_.rows() == 0) {
        throw Error(ErrorKind::EmptyInput, "panel has no rows");
    }
    if (values_.cols() == 0) {
        throw Error(ErrorKind::EmptyInput, "panel has no channels");
    }
    if (static_cast<Eigen::Index>(timestamps_.size()) != values_.rows() ||
        static_cast<Eigen::Index>(channel_names_.size()) != values_.cols()) {
        throw Error(ErrorKind::MalformedInput, "panel dimensions disagree with timestamps/names");
    }
    if (missing_mask_.rows() != values_.rows() || missing_mask_.cols() != values_.cols()) {
        throw Error(ErrorKind::MalformedInput, "missing mask dimensions disagree with values");
    }
    for (std::size_t i = 1; i < timestamps_.size(); ++i) {
        if (timestamps_[i] <= timestamps_[i - 1]) {
            throw Error(ErrorKind::MalformedInput,
                        "timestamps not strictly increasing at row " + std::to_string(i));
        }
    }
    if (!is_uniform(timestamps_)) {
        throw Error(ErrorKind::MalformedInput, "timestamps are not on a uniform grid");
    }
    std::set<std::string> seen;
    for (const auto& name : channel_names_) {
        if (!seen.insert(name).second) {
            throw Error(ErrorKind::MalformedInput, "duplicate channel name '" + name + "'");
        }
    }
}

TimeSeriesPanel::TimeSeriesPanel(std::vector<std::int64_t> timestamps, std::vector<std::string> channel_names,
                                 Matrix values)
    : TimeSeriesPanel(std::move(timestamps), std::move(channel_names), values,
                      BoolMatrix::Constant(values.rows(), values.cols(), false)) {}

long TimeSeriesPanel::find_channel(const std::string& name) const {
    auto it = std::find(channel_names_.begin(), channel_names_.end(), name);
    return it == channel_names_.end() ? -1 : static_cast<long>(it - channel_names_.begin());
}

bool TimeSeriesPanel::has_undefined() const {
    return !values_.allFinite();
}

TimeSeriesPanel TimeSeriesPanel::with_values(Matrix values) const {
    return TimeSeriesPanel(timestamps_, channel_names_, std::move(values), missing_mask_);
}

ImputeMethod parse_impute_method(const std::string& name) {
    if (name == "linear-interpolate" || name == "linear") return ImputeMethod::LinearInterpolate;
    if (name == "hold-last") return ImputeMethod::HoldLast;
    if (name == "channel-mean") return ImputeMethod::ChannelMean;
    throw Error(ErrorKind::InvalidConfig, "unknown imputation method '" + name + "'");
}

std::string to_string(ImputeMethod method) {
    switch (method) {
        case ImputeMethod::LinearInterpolate: return "linear-interpolate";
        case ImputeMethod::HoldLast: return "hold-last";
        case ImputeMethod::ChannelMean: return "channel-mean";
    }
    return "linear-interpolate";
}

TimeSeriesPanel resample_uniform(const std::vector<std::int64_t>& timestamps,
                                 const std::vector<std::string>& names, const Matrix& values,
                                 std::int64_t step) {
    if (timestamps.empty()) {
        throw Error(ErrorKind::EmptyInput, "no rows to resample");
    }
    if (step <= 0) {
        throw Error(ErrorKind::MalformedInput, "resampling step must be positive");
    }
    const std::int64_t t0 = timestamps.front();
    const std::size_t rows = static_cast<std::size_t>((timestamps.back() - t0) / step) + 1;
    std::vector<std::int64_t> grid(rows);
    Matrix out(static_cast<Eigen::Index>(rows), values.cols());
    BoolMatrix mask(static_cast<Eigen::Index>(rows), values.cols());
    std::size_t j = 0;
    for (std::size_t r = 0; r < rows; ++r) {
        const std::int64_t t = t0 + static_cast<std::int64_t>(r) * step;
        grid[r] = t;
        while (j + 1 < timestamps.size() && std::llabs(timestamps[j + 1] - t) < std::llabs(timestamps[j] - t)) {
            ++j;
        }
        for (Eigen::Index c = 0; c < values.cols(); ++c) {
            const double v = values(static_cast<Eigen::Index>(j), c);
            out(static_cast<Eigen::Index>(r), c) = v;
            mask(static_cast<Eigen::Index>(r), c) = std::isnan(v);
        }
    }
    return TimeSeriesPanel(std::move(grid), names, std::move(out), std::move(mask));
}

TimeSeriesPanel load_panel(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw Error(ErrorKind::EmptyInput, "missing header row");
    }
    auto header = split_csv(line);
    if (header.size() < 2) {
        throw Error(ErrorKind::MalformedInput, "header needs a timestamp column and at least one channel");
    }
    std::vector<std::string> names(header.begin() + 1, header.end());
    {
        std::set<std::string> seen;
        for (const auto& n : names) {
            if (n.empty()) throw Error(ErrorKind::MalformedInput, "empty channel name in header");
            if (!seen.insert(n).second) {
                throw Error(ErrorKind::MalformedInput, "duplicate channel name '" + n + "'");
            }
        }
    }

    std::vector<std::int64_t> timestamps;
    std::vector<double> flat;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        auto fields = split_csv(line);
        if (fields.size() != header.size()) {
            throw Error(ErrorKind::MalformedInput, "row " + std::to_string(row) + " has " +
                                                       std::to_string(fields.size()) + " fields, expected " +
                                                       std::to_string(header.size()));
        }
        std::int64_t ts = 0;
        const auto& tf = fields[0];
        auto [ptr, ec] = std::from_chars(tf.data(), tf.data() + tf.size(), ts);
        if (ec != std::errc() || ptr != tf.data() + tf.size()) {
            throw Error(ErrorKind::MalformedInput, "unparseable timestamp '" + tf + "' on row " + std::to_string(row));
        }
        if (!timestamps.empty() && ts <= timestamps.back()) {
            throw Error(ErrorKind::MalformedInput, "non-monotone timestamp " + tf + " on row " + std::to_string(row));
        }
        timestamps.push_back(ts);
        for (std::size_t c = 1; c < fields.size(); ++c) {
            const auto& f = fields[c];
            if (f.empty()) {
                flat.push_back(kNaN);
                continue;
            }
            double v = 0.0;
            auto [p2, ec2] = std::from_chars(f.data(), f.data() + f.size(), v);
            if (ec2 != std::errc() || p2 != f.data() + f.size()) {
                throw Error(ErrorKind::MalformedInput, "non-numeric value '" + f + "' on row " + std::to_string(row));
            }
            flat.push_back(v);
        }
    }
    if (timestamps.empty()) {
        throw Error(ErrorKind::EmptyInput, "no data rows");
    }
    const auto rows = static_cast<Eigen::Index>(timestamps.size());
    const auto cols = static_cast<Eigen::Index>(names.size());
    Matrix values(rows, cols);
    BoolMatrix mask(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
            const double v = flat[static_cast<std::size_t>(r * cols + c)];
            values(r, c) = v;
            mask(r, c) = std::isnan(v);
        }
    }
    if (!is_uniform(timestamps)) {
        std::vector<std::int64_t> steps;
        for (std::size_t i = 1; i < timestamps.size(); ++i) steps.push_back(timestamps[i] - timestamps[i - 1]);
        std::nth_element(steps.begin(), steps.begin() + static_cast<long>(steps.size() / 2), steps.end());
        return resample_uniform(timestamps, names, values, steps[steps.size() / 2]);
    }
    return TimeSeriesPanel(std::move(timestamps), std::move(names), std::move(values), std::move(mask));
}

TimeSeriesPanel load_panel_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::MissingInput, "cannot open panel file " + path);
    }
    return load_panel(in);
}

void save_panel(const TimeSeriesPanel& panel, std::ostream& out) {
    out << "timestamp";
    for (const auto& n : panel.channel_names()) out << ',' << n;
    out << '\n';
    for (std::size_t t = 0; t < panel.length(); ++t) {
        out << panel.timestamps()[t];
        for (std::size_t c = 0; c < panel.channels(); ++c) {
            out << ',';
            const double v = panel.at(t, c);
            if (!std::isnan(v)) out << format_double(v);
        }
        out << '\n';
    }
}

void save_panel_file(const TimeSeriesPanel& panel, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw Error(ErrorKind::MissingInput, "cannot write panel file " + path);
    }
    save_panel(panel, out);
}

TimeSeriesPanel impute_missing(const TimeSeriesPanel& panel, ImputeMethod method) {
    Matrix values = panel.values();
    const auto rows = values.rows();
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
        std::vector<Eigen::Index> observed;
        for (Eigen::Index t = 0; t < rows; ++t) {
            if (!std::isnan(values(t, c))) observed.push_back(t);
        }
        if (observed.empty()) {
            throw Error(ErrorKind::DegenerateChannel,
                        "channel '" + panel.channel_names()[static_cast<std::size_t>(c)] + "' has no observed values");
        }
        if (static_cast<Eigen::Index>(observed.size()) == rows) continue;

        if (method == ImputeMethod::ChannelMean) {
            double sum = 0.0;
            for (auto t : observed) sum += values(t, c);
            const double mean = sum / static_cast<double>(observed.size());
            for (Eigen::Index t = 0; t < rows; ++t) {
                if (std::isnan(values(t, c))) values(t, c) = mean;
            }
            continue;
        }

        // Leading gap: no earlier sample exists, so both methods back-fill.
        for (Eigen::Index t = 0; t < observed.front(); ++t) values(t, c) = values(observed.front(), c);
        for (std::size_t k = 0; k + 1 < observed.size(); ++k) {
            const Eigen::Index a = observed[k];
            const Eigen::Index b = observed[k + 1];
            for (Eigen::Index t = a + 1; t < b; ++t) {
                if (method == ImputeMethod::HoldLast) {
                    values(t, c) = values(a, c);
                } else {
                    const double w = static_cast<double>(t - a) / static_cast<double>(b - a);
                    values(t, c) = (1.0 - w) * values(a, c) + w * values(b, c);
                }
            }
        }
        for (Eigen::Index t = observed.back() + 1; t < rows; ++t) values(t, c) = values(observed.back(), c);
    }
    return panel.with_values(std::move(values));
}

TimeSeriesPanel smooth(const TimeSeriesPanel& panel, std::size_t window) {
    const std::size_t T = panel.length();
    if (window == 0 || window > T) {
        throw Error(ErrorKind::InvalidWindow,
                    "smoothing window " + std::to_string(window) + " outside [1, " + std::to_string(T) + "]");
    }
    if (window == 1) return panel;
    const std::size_t back = (window - 1) / 2;
    const std::size_t ahead = window / 2;
    const Matrix& in = panel.values();
    Matrix out(in.rows(), in.cols());
    for (Eigen::Index c = 0; c < in.cols(); ++c) {
        // Prefix sums keep this O(T) per channel.
        std::vector<double> prefix(T + 1, 0.0);
        for (std::size_t t = 0; t < T; ++t) prefix[t + 1] = prefix[t] + in(static_cast<Eigen::Index>(t), c);
        for (std::size_t t = 0; t < T; ++t) {
            const std::size_t lo = t >= back ? t - back : 0;
            const std::size_t hi = std::min(T - 1, t + ahead);
            out(static_cast<Eigen::Index>(t), c) = (prefix[hi + 1] - prefix[lo]) / static_cast<double>(hi - lo + 1);
        }
    }
    return panel.with_values(std::move(out));
}

ChannelStats compute_stats(const TimeSeriesPanel& panel, IndexRange train_range) {
    check_train_range(panel, train_range);
    ChannelStats stats;
    stats.train_range = train_range;
    const double n = static_cast<double>(train_range.size());
    for (std::size_t c = 0; c < panel.channels(); ++c) {
        double sum = 0.0;
        for (std::size_t t = train_range.begin; t < train_range.end; ++t) sum += panel.at(t, c);
        const double mean = sum / n;
        double ss = 0.0;
        for (std::size_t t = train_range.begin; t < train_range.end; ++t) {
            const double d = panel.at(t, c) - mean;
            ss += d * d;
        }
        const double sd = std::sqrt(ss / n);
        stats.mean.push_back(mean);
        stats.std.push_back(sd);
        stats.constant.push_back(!(sd > 1e-12 * std::max(1.0, std::fabs(mean))));
    }
    return stats;
}

TimeSeriesPanel apply_stats(const TimeSeriesPanel& panel, const ChannelStats& stats) {
    if (stats.mean.size() != panel.channels()) {
        throw Error(ErrorKind::ChannelMismatch, "statistics cover " + std::to_string(stats.mean.size()) +
                                                    " channels, panel has " + std::to_string(panel.channels()));
    }
    Matrix out = panel.values();
    for (Eigen::Index c = 0; c < out.cols(); ++c) {
        const auto ci = static_cast<std::size_t>(c);
        if (stats.constant[ci]) {
            out.col(c).setZero();
        } else {
            out.col(c) = (out.col(c).array() - stats.mean[ci]) / stats.std[ci];
        }
    }
    return panel.with_values(std::move(out));
}

Standardized standardize(const TimeSeriesPanel& panel, IndexRange train_range) {
    ChannelStats stats = compute_stats(panel, train_range);
    TimeSeriesPanel out = apply_stats(panel, stats);
    return {std::move(out), std::move(stats)};
}

TimeSeriesPanel invert_standardize(const TimeSeriesPanel& panel, const ChannelStats& stats) {
    if (stats.mean.size() != panel.channels()) {
        throw Error(ErrorKind::ChannelMismatch, "statistics do not match panel width");
    }
    Matrix out = panel.values();
    for (Eigen::Index c = 0; c < out.cols(); ++c) {
        const auto ci = static_cast<std::size_t>(c);
        const double scale = stats.constant[ci] ? 0.0 : stats.std[ci];
        out.col(c) = out.col(c).array() * scale + stats.mean[ci];
    }
    return panel.with_values(std::move(out));
}

void to_json(nlohmann::json& j, const IndexRange& r) {
    j = nlohmann::json{{"begin", r.begin}, {"end", r.end}};
}

void from_json(const nlohmann::json& j, IndexRange& r) {
    r.begin = j.at("begin").get<std::size_t>();
    r.end = j.at("end").get<std::size_t>();
}

void to_json(nlohmann::json& j, const ChannelStats& s) {
    j = nlohmann::json{{"format_version", 1},
                       {"mean", s.mean},
                       {"std", s.std},
                       {"constant", s.constant},
                       {"train_range", s.train_range}};
}

void from_json(const nlohmann::json& j, ChannelStats& s) {
    s.mean = j.at("mean").get<std::vector<double>>();
    s.std = j.at("std").get<std::vector<double>>();
    s.constant = j.at("constant").get<std::vector<bool>>();
    s.train_range = j.at("train_range").get<IndexRange>();
    if (s.std.size() != s.mean.size() || s.constant.size() != s.mean.size()) {
        throw Error(ErrorKind::MalformedInput, "channel statistics arrays differ in length");
    }
}

}  // namespace netrca
