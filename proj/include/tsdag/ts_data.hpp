#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "tsdag/graph.hpp"

namespace tsdag {

/// m replicate series over the same p variables; replicate j is an n_j x p matrix.
struct TimeSeriesDataset {
    std::vector<std::string> variables;
    std::vector<Eigen::MatrixXd> replicates;
    std::vector<std::string> replicate_ids;
    /// Optional time stamps, one vector per replicate; empty when absent.
    std::vector<std::vector<double>> times;

    int p() const { return static_cast<int>(variables.size()); }
    int m() const { return static_cast<int>(replicates.size()); }
    int variable_index(const std::string& name) const;

    /// Checks column counts, ids and time stamp shapes; throws ArgumentError.
    void validate() const;
};

enum class DataFormat { csv, json };

/// Picks the format from the extension (.json -> json, anything else -> csv).
DataFormat format_for(const std::filesystem::path& path);

TimeSeriesDataset load_dataset(const std::filesystem::path& path, DataFormat format);
TimeSeriesDataset load_dataset(const std::filesystem::path& path);
void save_dataset(const TimeSeriesDataset& ds, const std::filesystem::path& path, DataFormat format);

/// Long CSV: header `replicate,time,<var1>,...,<varp>`, rows grouped by replicate
/// and increasing in time within each replicate.
TimeSeriesDataset read_csv(std::istream& in);
void write_csv(const TimeSeriesDataset& ds, std::ostream& out);

/// {"variables": [...], "replicates": [[[row], ...], ...], "replicate_ids": [...], "times": [[...], ...]}
TimeSeriesDataset dataset_from_json(const nlohmann::json& j);
nlohmann::json dataset_to_json(const TimeSeriesDataset& ds);

/// Row-stacked lag windows. Row r of segment j holds (X_{t-q}, ..., X_t) of replicate
/// j for t = q + r (0-based), so column (q - l) * p + g is variable g at lag l.
struct PiledMatrix {
    Eigen::MatrixXd data;
    std::vector<int> segment_lengths;
    std::vector<int> segment_offsets;
    /// Replicates that produced each segment (short replicates are skipped).
    std::vector<int> source_replicates;
    /// Segment visiting order used by every reduction over rows. It depends only on
    /// segment contents, so statistics do not change when replicates are reordered.
    std::vector<int> reduction_order;
    int p = 0;
    int q = 0;

    int rows() const { return static_cast<int>(data.rows()); }
    int segments() const { return static_cast<int>(segment_lengths.size()); }
    TimeLayout layout() const { return {p, q}; }
};

/// Replicates with n_j < q + 1 are dropped, with a note appended to `warnings`.
PiledMatrix pile(const TimeSeriesDataset& ds, int q, std::vector<std::string>* warnings = nullptr);

/// Gaussian sufficient statistics of the piled rows, MLE normalisation (divide by N).
struct SufficientStats {
    Eigen::MatrixXd covariance;
    Eigen::VectorXd means;
    int n = 0;
    bool centered = true;
};

SufficientStats sufficient_stats(const PiledMatrix& pm, bool center = true);

}  // namespace tsdag
