#include "tsdag/ts_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "tsdag/errors.hpp"

namespace tsdag {

using nlohmann::json;

int TimeSeriesDataset::variable_index(const std::string& name) const {
    auto it = std::find(variables.begin(), variables.end(), name);
    return it == variables.end() ? -1 : static_cast<int>(it - variables.begin());
}

void TimeSeriesDataset::validate() const {
    if (variables.empty()) throw ArgumentError("dataset has no variables");
    std::set<std::string> names(variables.begin(), variables.end());
    if (names.size() != variables.size()) throw ArgumentError("duplicate variable names");
    if (!replicate_ids.empty() && replicate_ids.size() != replicates.size())
        throw ArgumentError("replicate id count does not match replicate count");
    if (!times.empty() && times.size() != replicates.size())
        throw ArgumentError("time stamp lists do not match replicate count");
    for (std::size_t j = 0; j < replicates.size(); ++j) {
        if (replicates[j].cols() != p())
            throw ArgumentError("replicate " + std::to_string(j) + " has " + std::to_string(replicates[j].cols()) +
                                " columns, expected " + std::to_string(p()));
        if (!times.empty() && static_cast<Eigen::Index>(times[j].size()) != replicates[j].rows())
            throw ArgumentError("replicate " + std::to_string(j) + " time stamps do not match its length");
        if (!replicates[j].allFinite()) throw ArgumentError("replicate " + std::to_string(j) + " has non-finite values");
    }
}

DataFormat format_for(const std::filesystem::path& path) {
    return path.extension() == ".json" ? DataFormat::json : DataFormat::csv;
}

// ---------------------------------------------------------------- CSV

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
        std::size_t b = 0;
        while (b < cell.size() && cell[b] == ' ') ++b;
        out.push_back(cell.substr(b));
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_number(const std::string& cell, std::size_t row, std::size_t col) {
    double v = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    if (!cell.empty() && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (cell.empty() || ec != std::errc() || ptr != last || !std::isfinite(v))
        throw ParseError("non-numeric or missing value '" + cell + "' at row " + std::to_string(row) + ", column " +
                             std::to_string(col),
                         row, col);
    return v;
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

TimeSeriesDataset read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty CSV input", 1, 0);
    auto header = split_csv_line(line);
    if (header.size() < 3 || header[0] != "replicate" || header[1] != "time")
        throw ParseError("CSV header must start with 'replicate,time' followed by variable names", 1, 1);
    TimeSeriesDataset ds;
    ds.variables.assign(header.begin() + 2, header.end());
    const std::size_t ncol = header.size();

    std::vector<std::vector<double>> rows;
    std::vector<double> stamps;
    std::string current;
    std::set<std::string> finished;
    auto flush = [&]() {
        if (rows.empty()) return;
        Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), ds.p());
        for (std::size_t r = 0; r < rows.size(); ++r)
            for (int c = 0; c < ds.p(); ++c) m(static_cast<Eigen::Index>(r), c) = rows[r][c];
        ds.replicates.push_back(std::move(m));
        ds.replicate_ids.push_back(current);
        ds.times.push_back(stamps);
        finished.insert(current);
        rows.clear();
        stamps.clear();
    };

    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        auto cells = split_csv_line(line);
        if (cells.size() != ncol)
            throw ParseError("row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                                 " cells, header has " + std::to_string(ncol),
                             row, std::min(cells.size(), ncol) + 1);
        if (cells[0].empty()) throw ParseError("missing replicate id at row " + std::to_string(row), row, 1);
        if (cells[0] != current) {
            flush();
            if (finished.contains(cells[0]))
                throw ParseError("replicate '" + cells[0] + "' is not contiguous (row " + std::to_string(row) + ")",
                                 row, 1);
            current = cells[0];
        }
        const double t = parse_number(cells[1], row, 2);
        if (!stamps.empty() && !(t > stamps.back()))
            throw ParseError("time not increasing within replicate '" + current + "' at row " + std::to_string(row),
                             row, 2);
        stamps.push_back(t);
        std::vector<double> values(ds.variables.size());
        for (std::size_t c = 2; c < ncol; ++c) values[c - 2] = parse_number(cells[c], row, c + 1);
        rows.push_back(std::move(values));
    }
    flush();
    try {
        ds.validate();
    } catch (const ArgumentError& e) {
        throw ParseError(e.what());
    }
    return ds;
}

void write_csv(const TimeSeriesDataset& ds, std::ostream& out) {
    ds.validate();
    out << "replicate,time";
    for (const auto& v : ds.variables) out << ',' << v;
    out << '\n';
    for (int j = 0; j < ds.m(); ++j) {
        const std::string id = ds.replicate_ids.empty() ? std::to_string(j + 1) : ds.replicate_ids[j];
        const auto& x = ds.replicates[j];
        for (Eigen::Index r = 0; r < x.rows(); ++r) {
            const double t = ds.times.empty() ? static_cast<double>(r + 1) : ds.times[j][r];
            out << id << ',' << format_double(t);
            for (Eigen::Index c = 0; c < x.cols(); ++c) out << ',' << format_double(x(r, c));
            out << '\n';
        }
    }
}

// ---------------------------------------------------------------- JSON

TimeSeriesDataset dataset_from_json(const json& j) {
    TimeSeriesDataset ds;
    try {
        ds.variables = j.at("variables").get<std::vector<std::string>>();
        const json& reps = j.at("replicates");
        if (!reps.is_array()) throw ParseError("'replicates' must be an array");
        std::size_t rj = 0;
        for (const json& rep : reps) {
            ++rj;
            if (!rep.is_array()) throw ParseError("replicate " + std::to_string(rj) + " must be an array of rows", rj);
            Eigen::MatrixXd m(static_cast<Eigen::Index>(rep.size()), ds.p());
            Eigen::Index r = 0;
            for (const json& rowv : rep) {
                if (!rowv.is_array() || static_cast<int>(rowv.size()) != ds.p())
                    throw ParseError("replicate " + std::to_string(rj) + " row " + std::to_string(r + 1) +
                                         " does not have " + std::to_string(ds.p()) + " values",
                                     static_cast<std::size_t>(r + 1), rj);
                for (int c = 0; c < ds.p(); ++c) {
                    if (!rowv[c].is_number())
                        throw ParseError("non-numeric value in replicate " + std::to_string(rj) + " row " +
                                             std::to_string(r + 1) + " column " + std::to_string(c + 1),
                                         static_cast<std::size_t>(r + 1), static_cast<std::size_t>(c + 1));
                    m(r, c) = rowv[c].get<double>();
                }
                ++r;
            }
            ds.replicates.push_back(std::move(m));
        }
        if (j.contains("replicate_ids")) ds.replicate_ids = j.at("replicate_ids").get<std::vector<std::string>>();
        if (j.contains("times")) ds.times = j.at("times").get<std::vector<std::vector<double>>>();
    } catch (const json::exception& e) {
        throw ParseError(std::string("dataset JSON: ") + e.what());
    }
    try {
        ds.validate();
    } catch (const ArgumentError& e) {
        throw ParseError(e.what());
    }
    return ds;
}

json dataset_to_json(const TimeSeriesDataset& ds) {
    ds.validate();
    json reps = json::array();
    for (const auto& x : ds.replicates) {
        json rows = json::array();
        for (Eigen::Index r = 0; r < x.rows(); ++r) {
            json rowv = json::array();
            for (Eigen::Index c = 0; c < x.cols(); ++c) rowv.push_back(x(r, c));
            rows.push_back(std::move(rowv));
        }
        reps.push_back(std::move(rows));
    }
    json j = {{"variables", ds.variables}, {"replicates", std::move(reps)}};
    if (!ds.replicate_ids.empty()) j["replicate_ids"] = ds.replicate_ids;
    if (!ds.times.empty()) j["times"] = ds.times;
    return j;
}

TimeSeriesDataset load_dataset(const std::filesystem::path& path, DataFormat format) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open dataset " + path.string());
    if (format == DataFormat::csv) return read_csv(in);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError("dataset " + path.string() + ": " + e.what(), 0, e.byte);
    }
    return dataset_from_json(j);
}

TimeSeriesDataset load_dataset(const std::filesystem::path& path) { return load_dataset(path, format_for(path)); }

void save_dataset(const TimeSeriesDataset& ds, const std::filesystem::path& path, DataFormat format) {
    std::ofstream out(path);
    if (!out) throw ArgumentError("cannot write " + path.string());
    if (format == DataFormat::csv)
        write_csv(ds, out);
    else
        out << dataset_to_json(ds).dump(1) << '\n';
}

// ---------------------------------------------------------------- piling

PiledMatrix pile(const TimeSeriesDataset& ds, int q, std::vector<std::string>* warnings) {
    if (q < 0) throw ArgumentError("lag must be non-negative");
    ds.validate();
    const int p = ds.p();
    PiledMatrix pm;
    pm.p = p;
    pm.q = q;
    int total = 0;
    for (int j = 0; j < ds.m(); ++j) {
        const auto n = static_cast<int>(ds.replicates[j].rows());
        if (n < q + 1) {
            if (warnings)
                warnings->push_back("replicate " + (ds.replicate_ids.empty() ? std::to_string(j + 1) : ds.replicate_ids[j]) +
                                    " has " + std::to_string(n) + " time points, fewer than q+1=" + std::to_string(q + 1) +
                                    "; excluded");
            continue;
        }
        pm.segment_offsets.push_back(total);
        pm.segment_lengths.push_back(n - q);
        pm.source_replicates.push_back(j);
        total += n - q;
    }
    if (total == 0) throw ArgumentError("empty pile: no replicate has at least q+1 time points");

    pm.data.resize(total, static_cast<Eigen::Index>(p) * (q + 1));
    for (int s = 0; s < pm.segments(); ++s) {
        const auto& x = ds.replicates[pm.source_replicates[s]];
        for (int r = 0; r < pm.segment_lengths[s]; ++r)
            for (int block = 0; block <= q; ++block)  // block b holds lag q - b
                pm.data.block(pm.segment_offsets[s] + r, static_cast<Eigen::Index>(block) * p, 1, p) = x.row(r + block);
    }

    pm.reduction_order.resize(pm.segments());
    std::iota(pm.reduction_order.begin(), pm.reduction_order.end(), 0);
    auto less = [&pm](int a, int b) {
        if (pm.segment_lengths[a] != pm.segment_lengths[b]) return pm.segment_lengths[a] < pm.segment_lengths[b];
        const auto A = pm.data.middleRows(pm.segment_offsets[a], pm.segment_lengths[a]);
        const auto B = pm.data.middleRows(pm.segment_offsets[b], pm.segment_lengths[b]);
        for (Eigen::Index r = 0; r < A.rows(); ++r)
            for (Eigen::Index c = 0; c < A.cols(); ++c)
                if (A(r, c) != B(r, c)) return A(r, c) < B(r, c);
        return false;
    };
    std::stable_sort(pm.reduction_order.begin(), pm.reduction_order.end(), less);
    return pm;
}

SufficientStats sufficient_stats(const PiledMatrix& pm, bool center) {
    const int n = pm.rows();
    if (n < 1) throw DegenerateError("no rows in piled matrix");
    if (center && n < 2) throw DegenerateError("need at least 2 piled rows to estimate a centred covariance");
    const auto k = pm.data.cols();
    SufficientStats st;
    st.n = n;
    st.centered = center;
    st.means = Eigen::VectorXd::Zero(k);
    for (int s : pm.reduction_order)
        st.means += pm.data.middleRows(pm.segment_offsets[s], pm.segment_lengths[s]).colwise().sum().transpose();
    st.means /= static_cast<double>(n);

    st.covariance = Eigen::MatrixXd::Zero(k, k);
    const Eigen::RowVectorXd shift = center ? Eigen::RowVectorXd(st.means.transpose()) : Eigen::RowVectorXd::Zero(k);
    for (int s : pm.reduction_order) {
        const Eigen::MatrixXd block =
            pm.data.middleRows(pm.segment_offsets[s], pm.segment_lengths[s]).rowwise() - shift;
        st.covariance.noalias() += block.transpose() * block;
    }
    st.covariance /= static_cast<double>(n);
    // Exact symmetry.
    st.covariance = (0.5 * (st.covariance + st.covariance.transpose())).eval();
    return st;
}

}  // namespace tsdag
