#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hiercheck/errors.hpp"

namespace hiercheck {

struct Group {
    std::string label;
    std::size_t n = 0;
    double mean = 0.0;
    std::optional<double> sigma2;     // known first-level variance
    std::vector<double> observations;  // empty when supplied as sufficient statistics
};

// Grouped data for a two-level normal model, either raw observations or the
// sufficient statistics (n_i, mean_i[, sigma2_i]). Immutable after construction.
class GroupedDataset {
public:
    GroupedDataset() = default;

    explicit GroupedDataset(std::vector<Group> groups) : groups_(std::move(groups)) { validate(); }

    static GroupedDataset from_means(const std::vector<double>& means, std::size_t n, double sigma2) {
        std::vector<Group> gs;
        for (std::size_t i = 0; i < means.size(); ++i) {
            gs.push_back({std::to_string(i + 1), n, means[i], sigma2, {}});
        }
        return GroupedDataset(std::move(gs));
    }

    static GroupedDataset from_observations(const std::vector<std::vector<double>>& obs,
                                            std::optional<double> sigma2 = std::nullopt) {
        std::vector<Group> gs;
        for (std::size_t i = 0; i < obs.size(); ++i) {
            const auto& xs = obs[i];
            if (xs.empty()) throw data_error("group " + std::to_string(i + 1) + " has no observations");
            const double m = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
            gs.push_back({std::to_string(i + 1), xs.size(), m, sigma2, xs});
        }
        return GroupedDataset(std::move(gs));
    }

    std::size_t size() const { return groups_.size(); }
    const Group& group(std::size_t i) const { return groups_.at(i); }
    const std::vector<Group>& groups() const { return groups_; }

    std::vector<double> means() const {
        std::vector<double> out;
        out.reserve(groups_.size());
        for (const auto& g : groups_) out.push_back(g.mean);
        return out;
    }

    std::vector<double> sizes() const {
        std::vector<double> out;
        for (const auto& g : groups_) out.push_back(static_cast<double>(g.n));
        return out;
    }

    double total_size() const {
        double s = 0.0;
        for (const auto& g : groups_) s += static_cast<double>(g.n);
        return s;
    }

    bool has_known_variances() const {
        return !groups_.empty() &&
               std::all_of(groups_.begin(), groups_.end(), [](const Group& g) { return g.sigma2.has_value(); });
    }

    bool has_observations() const {
        return !groups_.empty() &&
               std::all_of(groups_.begin(), groups_.end(), [](const Group& g) { return !g.observations.empty(); });
    }

    // sigma_i^2 / n_i, the sampling variance of each group mean.
    std::vector<double> mean_variances() const {
        std::vector<double> out;
        for (const auto& g : groups_) {
            if (!g.sigma2) throw data_error("group '" + g.label + "' has no known variance");
            out.push_back(*g.sigma2 / static_cast<double>(g.n));
        }
        return out;
    }

    std::vector<double> variances() const {
        std::vector<double> out;
        for (const auto& g : groups_) {
            if (!g.sigma2) throw data_error("group '" + g.label + "' has no known variance");
            out.push_back(*g.sigma2);
        }
        return out;
    }

    // Per-group sum of squares about the group mean; needs raw observations.
    std::vector<double> within_ss() const {
        if (!has_observations()) throw data_error("raw observations required for within-group sums of squares");
        std::vector<double> out;
        for (const auto& g : groups_) {
            double s = 0.0;
            for (double x : g.observations) s += (x - g.mean) * (x - g.mean);
            out.push_back(s);
        }
        return out;
    }

    // Pooled within-group MLE of a common sigma^2 (divisor sum n_i).
    double pooled_sigma2_mle() const {
        const auto ss = within_ss();
        return std::accumulate(ss.begin(), ss.end(), 0.0) / total_size();
    }

    GroupedDataset with_common_variance(double sigma2) const {
        auto gs = groups_;
        for (auto& g : gs) g.sigma2 = sigma2;
        return GroupedDataset(std::move(gs));
    }

    GroupedDataset without_group(std::size_t i) const {
        auto gs = groups_;
        gs.erase(gs.begin() + static_cast<std::ptrdiff_t>(i));
        return GroupedDataset(std::move(gs));
    }

private:
    void validate() const {
        if (groups_.empty()) throw data_error("dataset has no groups");
        for (const auto& g : groups_) {
            if (g.n < 1) throw data_error("group '" + g.label + "' has n < 1");
            if (!std::isfinite(g.mean)) throw data_error("group '" + g.label + "' has a non-finite mean");
            if (g.sigma2 && !(*g.sigma2 > 0.0)) throw data_error("group '" + g.label + "' has sigma2 <= 0");
            if (!g.observations.empty()) {
                if (g.observations.size() != g.n) throw data_error("group '" + g.label + "' size mismatch");
                const double m = std::accumulate(g.observations.begin(), g.observations.end(), 0.0) /
                                 static_cast<double>(g.n);
                if (std::fabs(m - g.mean) > 1e-12 * std::max(1.0, std::fabs(m))) {
                    throw data_error("group '" + g.label + "' mean does not match its observations");
                }
            }
        }
    }

    std::vector<Group> groups_;
};

// Binomial counts per group: y_i successes out of n_i trials.
struct CountGroup {
    std::string label;
    long n = 0;
    long y = 0;
    double rate() const { return static_cast<double>(y) / static_cast<double>(n); }
};

class CountDataset {
public:
    CountDataset() = default;
    explicit CountDataset(std::vector<CountGroup> groups) : groups_(std::move(groups)) {
        if (groups_.empty()) throw data_error("count dataset has no groups");
        for (const auto& g : groups_) {
            if (g.n < 1) throw data_error("group '" + g.label + "' has n < 1");
            if (g.y < 0 || g.y > g.n) throw data_error("group '" + g.label + "' has y outside [0, n]");
        }
    }

    std::size_t size() const { return groups_.size(); }
    const CountGroup& group(std::size_t i) const { return groups_.at(i); }
    const std::vector<CountGroup>& groups() const { return groups_; }

    std::vector<double> rates() const {
        std::vector<double> out;
        for (const auto& g : groups_) out.push_back(g.rate());
        return out;
    }

    CountDataset without_group(std::size_t i) const {
        auto gs = groups_;
        gs.erase(gs.begin() + static_cast<std::ptrdiff_t>(i));
        return CountDataset(std::move(gs));
    }

private:
    std::vector<CountGroup> groups_;
};

namespace csv {

inline std::string trim(std::string s) {
    const auto ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_row(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

// Rows of a header-led CSV. Blank lines and lines starting with '#' are skipped.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        return -1;
    }
};

inline Table parse(std::istream& in) {
    Table t;
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (!have_header && line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF &&
            static_cast<unsigned char>(line[1]) == 0xBB && static_cast<unsigned char>(line[2]) == 0xBF) {
            line = line.substr(3);
        }
        const auto s = trim(line);
        if (s.empty() || s[0] == '#') continue;
        auto cells = split_row(s);
        if (!have_header) {
            t.header = std::move(cells);
            have_header = true;
        } else {
            if (cells.size() != t.header.size()) {
                throw data_error("CSV row has " + std::to_string(cells.size()) + " fields, header has " +
                                 std::to_string(t.header.size()));
            }
            t.rows.push_back(std::move(cells));
        }
    }
    if (!have_header) throw data_error("CSV input has no header row");
    return t;
}

inline double to_double(const std::string& s) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw data_error("not a number: '" + s + "'");
        return v;
    } catch (const std::logic_error&) {
        throw data_error("not a number: '" + s + "'");
    }
}

inline long to_long(const std::string& s) {
    const double v = to_double(s);
    if (v != std::floor(v)) throw data_error("not an integer: '" + s + "'");
    return static_cast<long>(v);
}

}  // namespace csv

// Reads either the long form (group_id, value) or the stats form
// (group_id, n, mean[, sigma2]). Group order follows first appearance.
inline GroupedDataset read_grouped_csv(std::istream& in) {
    const auto t = csv::parse(in);
    const int gid = t.column("group_id");
    if (gid < 0) throw data_error("CSV header must contain 'group_id'");
    const int val = t.column("value");
    if (val >= 0) {
        std::vector<std::string> order;
        std::map<std::string, std::vector<double>> obs;
        for (const auto& r : t.rows) {
            const auto& g = r[static_cast<std::size_t>(gid)];
            if (!obs.count(g)) order.push_back(g);
            obs[g].push_back(csv::to_double(r[static_cast<std::size_t>(val)]));
        }
        std::vector<Group> gs;
        for (const auto& g : order) {
            const auto& xs = obs[g];
            const double m = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
            gs.push_back({g, xs.size(), m, std::nullopt, xs});
        }
        return GroupedDataset(std::move(gs));
    }
    const int n = t.column("n");
    const int mean = t.column("mean");
    if (n < 0 || mean < 0) throw data_error("CSV header must be (group_id, value) or (group_id, n, mean[, sigma2])");
    const int s2 = t.column("sigma2");
    std::vector<Group> gs;
    for (const auto& r : t.rows) {
        Group g;
        g.label = r[static_cast<std::size_t>(gid)];
        const long nn = csv::to_long(r[static_cast<std::size_t>(n)]);
        if (nn < 1) throw data_error("group '" + g.label + "' has n < 1");
        g.n = static_cast<std::size_t>(nn);
        g.mean = csv::to_double(r[static_cast<std::size_t>(mean)]);
        if (s2 >= 0 && !r[static_cast<std::size_t>(s2)].empty()) g.sigma2 = csv::to_double(r[static_cast<std::size_t>(s2)]);
        gs.push_back(std::move(g));
    }
    return GroupedDataset(std::move(gs));
}

inline GroupedDataset read_grouped_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open dataset file '" + path + "'");
    return read_grouped_csv(in);
}

// Count data: (group_id, n, y).
inline CountDataset read_count_csv(std::istream& in) {
    const auto t = csv::parse(in);
    const int gid = t.column("group_id");
    const int n = t.column("n");
    const int y = t.column("y");
    if (gid < 0 || n < 0 || y < 0) throw data_error("count CSV header must contain group_id, n, y");
    std::vector<CountGroup> gs;
    for (const auto& r : t.rows) {
        gs.push_back({r[static_cast<std::size_t>(gid)], csv::to_long(r[static_cast<std::size_t>(n)]),
                      csv::to_long(r[static_cast<std::size_t>(y)])});
    }
    return CountDataset(std::move(gs));
}

inline CountDataset read_count_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open count file '" + path + "'");
    return read_count_csv(in);
}

}  // namespace hiercheck
