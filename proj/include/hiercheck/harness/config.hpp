#pragma once

// Experiment configuration: a flat `key = value` file (a TOML subset: bare or
// quoted strings, numbers, true/false, one-line [a, b] arrays, # comments).
// Keys are the ExperimentConfig field names.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hiercheck/binbeta.hpp"
#include "hiercheck/conflict.hpp"
#include "hiercheck/dataset.hpp"
#include "hiercheck/errors.hpp"
#include "hiercheck/mcmc.hpp"
#include "hiercheck/parallel.hpp"
#include "hiercheck/statistics.hpp"
#include "hiercheck/surprise.hpp"

namespace hiercheck::harness {

enum class Format { Csv, Json, Both };

inline Format parse_format(const std::string& s) {
    if (s == "csv") return Format::Csv;
    if (s == "json") return Format::Json;
    if (s == "both") return Format::Both;
    throw config_error("format must be csv, json or both, got '" + s + "'");
}

inline std::string to_string(Format f) {
    switch (f) {
        case Format::Csv: return "csv";
        case Format::Json: return "json";
        case Format::Both: return "both";
    }
    return "?";
}

struct ExperimentConfig {
    std::string command = "check";
    std::string dataset = "example1";  // built-in name or CSV path
    std::string counts;                // count-data CSV for binbeta
    std::string statistic = "max";
    std::vector<std::string> constructions{"eb-prior", "eb-post", "posterior", "partial-posterior"};
    double mu0 = 0.0;

    // Chains. draws is the retained count; iterations = burn_in + draws * thinning.
    std::size_t draws = 30000;
    std::size_t burn_in = 10000;
    std::size_t thinning = 1;
    std::size_t eb_draws = 100000;  // Monte Carlo draws for EB predictives
    std::string sampler = "printed";  // partial-posterior ratio: printed | exact
    std::uint64_t seed = 20070322;
    std::uint64_t stream = 0;

    // Studies.
    std::size_t replicates = 500;
    std::vector<std::size_t> groups{5, 15, 25};
    std::size_t group_size = 8;
    double sigma2 = 4.0;
    std::vector<std::string> alternatives{"exponential", "gumbel", "lognormal"};
    std::vector<double> alphas{0.02, 0.05, 0.1, 0.2};
    std::size_t bins = 20;

    // Conflict suite.
    std::string prior = "ohagan";  // ohagan | reference
    std::string prior_w = "plain";  // plain | scaled
    std::optional<std::vector<std::string>> discrepancies;  // unset: T1,T2 under a proper prior
    std::size_t sim_draws = 2500;
    std::size_t sim_burn_in = 500;

    // Binomial-beta suite.
    bool synthetic = false;
    std::size_t synthetic_groups = 12;
    long synthetic_n = 150;
    double synthetic_alpha = 4.0;
    double synthetic_beta = 26.0;
    double hyper_sd = 0.3;

    std::size_t grid_points = 401;
    std::string out;  // empty: tables to stdout
    Format format = Format::Csv;
    std::size_t workers = default_workers();

    ChainConfig chain() const {
        ChainConfig c;
        c.burn_in = burn_in;
        c.thinning = thinning;
        c.iterations = burn_in + draws * thinning;
        c.seed = seed;
        c.stream = stream;
        if (sampler == "exact") c.use_exact_sampler();
        return c;
    }

    ChainConfig sim_chain() const {
        ChainConfig c = chain();
        c.burn_in = sim_burn_in;
        c.thinning = 1;
        c.iterations = sim_burn_in + sim_draws;
        return c;
    }

    NormalPrior normal_prior() const {
        if (prior == "reference") return NormalPrior::reference();
        return NormalPrior::ohagan(prior_w == "scaled");
    }

    StatisticKind statistic_kind() const { return parse_statistic(statistic); }

    std::vector<Construction> construction_list() const {
        std::vector<Construction> out;
        for (const auto& s : constructions) out.push_back(parse_construction(s));
        return out;
    }

    void validate() const {
        static const std::vector<std::string> commands{"check",        "mean-test",      "null-study",
                                                       "power-study",  "conflict-suite", "binbeta"};
        if (std::find(commands.begin(), commands.end(), command) == commands.end())
            throw config_error("unknown command '" + command + "'");
        if (replicates < 1) throw config_error("replicates must be at least 1");
        if (draws < 1) throw config_error("draws must be at least 1");
        if (thinning < 1) throw config_error("thinning must be at least 1");
        if (eb_draws < 1) throw config_error("eb_draws must be at least 1");
        if (sampler != "printed" && sampler != "exact") throw config_error("sampler must be printed or exact");
        if (prior != "ohagan" && prior != "reference") throw config_error("prior must be ohagan or reference");
        if (prior_w != "plain" && prior_w != "scaled") throw config_error("prior_w must be plain or scaled");
        if (!(sigma2 > 0.0)) throw config_error("sigma2 must be positive");
        if (group_size < 1) throw config_error("group_size must be at least 1");
        if (bins < 1) throw config_error("bins must be at least 1");
        if (grid_points < 2) throw config_error("grid_points must be at least 2");
        if (workers < 1) throw config_error("workers must be at least 1");
        for (double a : alphas)
            if (!(a > 0.0 && a < 1.0)) throw config_error("alphas must lie in (0, 1)");
        for (auto I : groups)
            if (I < 3) throw config_error("study group counts must be at least 3");
        for (const auto& a : alternatives) Alternative::parse(a);
        statistic_kind();
        construction_list();
        if (discrepancies)
            for (const auto& d : *discrepancies) parse_discrepancy(d);
        if (synthetic_groups < 3 || synthetic_n < 1) throw config_error("synthetic data needs >= 3 groups and n >= 1");
        if (!(synthetic_alpha > 0.0 && synthetic_beta > 0.0)) throw config_error("synthetic beta parameters must be positive");
    }
};

// Per-command defaults applied before the config file and flags.
inline ExperimentConfig defaults_for(const std::string& command) {
    ExperimentConfig c;
    c.command = command;
    if (command == "null-study" || command == "power-study") {
        c.draws = 5000;
        c.burn_in = 1000;
    }
    if (command == "power-study") c.groups = {5, 10};
    if (command == "mean-test") {
        c.dataset = "example3";
        c.statistic = "mean";
    }
    if (command == "conflict-suite") {
        c.dataset = "groups5x6";
        c.replicates = 1000;
    }
    if (command == "binbeta") {
        c.replicates = 100;
        c.draws = 20000;
        c.burn_in = 5000;
        c.eb_draws = 20000;
    }
    return c;
}

namespace detail {

inline std::string unquote(std::string s) {
    s = csv::trim(std::move(s));
    if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front())
        return s.substr(1, s.size() - 2);
    return s;
}

inline std::string strip_comment(const std::string& line) {
    char quote = 0;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quote) {
            if (ch == quote) quote = 0;
        } else if (ch == '"' || ch == '\'') {
            quote = ch;
        } else if (ch == '#') {
            return line.substr(0, i);
        }
    }
    return line;
}

inline std::vector<std::string> as_list(const std::string& raw) {
    std::string s = csv::trim(raw);
    if (s.size() >= 2 && s.front() == '[' && s.back() == ']') s = s.substr(1, s.size() - 2);
    std::vector<std::string> out;
    if (csv::trim(s).empty()) return out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto v = unquote(item);
        if (!v.empty()) out.push_back(v);
    }
    return out;
}

inline double as_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw config_error("key '" + key + "': expected a number, got '" + v + "'");
    }
}

inline std::uint64_t as_count(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        if (!v.empty() && v.front() == '-') throw std::invalid_argument(v);
        const auto n = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return n;
    } catch (const std::exception&) {
        throw config_error("key '" + key + "': expected a non-negative integer, got '" + v + "'");
    }
}

inline bool as_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw config_error("key '" + key + "': expected true or false, got '" + v + "'");
}

}  // namespace detail

inline void set_key(ExperimentConfig& c, const std::string& key, const std::string& raw) {
    using namespace detail;
    const std::string v = unquote(raw);
    if (key == "command") c.command = v;
    else if (key == "dataset") c.dataset = v;
    else if (key == "counts") c.counts = v;
    else if (key == "statistic") c.statistic = v;
    else if (key == "constructions") c.constructions = as_list(raw);
    else if (key == "mu0") c.mu0 = as_double(key, v);
    else if (key == "draws") c.draws = as_count(key, v);
    else if (key == "burn_in") c.burn_in = as_count(key, v);
    else if (key == "thinning") c.thinning = as_count(key, v);
    else if (key == "eb_draws") c.eb_draws = as_count(key, v);
    else if (key == "sampler") c.sampler = v;
    else if (key == "seed") c.seed = as_count(key, v);
    else if (key == "stream") c.stream = as_count(key, v);
    else if (key == "replicates") c.replicates = as_count(key, v);
    else if (key == "groups") {
        c.groups.clear();
        for (const auto& s : as_list(raw)) c.groups.push_back(as_count(key, s));
    } else if (key == "group_size") c.group_size = as_count(key, v);
    else if (key == "sigma2") c.sigma2 = as_double(key, v);
    else if (key == "alternatives" || key == "alternative") c.alternatives = as_list(raw);
    else if (key == "alphas") {
        c.alphas.clear();
        for (const auto& s : as_list(raw)) c.alphas.push_back(as_double(key, s));
    } else if (key == "bins") c.bins = as_count(key, v);
    else if (key == "prior") c.prior = v;
    else if (key == "prior_w") c.prior_w = v;
    else if (key == "discrepancies") c.discrepancies = as_list(raw);
    else if (key == "sim_draws") c.sim_draws = as_count(key, v);
    else if (key == "sim_burn_in") c.sim_burn_in = as_count(key, v);
    else if (key == "synthetic") c.synthetic = as_bool(key, v);
    else if (key == "synthetic_groups") c.synthetic_groups = as_count(key, v);
    else if (key == "synthetic_n") c.synthetic_n = static_cast<long>(as_count(key, v));
    else if (key == "synthetic_alpha") c.synthetic_alpha = as_double(key, v);
    else if (key == "synthetic_beta") c.synthetic_beta = as_double(key, v);
    else if (key == "hyper_sd") c.hyper_sd = as_double(key, v);
    else if (key == "grid_points") c.grid_points = as_count(key, v);
    else if (key == "out") c.out = v;
    else if (key == "format") c.format = parse_format(v);
    else if (key == "workers") c.workers = as_count(key, v);
    else throw config_error("unknown config key '" + key + "'");
}

// Reads `key = value` lines into a map, keeping the last value of a key.
inline std::map<std::string, std::string> read_key_values(std::istream& in) {
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto body = csv::trim(detail::strip_comment(line));
        if (body.empty()) continue;
        if (body.front() == '[') throw config_error("line " + std::to_string(lineno) + ": tables are not supported");
        const auto eq = body.find('=');
        if (eq == std::string::npos) throw config_error("line " + std::to_string(lineno) + ": expected key = value");
        const auto key = csv::trim(body.substr(0, eq));
        if (key.empty()) throw config_error("line " + std::to_string(lineno) + ": empty key");
        kv[key] = csv::trim(body.substr(eq + 1));
    }
    return kv;
}

// Applies a config stream on top of the command defaults. A `command` key in
// the file selects the defaults when no command is given.
inline ExperimentConfig parse_config(std::istream& in, std::optional<std::string> command = std::nullopt) {
    const auto kv = read_key_values(in);
    std::string cmd = command.value_or("check");
    if (!command) {
        if (auto it = kv.find("command"); it != kv.end()) cmd = detail::unquote(it->second);
    }
    ExperimentConfig c = defaults_for(cmd);
    for (const auto& [k, v] : kv) {
        if (k == "command") continue;
        set_key(c, k, v);
    }
    return c;
}

inline ExperimentConfig load_config(const std::string& path, std::optional<std::string> command = std::nullopt) {
    std::ifstream f(path);
    if (!f) throw config_error("cannot open config file '" + path + "'");
    return parse_config(f, std::move(command));
}

}  // namespace hiercheck::harness
