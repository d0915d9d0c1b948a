#pragma once

// Config-driven experiments. Each returns a Report of named tables; emission
// is left to the caller.

#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "hiercheck/conflict.hpp"
#include "hiercheck/datasets.hpp"
#include "hiercheck/harness/checks.hpp"
#include "hiercheck/harness/config.hpp"
#include "hiercheck/harness/report.hpp"
#include "hiercheck/parallel.hpp"

namespace hiercheck::harness {

namespace detail {

inline nlohmann::ordered_json chain_meta(const ExperimentConfig& c) {
    return {{"seed", c.seed},       {"stream", c.stream},   {"draws", c.draws},
            {"burn_in", c.burn_in}, {"thinning", c.thinning}, {"sampler", c.sampler}};
}

inline CheckOptions check_options(const ExperimentConfig& c) {
    CheckOptions o;
    o.kind = c.statistic_kind();
    o.constructions = c.construction_list();
    o.mu0 = c.mu0;
    o.chain = c.chain();
    o.eb_draws = c.eb_draws;
    return o;
}

inline Cell opt_cell(const std::optional<double>& v) { return v ? Cell(*v) : Cell(std::nan("")); }

inline Table check_tables(const std::string& dataset, const std::vector<ConstructionResult>& rs, Table* wide) {
    Table t{"check", {"dataset", "statistic_obs", "construction", "p", "p_se", "rps", "draws"}, {}};
    std::vector<Cell> row{dataset};
    for (const auto& r : rs) {
        t.add({dataset, r.report.t_obs, to_string(r.report.construction), r.report.p, r.report.p_se,
               opt_cell(r.report.rps), count_cell(r.report.draws)});
        row.push_back(r.report.p);
        row.push_back(opt_cell(r.report.rps));
    }
    if (wide) {
        wide->columns = {"dataset"};
        for (const auto& r : rs) {
            wide->columns.push_back(to_string(r.report.construction) + "_p");
            wide->columns.push_back(to_string(r.report.construction) + "_rps");
        }
        wide->add(row);
    }
    return t;
}

inline Table sampler_table(const std::vector<ConstructionResult>& rs) {
    Table t{"sampler", {"construction", "min_theta_acceptance", "sigma2_acceptance"}, {}};
    for (const auto& r : rs) {
        if (r.report.construction != Construction::PartialPosterior) continue;
        t.add({to_string(r.report.construction), r.min_theta_acceptance, r.sigma2_acceptance});
    }
    return t;
}

}  // namespace detail

inline Report run_check(const ExperimentConfig& c) {
    c.validate();
    const auto data = datasets::load(c.dataset);
    const auto rs = run_surprise_check(data, detail::check_options(c));
    Report rep{"check", {}, {}};
    rep.meta["dataset"] = c.dataset;
    rep.meta["groups"] = data.size();
    rep.meta["statistic"] = to_string(c.statistic_kind());
    if (c.statistic_kind() == StatisticKind::GrandMean) rep.meta["mu0"] = c.mu0;
    rep.meta["chain"] = detail::chain_meta(c);
    rep.meta["eb_draws"] = c.eb_draws;
    Table wide{"check_row", {}, {}};
    rep.tables.push_back(detail::check_tables(c.dataset, rs, &wide));
    rep.tables.push_back(std::move(wide));
    rep.tables.push_back(detail::sampler_table(rs));
    return rep;
}

// Grand-mean test of mu = mu0 plus every construction's predictive density on
// a common grid.
inline Report run_mean_test(const ExperimentConfig& cfg) {
    ExperimentConfig c = cfg;
    c.statistic = "grand-mean";
    c.validate();
    const auto data = datasets::load(c.dataset);
    const auto rs = run_surprise_check(data, detail::check_options(c));
    Report rep{"mean-test", {}, {}};
    rep.meta["dataset"] = c.dataset;
    rep.meta["mu0"] = c.mu0;
    rep.meta["chain"] = detail::chain_meta(c);
    Table wide{"mean_test_row", {}, {}};
    auto long_t = detail::check_tables(c.dataset, rs, &wide);
    long_t.name = "mean_test";
    rep.tables.push_back(std::move(long_t));
    rep.tables.push_back(std::move(wide));

    double lo = rs.front().range.lo, hi = rs.front().range.hi;
    for (const auto& r : rs) {
        lo = std::min(lo, r.range.lo);
        hi = std::max(hi, r.range.hi);
    }
    Table grid{"predictive_grid", {"t"}, {}};
    for (const auto& r : rs) grid.columns.push_back(to_string(r.report.construction));
    for (std::size_t g = 0; g < c.grid_points; ++g) {
        const double t = lo + (hi - lo) * static_cast<double>(g) / static_cast<double>(c.grid_points - 1);
        std::vector<Cell> row{t};
        for (const auto& r : rs) row.push_back(r.density(t));
        grid.add(std::move(row));
    }
    rep.tables.push_back(std::move(grid));
    return rep;
}

namespace detail {

// Study constructions: everything requested except per-group diagnostics.
inline std::vector<Construction> study_constructions(const ExperimentConfig& c) {
    std::vector<Construction> out;
    for (auto k : c.construction_list()) {
        if (k == Construction::CrossValidation || k == Construction::Conflict)
            throw config_error("construction '" + to_string(k) + "' is not available in replicate studies");
        out.push_back(k);
    }
    return out;
}

struct StudyBlock {
    std::string label;  // alternative name, or "null"
    std::size_t I = 0;
    std::vector<std::vector<StudyP>> p;  // [construction][replicate]
};

template <class ThetaFn>
StudyBlock run_block(const ExperimentConfig& c, const std::string& label, std::uint64_t block, std::size_t I,
                     ThetaFn theta) {
    const auto ks = study_constructions(c);
    const auto chain = c.chain();
    StudyBlock b{label, I, std::vector<std::vector<StudyP>>(ks.size(), std::vector<StudyP>(c.replicates))};
    parallel_for(c.replicates, c.workers, [&](std::size_t r) {
        const auto rep = replicate_stream(c.seed, c.stream, block, r);
        auto gen = rep.derive(1);
        const auto x = simulate_means(I, c.group_size, c.sigma2, theta, gen);
        for (std::size_t k = 0; k < ks.size(); ++k) b.p[k][r] = study_pvalue(x, ks[k], chain, rep);
    });
    return b;
}

inline Table study_pvalue_table(const std::string& name, const std::vector<StudyBlock>& blocks,
                                const std::vector<Construction>& ks) {
    Table t{name, {"model", "groups", "replicate", "construction", "p", "p_se", "draws", "aborted"}, {}};
    for (const auto& b : blocks)
        for (std::size_t k = 0; k < ks.size(); ++k)
            for (std::size_t r = 0; r < b.p[k].size(); ++r) {
                const auto& s = b.p[k][r];
                t.add({b.label, count_cell(b.I), count_cell(r), to_string(ks[k]), s.p, s.se, count_cell(s.draws),
                       s.aborted});
            }
    return t;
}

inline std::vector<double> p_only(const std::vector<StudyP>& v) {
    std::vector<double> p;
    for (const auto& s : v) p.push_back(s.p);
    return p;
}

inline std::size_t aborted(const std::vector<StudyP>& v) {
    std::size_t n = 0;
    for (const auto& s : v) n += s.aborted;
    return n;
}

}  // namespace detail

// Null calibration: theta_i ~ N(0, 1), xbar_i ~ N(theta_i, sigma2 / n).
inline Report run_null_study(const ExperimentConfig& c) {
    c.validate();
    const auto ks = detail::study_constructions(c);
    std::vector<detail::StudyBlock> blocks;
    for (auto I : c.groups)
        blocks.push_back(detail::run_block(c, "null", I, I, [](SeededStream& g) { return g.normal(); }));

    Report rep{"null-study", {}, {}};
    rep.meta["replicates"] = c.replicates;
    rep.meta["group_size"] = c.group_size;
    rep.meta["sigma2"] = c.sigma2;
    rep.meta["chain"] = detail::chain_meta(c);
    rep.tables.push_back(detail::study_pvalue_table("null_pvalues", blocks, ks));

    Table summary{"null_summary",
                  {"groups", "construction", "replicates", "ks", "mean_p", "mid_fraction", "aborted"},
                  {}};
    Table hist{"null_histogram", {"groups", "construction", "bin_lo", "bin_hi", "count", "density"}, {}};
    for (const auto& b : blocks) {
        for (std::size_t k = 0; k < ks.size(); ++k) {
            const auto p = detail::p_only(b.p[k]);
            double mean = 0.0;
            std::size_t mid = 0;
            for (double x : p) {
                mean += x;
                mid += x >= 0.25 && x <= 0.75;
            }
            const double R = static_cast<double>(p.size());
            summary.add({count_cell(b.I), to_string(ks[k]), count_cell(p.size()), ks_uniform(p), mean / R,
                         static_cast<double>(mid) / R, count_cell(detail::aborted(b.p[k]))});
            const auto h = histogram01(p, c.bins);
            for (std::size_t j = 0; j < c.bins; ++j) {
                const double w = 1.0 / static_cast<double>(c.bins);
                hist.add({count_cell(b.I), to_string(ks[k]), w * static_cast<double>(j),
                          w * static_cast<double>(j + 1), count_cell(h[j]), static_cast<double>(h[j]) / (R * w)});
            }
        }
    }
    rep.tables.push_back(std::move(summary));
    rep.tables.push_back(std::move(hist));
    return rep;
}

// Power under non-normal second-level distributions: Pr(p <= alpha).
inline Report run_power_study(const ExperimentConfig& c) {
    c.validate();
    const auto ks = detail::study_constructions(c);
    std::vector<detail::StudyBlock> blocks;
    for (const auto& name : c.alternatives) {
        const auto alt = Alternative::parse(name);
        const auto key = (static_cast<std::uint64_t>(alt.kind) + 1) << 16;
        for (auto I : c.groups)
            blocks.push_back(detail::run_block(c, alt.name(), key | I, I,
                                               [alt](SeededStream& g) { return sample_alternative(alt, g); }));
    }
    Report rep{"power-study", {}, {}};
    rep.meta["replicates"] = c.replicates;
    rep.meta["group_size"] = c.group_size;
    rep.meta["sigma2"] = c.sigma2;
    rep.meta["chain"] = detail::chain_meta(c);
    rep.tables.push_back(detail::study_pvalue_table("power_pvalues", blocks, ks));
    Table power{"power", {"alternative", "groups", "construction", "alpha", "rejection_rate", "se", "replicates"}, {}};
    for (const auto& b : blocks)
        for (std::size_t k = 0; k < ks.size(); ++k) {
            const auto p = detail::p_only(b.p[k]);
            for (double a : c.alphas) {
                std::size_t n = 0;
                for (double x : p) n += x <= a;
                const double rate = static_cast<double>(n) / static_cast<double>(p.size());
                power.add({b.label, count_cell(b.I), to_string(ks[k]), a, rate, binomial_se(rate, p.size()),
                           count_cell(p.size())});
            }
        }
    rep.tables.push_back(std::move(power));
    return rep;
}

// Simulation-based check (proper prior only) and per-group conflict measures.
inline Report run_conflict_suite(const ExperimentConfig& c) {
    c.validate();
    const auto data = datasets::load(c.dataset);
    const auto prior = c.normal_prior();
    std::vector<std::string> ds;
    if (c.discrepancies) ds = *c.discrepancies;
    else if (prior.proper()) ds = {"T1", "T2"};
    if (!ds.empty() && !prior.proper())
        throw config_error("the simulation-based check needs a proper prior (prior = ohagan)");

    Report rep{"conflict-suite", {}, {}};
    rep.meta["dataset"] = c.dataset;
    rep.meta["prior"] = c.prior;
    rep.meta["prior_w"] = c.prior_w;
    rep.meta["chain"] = detail::chain_meta(c);

    if (!ds.empty()) {
        rep.meta["sim_replicates"] = c.replicates;
        rep.meta["sim_draws"] = c.sim_draws;
        rep.meta["sim_burn_in"] = c.sim_burn_in;
        Table sim{"sim_check", {"discrepancy", "distance_obs", "distance_q95", "reject", "replicates", "draws"}, {}};
        Table dist{"sim_distances", {"discrepancy", "replicate", "distance"}, {}};
        for (std::size_t j = 0; j < ds.size(); ++j) {
            const auto d = parse_discrepancy(ds[j]);
            ChainConfig sc = c.sim_chain();
            // Each discrepancy gets its own block of replicate streams.
            sc.stream = c.stream + 1'000'000 * (static_cast<std::uint64_t>(d) + 1);
            const auto r = sim_based_check(data, prior, d, c.replicates, sc, c.workers);
            sim.add({to_string(d), r.distance_obs, r.distance_q95, r.reject, count_cell(c.replicates),
                     count_cell(sc.retained())});
            for (std::size_t k = 0; k < r.distances.size(); ++k)
                dist.add({to_string(d), count_cell(k), r.distances[k]});
        }
        rep.tables.push_back(std::move(sim));
        rep.tables.push_back(std::move(dist));
    }

    const auto cfg = c.chain();
    const auto recs = conflict_suite(data, prior, cfg, c.workers);
    Table t{"conflict",
            {"group", "label", "mean", "c_median", "level", "p_con", "p_con_se", "p_mixed", "p_mixed_se", "draws"},
            {}};
    for (const auto& r : recs)
        t.add({count_cell(r.group + 1), r.label, data.group(r.group).mean, r.c_median,
               to_string(classify_conflict(r.c_median)), r.p_con, r.p_con_se, r.p_mixed, r.p_mixed_se,
               count_cell(cfg.retained())});
    rep.tables.push_back(std::move(t));
    return rep;
}

namespace detail {

inline BinBetaOptions binbeta_options(const ExperimentConfig& c) {
    BinBetaOptions o;
    o.chain = c.chain();
    o.eb_draws = c.eb_draws;
    o.hyper_sd = c.hyper_sd;
    return o;
}

inline std::string counts_path(const ExperimentConfig& c) {
    if (!c.counts.empty()) return c.counts;
    if (const char* env = std::getenv("HIERCHECK_BRISTOL_CSV")) return env;
    return {};
}

}  // namespace detail

// Binomial-beta suite on a count file, or (synthetic = true) its in-model
// calibration: the fraction of simulated datasets whose four max-rate
// p-values all exceed 0.05.
inline Report run_binbeta(const ExperimentConfig& c) {
    c.validate();
    auto o = detail::binbeta_options(c);
    Report rep{"binbeta", {}, {}};
    rep.meta["chain"] = detail::chain_meta(c);
    rep.meta["eb_draws"] = c.eb_draws;

    if (c.synthetic) {
        o.rps = false;
        o.kinds = {StatisticKind::MaxRate};
        rep.meta["synthetic"] = {{"groups", c.synthetic_groups}, {"n", c.synthetic_n},
                                 {"alpha", c.synthetic_alpha},   {"beta", c.synthetic_beta},
                                 {"replicates", c.replicates}};
        std::vector<std::vector<SurpriseReport>> res(c.replicates);
        parallel_for(c.replicates, c.workers, [&](std::size_t r) {
            const auto rep_rng = replicate_stream(c.seed, c.stream, 0xbb, r);
            auto gen = rep_rng.derive(1);
            const auto data = simulate_counts(c.synthetic_groups, c.synthetic_n, c.synthetic_alpha, c.synthetic_beta, gen);
            auto ro = o;
            ro.chain.stream = rep_rng.derive(2).stream_id();
            // A trapped partial-posterior chain leaves the replicate without
            // p-values; it is reported and counts as a failure.
            try {
                res[r] = binbeta_check(data, ro).front().reports;
            } catch (const sampler_abort&) {
                res[r].clear();
            }
        });
        Table t{"binbeta_synthetic", {"replicate", "construction", "p", "p_se", "draws"}, {}};
        std::size_t all_pass = 0, aborted = 0;
        for (std::size_t r = 0; r < res.size(); ++r) {
            if (res[r].empty()) {
                ++aborted;
                t.add({count_cell(r), std::string("aborted"), std::nan(""), std::nan(""), count_cell(0)});
                continue;
            }
            bool ok = true;
            for (const auto& s : res[r]) {
                t.add({count_cell(r), to_string(s.construction), s.p, s.p_se, count_cell(s.draws)});
                ok = ok && s.p > 0.05;
            }
            all_pass += ok;
        }
        Table s{"binbeta_synthetic_summary", {"replicates", "all_above_0.05", "fraction", "aborted"}, {}};
        s.add({count_cell(res.size()), count_cell(all_pass),
               static_cast<double>(all_pass) / static_cast<double>(res.size()), count_cell(aborted)});
        rep.tables.push_back(std::move(t));
        rep.tables.push_back(std::move(s));
        return rep;
    }

    const auto path = detail::counts_path(c);
    if (path.empty() || !std::filesystem::exists(path))
        throw data_error("Bristol file required: supply the count CSV (group_id,n,y) via `counts = PATH`" +
                         (path.empty() ? std::string() : " (not found: " + path + ")"));
    const auto data = read_count_csv(path);
    rep.meta["counts"] = path;
    rep.meta["groups"] = data.size();
    const auto fit = betabinom_fit_mle(data);
    rep.meta["alpha_hat"] = fit.hyper.alpha;
    rep.meta["beta_hat"] = fit.hyper.beta;
    rep.meta["mle_on_boundary"] = fit.boundary;

    Table pt{"binbeta_pvalues", {"statistic", "statistic_obs", "construction", "p", "p_se", "rps", "draws"}, {}};
    for (const auto& rc : binbeta_check(data, o))
        for (const auto& s : rc.reports)
            pt.add({to_string(rc.kind), s.t_obs, to_string(s.construction), s.p, s.p_se, detail::opt_cell(s.rps),
                    count_cell(s.draws)});
    rep.tables.push_back(std::move(pt));

    auto co = o;
    co.chain.stream = c.stream + 64;
    const auto conf = binbeta_conflicts(data, co, c.workers);
    Table ct{"binbeta_conflict", {"rank", "group", "n", "y", "rate", "c_median", "level", "p_con", "p_con_se", "draws"},
             {}};
    const auto order = order_by_rate(data);
    for (std::size_t k = 0; k < order.size(); ++k) {
        const auto& r = conf[order[k]];
        ct.add({count_cell(k + 1), r.label, static_cast<std::int64_t>(r.n), static_cast<std::int64_t>(r.y),
                data.group(r.group).rate(), r.c_median, to_string(classify_conflict(r.c_median)), r.p_con, r.p_con_se,
                count_cell(co.chain.retained())});
    }
    rep.tables.push_back(std::move(ct));
    return rep;
}

inline Report run_experiment(const ExperimentConfig& c) {
    if (c.command == "check") return run_check(c);
    if (c.command == "mean-test") return run_mean_test(c);
    if (c.command == "null-study") return run_null_study(c);
    if (c.command == "power-study") return run_power_study(c);
    if (c.command == "conflict-suite") return run_conflict_suite(c);
    if (c.command == "binbeta") return run_binbeta(c);
    throw config_error("unknown command '" + c.command + "'");
}

}  // namespace hiercheck::harness
