#pragma once

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ordcausal/core.hpp"
#include "ordcausal/estimands.hpp"
#include "ordcausal/gss.hpp"
#include "ordcausal/probit.hpp"
#include "ordcausal/randomization.hpp"

namespace ordcausal::io {

using nlohmann::json;

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kOutDirEnv = "ORDCAUSAL_OUT_DIR";

// ---------------------------------------------------------------------------
// StudyFile: comma-delimited text with a header row and an optional
// dictionary block in leading comments:
//   # k: 5
//   # category: 1 <HS
//   unit_id,w,y[,x1..xd]
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) {
        while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.erase(field.begin());
        while (!field.empty() && (field.back() == ' ' || field.back() == '\r' || field.back() == '\t'))
            field.pop_back();
        out.push_back(field);
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline int parse_int(const std::string& s, std::size_t line_no, const char* what) {
    try {
        std::size_t used = 0;
        int v = std::stoi(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw DataError("line " + std::to_string(line_no) + ": cannot parse " + what + " from '" + s + "'");
    }
}

inline double parse_double(const std::string& s, std::size_t line_no, const char* what) {
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw DataError("line " + std::to_string(line_no) + ": cannot parse " + what + " from '" + s + "'");
    }
}

} // namespace detail

inline ObservedStudy load_study(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open study file: " + path.string());

    std::string line;
    std::size_t line_no = 0;
    int declared_k = 0;
    std::map<int, std::string> dict;
    std::vector<std::string> header;

    // leading comments carry the dictionary; the first non-comment line is
    // the header
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.front() == '#') {
            std::istringstream ss(line.substr(1));
            std::string tag;
            ss >> tag;
            if (tag == "k:") {
                ss >> declared_k;
            } else if (tag == "category:") {
                int idx = 0;
                std::string label;
                ss >> idx >> std::ws;
                std::getline(ss, label);
                if (idx >= 1 && !label.empty()) dict[idx] = label;
            }
            continue;
        }
        header = detail::split_csv(line);
        break;
    }
    if (header.size() < 3 || header[0] != "unit_id" || header[1] != "w" || header[2] != "y")
        throw DataError("line " + std::to_string(line_no) + ": header must start with unit_id,w,y");
    const std::size_t d = header.size() - 3;

    std::vector<ObservedStudy::Unit> units;
    std::set<std::string> seen_ids;
    int max_y = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        auto fields = detail::split_csv(line);
        if (fields.size() != header.size())
            throw DataError("line " + std::to_string(line_no) + ": expected " +
                            std::to_string(header.size()) + " fields, got " + std::to_string(fields.size()));
        if (!seen_ids.insert(fields[0]).second)
            throw DataError("line " + std::to_string(line_no) + ": duplicate unit_id '" + fields[0] + "'");
        int w = detail::parse_int(fields[1], line_no, "w");
        if (w != 0 && w != 1) throw DataError("line " + std::to_string(line_no) + ": w must be 0 or 1");
        int y = detail::parse_int(fields[2], line_no, "y");
        if (y < 1) throw DataError("line " + std::to_string(line_no) + ": y out of range (must be >= 1)");
        if (declared_k > 0 && y > declared_k)
            throw DataError("line " + std::to_string(line_no) + ": y exceeds declared k");
        max_y = std::max(max_y, y);
        std::vector<double> x(d);
        for (std::size_t c = 0; c < d; ++c)
            x[c] = detail::parse_double(fields[3 + c], line_no, header[3 + c].c_str());
        units.push_back({Category(y), w, std::move(x)});
    }
    if (units.empty()) throw DataError(path.string() + ": no data rows");

    int k = std::max(declared_k, max_y);
    for (const auto& [idx, label] : dict) k = std::max(k, idx);
    CategoryLabels labels;
    if (!dict.empty()) {
        std::vector<std::string> v(static_cast<std::size_t>(k));
        for (int i = 1; i <= k; ++i) {
            auto it = dict.find(i);
            v[static_cast<std::size_t>(i - 1)] = it != dict.end() ? it->second : std::to_string(i);
        }
        labels = CategoryLabels(std::move(v));
    }
    return ObservedStudy(k, std::move(units), std::move(labels));
}

/// Write a study in StudyFile format with canonical unit ids 1..N.
inline void save_study(const ObservedStudy& study, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write study file: " + path.string());
    out << "# k: " << study.k() << "\n";
    if (!study.labels().empty())
        for (int i = 1; i <= study.k(); ++i) out << "# category: " << i << " " << study.labels().at(i) << "\n";
    out << "unit_id,w,y";
    for (std::size_t c = 0; c < study.covariate_dim(); ++c) out << ",x" << (c + 1);
    out << "\n";
    char buf[64];
    for (std::size_t i = 0; i < study.size(); ++i) {
        const auto& u = study.unit(i);
        out << (i + 1) << "," << u.w << "," << u.y_obs.value();
        for (double x : u.x) {
            std::snprintf(buf, sizeof buf, "%.17g", x);
            out << "," << buf;
        }
        out << "\n";
    }
}

// ---------------------------------------------------------------------------
// Config plumbing
// ---------------------------------------------------------------------------

inline json load_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config parse error in " + path.string() + ": " + e.what());
    }
    // a results document is re-runnable: unwrap its embedded config
    if (j.is_object() && j.contains("config") && j.contains("results")) return j["config"];
    return j;
}

namespace detail {

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("config field '" + key + "': " + e.what());
    }
}

inline void require_keys_known(const json& j, const std::set<std::string>& known,
                               const std::string& where) {
    for (const auto& [key, value] : j.items())
        if (!known.count(key)) throw ConfigError("unknown config field '" + key + "' in " + where);
}

inline ObservedStudy resolve_study(const json& config) {
    std::string study = get_or<std::string>(config, "study", "gss");
    if (study == "gss") return gss_dataset();
    return load_study(study);
}

inline std::filesystem::path resolve_out_dir(const json& config) {
    if (config.contains("out")) return config.at("out").get<std::string>();
    if (const char* env = std::getenv(kOutDirEnv); env && *env) return env;
    return ".";
}

inline SeedSpec resolve_seed(const json& config) {
    return SeedSpec{get_or<std::uint64_t>(config, "seed", 20260810ULL), 0};
}

struct CsvWriter {
    std::ofstream out;
    explicit CsvWriter(const std::filesystem::path& path, const std::string& header) : out(path) {
        if (!out) throw DataError("cannot write " + path.string());
        out << header << "\n";
    }
    template <typename... Ts>
    void row(const Ts&... fields) {
        bool first = true;
        ((out << (first ? "" : ",") << fields, first = false), ...);
        out << "\n";
    }
};

inline void write_histogram_csv(const std::filesystem::path& path, const std::vector<double>& draws,
                                int bins = 40) {
    auto [mn_it, mx_it] = std::minmax_element(draws.begin(), draws.end());
    double mn = draws.empty() ? 0.0 : *mn_it, mx = draws.empty() ? 1.0 : *mx_it;
    if (mx <= mn) mx = mn + 1e-9;
    std::vector<int> counts(static_cast<std::size_t>(bins), 0);
    for (double d : draws) {
        int b = static_cast<int>((d - mn) / (mx - mn) * bins);
        counts[static_cast<std::size_t>(std::clamp(b, 0, bins - 1))]++;
    }
    CsvWriter csv(path, "bin_lo,bin_hi,count");
    for (int b = 0; b < bins; ++b)
        csv.row(mn + (mx - mn) * b / bins, mn + (mx - mn) * (b + 1) / bins,
                counts[static_cast<std::size_t>(b)]);
}

inline void write_marginals_csv(const std::filesystem::path& path, const ObservedStudy& study) {
    auto [p0, p1] = empirical_marginals(study);
    CsvWriter csv(path, "category,label,control_prob,treated_prob");
    for (int i = 1; i <= study.k(); ++i)
        csv.row(i, study.labels().empty() ? std::to_string(i) : study.labels().at(i), p0.p(i), p1.p(i));
}

inline void write_results(const std::filesystem::path& dir, const json& config, const json& results) {
    json doc;
    doc["tool"] = "ordcausal";
    doc["version"] = kVersion;
    doc["config"] = config;
    doc["results"] = results;
    std::ofstream out(dir / "results.json");
    if (!out) throw DataError("cannot write results.json in " + dir.string());
    out << doc.dump(2) << "\n";
}

} // namespace detail

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

inline json run_test_sharp(const json& config, const std::filesystem::path& out_dir) {
    detail::require_keys_known(config, {"study", "statistic", "n_perm", "seed", "out", "fast"},
                               "test-sharp");
    ObservedStudy study = detail::resolve_study(config);
    const std::string stat_name = detail::get_or<std::string>(config, "statistic", "l1");
    Metric metric;
    if (stat_name == "l1")
        metric = Metric::L1;
    else if (stat_name == "tv")
        metric = Metric::TotalVariation;
    else
        throw ConfigError("test-sharp: statistic must be 'l1' or 'tv'");
    const auto n_perm = detail::get_or<std::size_t>(config, "n_perm",
                                                    detail::get_or<bool>(config, "fast", false) ? 1000 : 10000);
    TestResult r = sharp_null_test(study, metric, n_perm, detail::resolve_seed(config));

    auto [mn, mx] = std::minmax_element(r.null_draws.begin(), r.null_draws.end());
    std::size_t n_ge = 0;
    for (double d : r.null_draws) n_ge += d >= r.observed;
    json results{{"statistic", stat_name},
                 {"observed", r.observed},
                 {"p_value", r.p_value},
                 {"null_draws_ge_observed", n_ge},
                 {"n_perm", r.n_permutations},
                 {"null_min", *mn},
                 {"null_max", *mx}};
    detail::write_histogram_csv(out_dir / "null_hist.csv", r.null_draws);
    detail::write_marginals_csv(out_dir / "marginals.csv", study);
    return results;
}

inline json run_test_composite(const json& config, const std::filesystem::path& out_dir) {
    detail::require_keys_known(
        config, {"study", "j", "eta", "nu", "n_tables", "n_perm_per_table", "seed", "out", "fast"},
        "test-composite");
    ObservedStudy study = detail::resolve_study(config);
    if (!config.contains("j") || !config.contains("eta") || !config.contains("nu"))
        throw ConfigError("test-composite: required fields j, eta, nu");
    const int j = config.at("j").get<int>();
    const double eta = config.at("eta").get<double>();
    auto nu_vec = config.at("nu").get<std::vector<double>>();
    if (static_cast<int>(nu_vec.size()) != study.k())
        throw ConfigError("test-composite: nu must have k entries");
    const bool fast = detail::get_or<bool>(config, "fast", false);
    Budgets budgets = fast ? Budgets::fast() : Budgets::paper_scale();
    budgets.n_tables = detail::get_or<std::size_t>(config, "n_tables", budgets.n_tables);
    budgets.n_perm_per_table =
        detail::get_or<std::size_t>(config, "n_perm_per_table", budgets.n_perm_per_table);

    NullSpec null(Category(j), eta, OrdinalDistribution(study.k(), nu_vec));
    TestResult r = composite_null_test(study, null, budgets.n_tables, budgets.n_perm_per_table,
                                       detail::resolve_seed(config));
    json results{{"statistic", "qhat_" + std::to_string(j)},
                 {"observed", r.observed},
                 {"p_two_sided", r.p_value},
                 {"p_lower", r.p_lower},
                 {"p_upper", r.p_upper},
                 {"n_tables", r.n_tables},
                 {"n_perm_per_table", r.n_permutations}};
    detail::write_histogram_csv(out_dir / "null_hist.csv", r.null_draws);
    return results;
}

inline json run_fiducial(const json& config, const std::filesystem::path& out_dir) {
    detail::require_keys_known(
        config, {"study", "levels", "grid", "nu", "alpha", "budgets", "seed", "out", "fast"},
        "fiducial");
    ObservedStudy study = detail::resolve_study(config);
    const bool fast = detail::get_or<bool>(config, "fast", false);

    json grid_cfg = config.value("grid", json::object());
    const double lo = detail::get_or<double>(grid_cfg, "lo", 0.1);
    const double hi = detail::get_or<double>(grid_cfg, "hi", 0.999);
    const auto size = detail::get_or<std::size_t>(grid_cfg, "size", fast ? 12 : 30);
    auto grid = eta_grid(lo, hi, size);

    json nu_cfg = config.value("nu", json::object());
    NuSamplerSpec nu_spec;
    nu_spec.floor = detail::get_or<double>(nu_cfg, "floor", 0.15);
    nu_spec.cap = detail::get_or<double>(nu_cfg, "cap", 0.60);
    nu_spec.samples_per_eta = detail::get_or<std::size_t>(nu_cfg, "samples", fast ? 4 : 20);

    const double alpha = detail::get_or<double>(config, "alpha", 0.05);
    json budget_cfg = config.value("budgets", json::object());
    Budgets budgets = fast ? Budgets::fast() : Budgets::paper_scale();
    budgets.n_tables = detail::get_or<std::size_t>(budget_cfg, "n_tables", budgets.n_tables);
    budgets.n_perm_per_table =
        detail::get_or<std::size_t>(budget_cfg, "n_perm_per_table", budgets.n_perm_per_table);

    std::vector<int> levels;
    if (!config.contains("levels") || config.at("levels") == "all")
        for (int j = 1; j < study.k(); ++j) levels.push_back(j);
    else
        levels = config.at("levels").get<std::vector<int>>();

    SeedSpec seed = detail::resolve_seed(config);
    json results = json::array();
    detail::CsvWriter curve(out_dir / "pcurve.csv",
                            "level,eta,p_two_sided_avg,p_lower_min,p_lower_max,p_lower_avg");
    detail::CsvWriter by_nu(out_dir / "pvalues_by_nu.csv", "level,eta,nu_index,p_lower,p_two_sided");
    bool bracket_failure = false;
    for (std::size_t li = 0; li < levels.size(); ++li) {
        FiducialResult f = fiducial_interval(study, Category(levels[li]), grid, nu_spec, alpha,
                                             budgets, seed.child(li));
        for (const auto& g : f.grid) {
            curve.row(levels[li], g.eta, g.p_two_sided_avg, g.p_lower_min, g.p_lower_max, g.p_lower_avg);
            for (std::size_t vi = 0; vi < g.p_lower.size(); ++vi)
                by_nu.row(levels[li], g.eta, vi, g.p_lower[vi], g.p_two_sided[vi]);
        }
        if (!f.lower_bracketed || !f.upper_bracketed) bracket_failure = true;
        results.push_back({{"level", levels[li]},
                           {"observed_q", f.observed_q},
                           {"lower", f.lower},
                           {"upper", f.upper},
                           {"alpha", f.alpha},
                           {"lower_bracketed", f.lower_bracketed},
                           {"upper_bracketed", f.upper_bracketed}});
    }
    json out{{"intervals", results}};
    if (bracket_failure) out["warning"] = "grid too coarse to bracket some interval endpoints";
    return out;
}

inline json run_fit(const json& config, const std::filesystem::path& out_dir, LikelihoodMode mode) {
    detail::require_keys_known(config,
                               {"study", "cutoffs", "rho", "chain", "estimands", "intercept",
                                "cutoff_prior_sd", "seed", "out", "fast"},
                               "fit");
    ObservedStudy study = detail::resolve_study(config);
    const bool fast = detail::get_or<bool>(config, "fast", false);

    FitConfig fc;
    fc.sampler.mode = mode;
    const std::string sharing = detail::get_or<std::string>(config, "cutoffs", "shared");
    if (sharing == "shared")
        fc.sampler.sharing = CutoffSharing::Shared;
    else if (sharing == "per-arm")
        fc.sampler.sharing = CutoffSharing::PerArm;
    else
        throw ConfigError("fit: cutoffs must be 'shared' or 'per-arm'");
    fc.sampler.include_intercept = detail::get_or<bool>(config, "intercept", false);
    fc.sampler.cutoff_prior_sd = detail::get_or<double>(config, "cutoff_prior_sd", 100.0);

    json chain_cfg = config.value("chain", json::object());
    fc.chain = fast ? ChainSpec::ci_scale() : ChainSpec::paper_scale();
    fc.chain.iterations = detail::get_or<std::size_t>(chain_cfg, "iterations", fc.chain.iterations);
    fc.chain.burn_in = detail::get_or<std::size_t>(chain_cfg, "burn_in", fc.chain.burn_in);
    fc.chain.thin = detail::get_or<std::size_t>(chain_cfg, "thin", fc.chain.thin);

    fc.estimands = detail::get_or<std::vector<std::string>>(config, "estimands",
                                                            {"conditional_median", "l1_distance"});

    std::vector<double> rhos = detail::get_or<std::vector<double>>(config, "rho", {});
    if (rhos.empty()) {
        auto [p0, p1] = empirical_marginals(study);
        rhos.push_back(frechet_rho(p0, p1)); // the paper's heuristic default
    }

    SeedSpec seed = detail::resolve_seed(config);
    std::vector<FitResult> fits(rhos.size());
    std::vector<FitConfig> fcs(rhos.size(), fc);
    for (std::size_t r = 0; r < rhos.size(); ++r) fcs[r].sampler.rho = rhos[r];
    parallel_for(rhos.size(), [&](std::size_t r) { fits[r] = fit(study, fcs[r], seed.child(r)); });

    detail::CsvWriter table(out_dir / "summary_table.csv",
                            "rho,estimand,j,point,interval_lo,interval_hi,defined_fraction,label");
    detail::CsvWriter traces(out_dir / "traces.csv", "rho,draw,beta_w");
    json results = json::array();
    for (std::size_t r = 0; r < rhos.size(); ++r) {
        const FitResult& f = fits[r];
        json per_rho{{"rho", rhos[r]}, {"retained", f.retained}};
        for (const auto& [name, post] : f.conditional) {
            json per_j = json::array();
            for (int j = 1; j <= study.k(); ++j) {
                if (post.defined_fraction(j) == 0.0) {
                    per_j.push_back({{"j", j}, {"defined_fraction", 0.0}});
                    continue;
                }
                auto [lo95, hi95] = post.interval(j);
                per_j.push_back({{"j", j},
                                 {"point", post.point(j).value()},
                                 {"interval", {lo95.value(), hi95.value()}},
                                 {"defined_fraction", post.defined_fraction(j)}});
                table.row(rhos[r], name, j, post.point(j).value(), lo95.value(), hi95.value(),
                          post.defined_fraction(j),
                          study.labels().empty() ? std::to_string(post.point(j).value())
                                                 : study.labels().at(post.point(j).value()));
            }
            per_rho[name] = per_j;
        }
        for (const auto& [name, post] : f.scalars) {
            auto [lo95, hi95] = post.interval();
            per_rho[name] = {{"median", post.median()}, {"interval", {lo95, hi95}}};
            table.row(rhos[r], name, 0, post.median(), lo95, hi95, 1.0, "");
        }
        for (std::size_t d = 0; d < f.beta_w_draws.size(); ++d)
            traces.row(rhos[r], d, f.beta_w_draws[d]);
        results.push_back(per_rho);
    }
    return json{{"mode", mode == LikelihoodMode::Rank ? "rank" : "probit"}, {"fits", results}};
}

inline json run_simulate(const json& config, const std::filesystem::path& out_dir) {
    detail::require_keys_known(config,
                               {"joint", "n", "analyze", "seed", "out", "fast", "alpha"},
                               "simulate");
    json joint_cfg = config.value("joint", json::object());
    const std::string type = detail::get_or<std::string>(joint_cfg, "type", "staircase");
    std::optional<JointDistribution> joint;
    if (type == "staircase") {
        auto c = detail::get_or<std::vector<double>>(joint_cfg, "c", {1.0 / 3, 1.0 / 3, 1.0 / 3});
        auto q = detail::get_or<std::vector<double>>(joint_cfg, "q", {0.7, 2.0 / 3});
        if (c.size() != 3 || q.size() != 2)
            throw ConfigError("simulate: staircase needs c (3 entries) and q (2 entries)");
        joint = StaircaseJoint(c[0], c[1], c[2], q[0], q[1]).expand();
    } else if (type == "matrix") {
        auto cells = detail::get_or<std::vector<double>>(joint_cfg, "cells", {});
        auto k = detail::get_or<int>(joint_cfg, "k", 0);
        joint = JointDistribution(k, cells);
    } else {
        throw ConfigError("simulate: joint.type must be 'staircase' or 'matrix'");
    }

    const auto n = detail::get_or<std::size_t>(config, "n", 500);
    SeedSpec seed = detail::resolve_seed(config);
    ScienceTable table = simulate_science(*joint, n, seed.child(0));
    std::vector<int> assignment = balanced_assignment(n, seed.child(1));
    ObservedStudy study = reveal(table, assignment);
    save_study(study, out_dir / "study.csv");

    json results;
    auto [t0, t1] = table_marginals(table);
    auto [o0, o1] = empirical_marginals(study);
    json qhats = json::array();
    for (int j = 1; j < table.k(); ++j) {
        qhats.push_back({{"j", j},
                         {"qhat_table", estimate_q(t0, t1, Category(j))},
                         {"qhat_observed", estimate_q(o0, o1, Category(j))}});
    }
    results["qhat"] = qhats;
    results["n"] = n;

    json analyze = config.value("analyze", json::object());
    if (detail::get_or<bool>(analyze, "fiducial", false)) {
        json fid_config{{"alpha", detail::get_or<double>(config, "alpha", 0.05)}};
        if (config.contains("fast")) fid_config["fast"] = config.at("fast");
        if (analyze.contains("grid")) fid_config["grid"] = analyze.at("grid");
        if (analyze.contains("nu")) fid_config["nu"] = analyze.at("nu");
        if (analyze.contains("budgets")) fid_config["budgets"] = analyze.at("budgets");
        fid_config["seed"] = detail::get_or<std::uint64_t>(config, "seed", 20260810ULL);
        // the fiducial step reads the study we just wrote
        fid_config["study"] = (out_dir / "study.csv").string();
        results["fiducial"] = run_fiducial(fid_config, out_dir);
    }
    return results;
}

inline json run_gss_demo(const json& config, const std::filesystem::path& out_dir) {
    detail::require_keys_known(config, {"rho", "n_perm", "chain", "seed", "out", "fast"}, "gss-demo");
    ObservedStudy study = gss_dataset();
    const bool fast = detail::get_or<bool>(config, "fast", false);
    SeedSpec seed = detail::resolve_seed(config);

    detail::write_marginals_csv(out_dir / "marginals.csv", study);
    auto [p0, p1] = empirical_marginals(study);

    json results;
    results["l1_observed"] = l1_distance(p0, p1);
    results["frechet_rho"] = frechet_rho(p0, p1);

    const auto n_perm = detail::get_or<std::size_t>(config, "n_perm", fast ? 1000 : 10000);
    TestResult sharp = sharp_null_test(study, Metric::L1, n_perm, seed.child(1));
    auto [mn, mx] = std::minmax_element(sharp.null_draws.begin(), sharp.null_draws.end());
    std::size_t n_ge = 0;
    for (double d : sharp.null_draws) n_ge += d >= sharp.observed;
    results["sharp_test"] = {{"observed", sharp.observed},
                             {"p_value", sharp.p_value},
                             {"null_draws_ge_observed", n_ge},
                             {"null_min", *mn},
                             {"null_max", *mx},
                             {"n_perm", n_perm}};
    detail::write_histogram_csv(out_dir / "null_hist.csv", sharp.null_draws);

    json fit_config;
    fit_config["rho"] = detail::get_or<std::vector<double>>(config, "rho", {0.25, 0.50, 0.783, 1.0});
    if (config.contains("chain")) fit_config["chain"] = config.at("chain");
    if (fast) fit_config["fast"] = true;
    fit_config["seed"] = detail::get_or<std::uint64_t>(config, "seed", 20260810ULL);
    fit_config["estimands"] = std::vector<std::string>{"conditional_median", "l1_distance"};
    results["rank_fit"] = run_fit(fit_config, out_dir, LikelihoodMode::Rank);
    return results;
}

/// Dispatch a subcommand, write results.json plus plot-data sidecars into
/// the resolved output directory, and return the process exit status
/// (0 ok, 2 config error, 3 data error, 4 numeric/bracketing failure).
inline int run_subcommand(const std::string& name, json config, std::string* error_out = nullptr) {
    try {
        std::filesystem::path out_dir = detail::resolve_out_dir(config);
        std::filesystem::create_directories(out_dir);
        config["out"] = out_dir.string();
        if (!config.contains("seed")) config["seed"] = 20260810ULL;

        json results;
        if (name == "test-sharp")
            results = run_test_sharp(config, out_dir);
        else if (name == "test-composite")
            results = run_test_composite(config, out_dir);
        else if (name == "fiducial")
            results = run_fiducial(config, out_dir);
        else if (name == "fit-probit")
            results = run_fit(config, out_dir, LikelihoodMode::Probit);
        else if (name == "fit-rank")
            results = run_fit(config, out_dir, LikelihoodMode::Rank);
        else if (name == "simulate")
            results = run_simulate(config, out_dir);
        else if (name == "gss-demo")
            results = run_gss_demo(config, out_dir);
        else
            throw ConfigError("unknown subcommand '" + name + "'");

        detail::write_results(out_dir, config, results);
        return 0;
    } catch (const ConfigError& e) {
        if (error_out) *error_out = e.what();
        return 2;
    } catch (const DataError& e) {
        if (error_out) *error_out = e.what();
        return 3;
    } catch (const NumericError& e) {
        if (error_out) *error_out = e.what();
        return 4;
    } catch (const json::exception& e) {
        if (error_out) *error_out = e.what();
        return 2;
    }
}

} // namespace ordcausal::io
