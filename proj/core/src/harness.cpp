// SPDX-License-Identifier: Apache-2.0
#include "dmimo/harness.hpp"

#include "dmimo/baselines.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <thread>

namespace dmimo {

using nlohmann::json;

namespace {

constexpr std::pair<Scheme, const char*> kSchemeNames[] = {
    {Scheme::Opt, "opt"},       {Scheme::OptPerUE, "opt_per_ue"}, {Scheme::Approx, "approx"},
    {Scheme::Clust1, "clust1"}, {Scheme::Clust2, "clust2"},       {Scheme::Random, "random"},
};

const char* variant_name(SharingVariant v) {
    return v == SharingVariant::Total ? "total" : "per_ue";
}

SharingVariant variant_from_string(const std::string& s) {
    if (s == "total") {
        return SharingVariant::Total;
    }
    if (s == "per_ue") {
        return SharingVariant::PerUE;
    }
    throw InvalidInput("unknown sharing variant '" + s + "'");
}

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) {
        throw InvalidInput(where + " must be an object");
    }
    for (const auto& [key, _] : obj.items()) {
        if (allowed.count(key) == 0) {
            throw InvalidInput("unknown key '" + key + "' in " + where);
        }
    }
}

template <typename T>
void read_if(const json& obj, const char* key, T& out) {
    if (obj.contains(key)) {
        out = obj.at(key).get<T>();
    }
}

bool is_opt(Scheme s) {
    return s == Scheme::Opt || s == Scheme::OptPerUE;
}

}  // namespace

const char* to_string(Scheme scheme) {
    for (const auto& [s, name] : kSchemeNames) {
        if (s == scheme) {
            return name;
        }
    }
    return "unknown";
}

Scheme scheme_from_string(std::string_view name) {
    for (const auto& [s, n] : kSchemeNames) {
        if (name == n) {
            return s;
        }
    }
    throw InvalidInput("unknown scheme '" + std::string(name) + "'");
}

std::vector<Scheme> all_schemes() {
    std::vector<Scheme> out;
    for (const auto& [s, _] : kSchemeNames) {
        out.push_back(s);
    }
    return out;
}

void ExperimentConfig::validate() const {
    drop.validate();
    bisection.validate();
    misocp.validate();
    if (schemes.empty()) {
        throw InvalidInput("no schemes selected");
    }
    if (b_tot_sweep.empty()) {
        throw InvalidInput("b_tot sweep is empty");
    }
    const int mk = drop.m_aps * drop.k_ues;
    for (int b : b_tot_sweep) {
        if (b < drop.k_ues || b > mk) {
            throw InvalidInput("b_tot " + std::to_string(b) + " outside [K, M*K] = [" + std::to_string(drop.k_ues) +
                               ", " + std::to_string(mk) + "]");
        }
    }
    if (num_drops < 1) {
        throw InvalidInput("num_drops must be at least 1");
    }
    if (!(p_max_watt > 0.0) || !std::isfinite(p_max_watt)) {
        throw InvalidInput("p_max_watt must be positive");
    }
    if (opt_max_mk < 1) {
        throw InvalidInput("opt_max_mk must be positive");
    }
    if (workers < 0) {
        throw InvalidInput("workers must be non-negative");
    }
    if (!(socp.feas_tol > 0.0) || !(socp.gap_tol > 0.0) || socp.max_iters < 1) {
        throw InvalidInput("invalid solver tolerances");
    }
}

ExperimentConfig config_from_json(const std::string& text) {
    ExperimentConfig cfg;
    try {
        const json doc = json::parse(text);
        reject_unknown_keys(doc,
                            {"drop", "schemes", "pairing", "bisection", "misocp", "solver", "p_max_watt", "num_drops",
                             "base_seed", "output_path", "opt_max_mk", "workers", "csv_timing"},
                            "config");

        if (doc.contains("drop")) {
            const json& d = doc.at("drop");
            reject_unknown_keys(d,
                                {"preset", "m_aps", "k_ues", "side_length_m", "pathloss_exponent",
                                 "pathloss_ref_db_at_1m", "shadowing_sigma_db", "bandwidth_hz",
                                 "noise_density_dbm_per_hz", "min_distance_m"},
                                "drop");
            if (d.contains("preset")) {
                const auto preset = d.at("preset").get<std::string>();
                if (preset == "dense") {
                    cfg.drop = DropConfig::dense();
                } else if (preset == "sparse") {
                    cfg.drop = DropConfig::sparse();
                } else {
                    throw InvalidInput("unknown drop preset '" + preset + "'");
                }
            }
            read_if(d, "m_aps", cfg.drop.m_aps);
            read_if(d, "k_ues", cfg.drop.k_ues);
            read_if(d, "side_length_m", cfg.drop.side_length_m);
            read_if(d, "pathloss_exponent", cfg.drop.pathloss_exponent);
            read_if(d, "pathloss_ref_db_at_1m", cfg.drop.pathloss_ref_db_at_1m);
            read_if(d, "shadowing_sigma_db", cfg.drop.shadowing_sigma_db);
            read_if(d, "bandwidth_hz", cfg.drop.bandwidth_hz);
            read_if(d, "noise_density_dbm_per_hz", cfg.drop.noise_density_dbm_per_hz);
            read_if(d, "min_distance_m", cfg.drop.min_distance_m);
        }

        if (doc.contains("schemes")) {
            for (const auto& s : doc.at("schemes")) {
                cfg.schemes.push_back(scheme_from_string(s.get<std::string>()));
            }
        } else {
            cfg.schemes = all_schemes();
        }

        if (doc.contains("pairing")) {
            const json& p = doc.at("pairing");
            reject_unknown_keys(p, {"variant", "b_tot"}, "pairing");
            if (p.contains("variant")) {
                cfg.variant = variant_from_string(p.at("variant").get<std::string>());
            }
            if (p.contains("b_tot")) {
                const json& b = p.at("b_tot");
                if (b.is_array()) {
                    cfg.b_tot_sweep = b.get<std::vector<int>>();
                } else {
                    cfg.b_tot_sweep = {b.get<int>()};
                }
            }
        }
        if (cfg.b_tot_sweep.empty()) {
            cfg.b_tot_sweep = {cfg.drop.k_ues};
        }

        if (doc.contains("bisection")) {
            const json& b = doc.at("bisection");
            reject_unknown_keys(b, {"t_low", "t_high", "epsilon", "max_iters"}, "bisection");
            read_if(b, "t_low", cfg.bisection.t_low);
            read_if(b, "t_high", cfg.bisection.t_high);
            read_if(b, "epsilon", cfg.bisection.epsilon);
            read_if(b, "max_iters", cfg.bisection.max_iters);
        }
        if (doc.contains("misocp")) {
            const json& m = doc.at("misocp");
            reject_unknown_keys(m, {"time_limit_s", "integrality_tol", "node_selection"}, "misocp");
            read_if(m, "time_limit_s", cfg.misocp.time_limit_s);
            read_if(m, "integrality_tol", cfg.misocp.integrality_tol);
            if (m.contains("node_selection")) {
                const auto sel = m.at("node_selection").get<std::string>();
                if (sel == "best_first") {
                    cfg.misocp.node_selection = NodeSelection::BestFirst;
                } else if (sel == "depth_first") {
                    cfg.misocp.node_selection = NodeSelection::DepthFirst;
                } else {
                    throw InvalidInput("unknown node selection '" + sel + "'");
                }
            }
        }
        if (doc.contains("solver")) {
            const json& s = doc.at("solver");
            reject_unknown_keys(s, {"feas_tol", "gap_tol", "max_iters"}, "solver");
            read_if(s, "feas_tol", cfg.socp.feas_tol);
            read_if(s, "gap_tol", cfg.socp.gap_tol);
            read_if(s, "max_iters", cfg.socp.max_iters);
        }
        cfg.misocp.socp = cfg.socp;

        read_if(doc, "p_max_watt", cfg.p_max_watt);
        read_if(doc, "num_drops", cfg.num_drops);
        read_if(doc, "base_seed", cfg.base_seed);
        read_if(doc, "output_path", cfg.output_path);
        read_if(doc, "opt_max_mk", cfg.opt_max_mk);
        read_if(doc, "workers", cfg.workers);
        read_if(doc, "csv_timing", cfg.csv_timing);
    } catch (const json::exception& e) {
        throw InvalidInput(std::string("malformed config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw InvalidInput("cannot open config file " + path);
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return config_from_json(buf.str());
}

std::string config_to_json(const ExperimentConfig& cfg) {
    json doc;
    doc["drop"] = {
        {"m_aps", cfg.drop.m_aps},
        {"k_ues", cfg.drop.k_ues},
        {"side_length_m", cfg.drop.side_length_m},
        {"pathloss_exponent", cfg.drop.pathloss_exponent},
        {"pathloss_ref_db_at_1m", cfg.drop.pathloss_ref_db_at_1m},
        {"shadowing_sigma_db", cfg.drop.shadowing_sigma_db},
        {"bandwidth_hz", cfg.drop.bandwidth_hz},
        {"noise_density_dbm_per_hz", cfg.drop.noise_density_dbm_per_hz},
        {"min_distance_m", cfg.drop.min_distance_m},
    };
    json schemes = json::array();
    for (Scheme s : cfg.schemes) {
        schemes.push_back(to_string(s));
    }
    doc["schemes"] = schemes;
    doc["pairing"] = {{"variant", variant_name(cfg.variant)}, {"b_tot", cfg.b_tot_sweep}};
    doc["bisection"] = {{"t_low", cfg.bisection.t_low},
                        {"t_high", cfg.bisection.t_high},
                        {"epsilon", cfg.bisection.epsilon},
                        {"max_iters", cfg.bisection.max_iters}};
    doc["misocp"] = {
        {"time_limit_s", cfg.misocp.time_limit_s},
        {"integrality_tol", cfg.misocp.integrality_tol},
        {"node_selection", cfg.misocp.node_selection == NodeSelection::BestFirst ? "best_first" : "depth_first"}};
    doc["solver"] = {
        {"feas_tol", cfg.socp.feas_tol}, {"gap_tol", cfg.socp.gap_tol}, {"max_iters", cfg.socp.max_iters}};
    doc["p_max_watt"] = cfg.p_max_watt;
    doc["num_drops"] = cfg.num_drops;
    doc["base_seed"] = cfg.base_seed;
    doc["output_path"] = cfg.output_path;
    doc["opt_max_mk"] = cfg.opt_max_mk;
    doc["workers"] = cfg.workers;
    doc["csv_timing"] = cfg.csv_timing;
    return doc.dump(2);
}

RunRecord run_scheme(Scheme scheme, const Drop& drop, int b_tot, const ExperimentConfig& cfg, int drop_index,
                     std::uint64_t seed) {
    RunRecord rec;
    rec.drop_index = drop_index;
    rec.seed = seed;
    rec.scheme = scheme;
    rec.b_tot = b_tot;
    const ChannelMatrix& h = drop.channel;
    const PowerBudget p_max(cfg.p_max_watt);
    rec.variant = (scheme == Scheme::Opt || scheme == Scheme::Approx) ? cfg.variant : SharingVariant::PerUE;
    const SharingBudget budget{rec.variant, b_tot};
    MisocpConfig misocp = cfg.misocp;
    misocp.socp = cfg.socp;

    const auto start = std::chrono::steady_clock::now();
    try {
        PrecodingSolution sol;
        switch (scheme) {
            case Scheme::Opt:
            case Scheme::OptPerUE: {
                OptResult r = opt_scheme(h, budget, p_max, cfg.bisection, misocp);
                sol = std::move(r.solution);
                rec.pairing = std::move(r.pairing);
                rec.time_limited = r.time_limited;
                rec.stats.bnb_nodes = r.stats.nodes_explored;
                rec.stats.bnb_pruned = r.stats.pruned_infeasible;
                rec.stats.heuristic_hits = r.stats.heuristic_successes;
                break;
            }
            case Scheme::Approx: {
                GreedyResult r = greedy_pairing(h, budget, p_max, cfg.bisection, cfg.socp);
                sol = std::move(r.solution);
                rec.pairing = std::move(r.pairing);
                rec.partial_constraint = r.partial;
                rec.trace = std::move(r.trace);
                rec.stats.bisection_steps = r.bisection_steps;
                rec.stats.numerical_failures = r.numerical_failures;
                break;
            }
            case Scheme::Clust1:
            case Scheme::Clust2:
            case Scheme::Random: {
                const BaselineKind kind = scheme == Scheme::Clust1   ? BaselineKind::Clust1
                                          : scheme == Scheme::Clust2 ? BaselineKind::Clust2
                                                                     : BaselineKind::Random;
                BaselineResult r = baseline_scheme(h, {kind, quota_from_budget(b_tot, h.num_ues()), seed}, p_max,
                                                   cfg.bisection, cfg.socp);
                sol = std::move(r.solution);
                rec.pairing = std::move(r.pairing);
                break;
            }
        }
        if (scheme != Scheme::Approx) {
            rec.stats.bisection_steps = sol.iterations_used;
            rec.stats.numerical_failures = sol.numerical_failures;
        }
        rec.t_star = sol.t_star;
        rec.per_ue_rate_bps = shannon_rate(sol.t_star, h.bandwidth_hz());
        rec.precoder = std::move(sol.precoder);
        rec.active_pairs_total = rec.pairing.total_active();
        rec.active_pairs_per_ue = rec.pairing.active_per_ue();
        rec.failure_flagged = rec.stats.numerical_failures * 10 > rec.stats.bisection_steps;
    } catch (const std::exception& e) {
        rec.error = e.what();
    }
    rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rec;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    ExperimentResult result;
    const int mk = cfg.drop.m_aps * cfg.drop.k_ues;
    std::vector<Scheme> schemes;
    for (Scheme s : cfg.schemes) {
        if (is_opt(s) && mk > cfg.opt_max_mk) {
            result.notes.push_back(std::string(to_string(s)) + " skipped: M*K = " + std::to_string(mk) +
                                   " exceeds opt_max_mk = " + std::to_string(cfg.opt_max_mk));
            continue;
        }
        schemes.push_back(s);
    }

    std::vector<std::vector<RunRecord>> per_drop(static_cast<std::size_t>(cfg.num_drops));
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int i = next++; i < cfg.num_drops; i = next++) {
            DropConfig dc = cfg.drop;
            dc.seed = cfg.base_seed + static_cast<std::uint64_t>(i);
            const Drop drop = generate_drop(dc);
            auto& out = per_drop[static_cast<std::size_t>(i)];
            for (int b : cfg.b_tot_sweep) {
                for (Scheme s : schemes) {
                    out.push_back(run_scheme(s, drop, b, cfg, i, dc.seed));
                }
            }
        }
    };
    int threads = cfg.workers > 0 ? cfg.workers : static_cast<int>(std::thread::hardware_concurrency());
    threads = std::clamp(threads, 1, cfg.num_drops);
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) {
            pool.emplace_back(worker);
        }
        for (auto& t : pool) {
            t.join();
        }
    }

    for (auto& recs : per_drop) {
        for (auto& r : recs) {
            if (!r.error.empty()) {
                result.notes.push_back("drop " + std::to_string(r.drop_index) + " " + to_string(r.scheme) +
                                       " b_tot " + std::to_string(r.b_tot) + " failed: " + r.error);
            }
            result.records.push_back(std::move(r));
        }
    }
    result.summary = summarize(result.records);
    return result;
}

std::vector<SchemeSummary> summarize(const std::vector<RunRecord>& records) {
    // (b_tot, drop) -> unflagged OPT rate
    std::map<std::pair<int, int>, double> opt_rate;
    for (const auto& r : records) {
        if (r.scheme == Scheme::Opt && !r.flagged()) {
            opt_rate[{r.b_tot, r.drop_index}] = r.per_ue_rate_bps;
        }
    }
    std::map<std::pair<int, int>, std::vector<const RunRecord*>> groups;
    for (const auto& r : records) {
        groups[{r.b_tot, static_cast<int>(r.scheme)}].push_back(&r);
    }

    std::vector<SchemeSummary> out;
    for (const auto& [key, recs] : groups) {
        SchemeSummary s;
        s.b_tot = key.first;
        s.scheme = static_cast<Scheme>(key.second);
        s.records = static_cast<int>(recs.size());
        double sum = 0.0;
        double worst = std::numeric_limits<double>::infinity();
        double paired_sum = 0.0;
        double paired_opt_sum = 0.0;
        double paired_worst = std::numeric_limits<double>::infinity();
        double paired_opt_worst = std::numeric_limits<double>::infinity();
        int paired = 0;
        for (const RunRecord* r : recs) {
            if (r->flagged()) {
                continue;
            }
            ++s.used;
            sum += r->per_ue_rate_bps;
            worst = std::min(worst, r->per_ue_rate_bps);
            if (auto it = opt_rate.find({r->b_tot, r->drop_index}); it != opt_rate.end()) {
                ++paired;
                paired_sum += r->per_ue_rate_bps;
                paired_opt_sum += it->second;
                paired_worst = std::min(paired_worst, r->per_ue_rate_bps);
                paired_opt_worst = std::min(paired_opt_worst, it->second);
            }
        }
        if (s.used > 0) {
            s.mean_rate_bps = sum / s.used;
            s.worst_rate_bps = worst;
        }
        if (paired > 0 && paired_opt_sum > 0.0) {
            s.mean_ratio_to_opt = paired_sum / paired_opt_sum;
            if (paired_opt_worst > 0.0) {
                s.worst_ratio_to_opt = paired_worst / paired_opt_worst;
            }
        }
        out.push_back(s);
    }
    return out;
}

void write_csv(const std::vector<RunRecord>& records, std::ostream& out, bool with_timing) {
    out << "drop,seed,scheme,variant,b_tot,t_star,rate_bps,active_pairs,active_per_ue,bisection_steps,"
           "numerical_failures,bnb_nodes,bnb_pruned,time_limited,partial,failure_flagged,error";
    if (with_timing) {
        out << ",wall_time_s";
    }
    out << "\n";
    std::ostringstream line;
    for (const auto& r : records) {
        line.str("");
        line << std::setprecision(10);
        line << r.drop_index << ',' << r.seed << ',' << to_string(r.scheme) << ',' << variant_name(r.variant) << ','
             << r.b_tot << ',' << r.t_star << ',' << r.per_ue_rate_bps << ',' << r.active_pairs_total << ',';
        for (std::size_t k = 0; k < r.active_pairs_per_ue.size(); ++k) {
            line << (k ? ";" : "") << r.active_pairs_per_ue[k];
        }
        std::string err = r.error;
        std::replace(err.begin(), err.end(), '"', '\'');
        line << ',' << r.stats.bisection_steps << ',' << r.stats.numerical_failures << ',' << r.stats.bnb_nodes << ','
             << r.stats.bnb_pruned << ',' << int(r.time_limited) << ',' << int(r.partial_constraint) << ','
             << int(r.failure_flagged) << ",\"" << err << '"';
        if (with_timing) {
            line << ',' << r.wall_time_s;
        }
        out << line.str() << "\n";
    }
}

void write_summary_csv(const std::vector<SchemeSummary>& summary, std::ostream& out) {
    out << "scheme,b_tot,records,used,mean_rate_bps,worst_rate_bps,mean_ratio_to_opt,worst_ratio_to_opt\n";
    out << std::setprecision(10);
    for (const auto& s : summary) {
        out << to_string(s.scheme) << ',' << s.b_tot << ',' << s.records << ',' << s.used << ',' << s.mean_rate_bps
            << ',' << s.worst_rate_bps << ',';
        if (s.mean_ratio_to_opt) {
            out << *s.mean_ratio_to_opt;
        }
        out << ',';
        if (s.worst_ratio_to_opt) {
            out << *s.worst_ratio_to_opt;
        }
        out << "\n";
    }
}

std::string pairing_snapshot_json(const RunRecord& record, const Drop& drop) {
    json doc;
    doc["drop"] = record.drop_index;
    doc["seed"] = record.seed;
    doc["scheme"] = to_string(record.scheme);
    doc["variant"] = variant_name(record.variant);
    doc["b_tot"] = record.b_tot;
    doc["t_star"] = record.t_star;
    doc["rate_bps"] = record.per_ue_rate_bps;
    json aps = json::array();
    for (std::size_t m = 0; m < drop.ap_positions.size(); ++m) {
        aps.push_back({{"id", m}, {"x", drop.ap_positions[m].x}, {"y", drop.ap_positions[m].y}});
    }
    json ues = json::array();
    for (std::size_t k = 0; k < drop.ue_positions.size(); ++k) {
        ues.push_back({{"id", k}, {"x", drop.ue_positions[k].x}, {"y", drop.ue_positions[k].y}});
    }
    json edges = json::array();
    const PairingMatrix& a = record.pairing;
    const bool has_w = record.precoder.num_aps() == a.num_aps() && record.precoder.num_ues() == a.num_ues();
    for (int m = 0; m < a.num_aps(); ++m) {
        for (int k = 0; k < a.num_ues(); ++k) {
            if (a.active(m, k)) {
                json e = {{"ap", m}, {"ue", k}};
                if (has_w) {
                    e["power_w"] = std::norm(record.precoder(m, k));
                }
                edges.push_back(e);
            }
        }
    }
    doc["aps"] = aps;
    doc["ues"] = ues;
    doc["edges"] = edges;
    doc["active_per_ue"] = a.active_per_ue();
    return doc.dump(2);
}

std::string greedy_trace_json(const RunRecord& record) {
    json doc;
    doc["drop"] = record.drop_index;
    doc["b_tot"] = record.b_tot;
    json removals = json::array();
    json ts = json::array();
    if (record.trace) {
        for (auto [m, k] : record.trace->removal_sequence) {
            removals.push_back({m, k});
        }
        ts = record.trace->t_after_each;
    }
    doc["removals"] = removals;
    doc["t_after_each"] = ts;
    return doc.dump();
}

}  // namespace dmimo
