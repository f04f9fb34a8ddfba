// SPDX-License-Identifier: Apache-2.0
#include "dmimo/harness.hpp"

#include <gtest/gtest.h>

#include <map>
#include <sstream>

using namespace dmimo;

namespace {

constexpr double kEps = 0.01;

ExperimentConfig small_config(std::vector<Scheme> schemes, std::vector<int> sweep, int drops) {
    ExperimentConfig cfg;
    cfg.drop = DropConfig::dense();
    cfg.drop.m_aps = 3;
    cfg.drop.k_ues = 3;
    cfg.schemes = std::move(schemes);
    cfg.b_tot_sweep = std::move(sweep);
    cfg.num_drops = drops;
    cfg.workers = 1;
    return cfg;
}

std::string csv_of(const ExperimentResult& r) {
    std::ostringstream os;
    write_csv(r.records, os);
    return os.str();
}

}  // namespace

TEST(Scheme, NamesRoundTrip) {
    for (Scheme s : all_schemes()) {
        EXPECT_EQ(scheme_from_string(to_string(s)), s);
    }
    EXPECT_THROW(scheme_from_string("best"), InvalidInput);
}

TEST(Config, ParsesNestedDocument) {
    const ExperimentConfig cfg = config_from_json(R"({
        "drop": {"preset": "sparse", "m_aps": 4, "k_ues": 3},
        "schemes": ["opt", "approx"],
        "pairing": {"variant": "per_ue", "b_tot": [3, 6]},
        "bisection": {"epsilon": 0.05},
        "misocp": {"time_limit_s": 10, "node_selection": "depth_first"},
        "num_drops": 5,
        "base_seed": 42
    })");
    EXPECT_EQ(cfg.drop.m_aps, 4);
    EXPECT_EQ(cfg.drop.k_ues, 3);
    EXPECT_DOUBLE_EQ(cfg.drop.side_length_m, DropConfig::sparse().side_length_m);
    EXPECT_EQ(cfg.schemes, (std::vector<Scheme>{Scheme::Opt, Scheme::Approx}));
    EXPECT_EQ(cfg.variant, SharingVariant::PerUE);
    EXPECT_EQ(cfg.b_tot_sweep, (std::vector<int>{3, 6}));
    EXPECT_DOUBLE_EQ(cfg.bisection.epsilon, 0.05);
    EXPECT_DOUBLE_EQ(cfg.misocp.time_limit_s, 10.0);
    EXPECT_EQ(cfg.misocp.node_selection, NodeSelection::DepthFirst);
    EXPECT_EQ(cfg.num_drops, 5);
    EXPECT_EQ(cfg.base_seed, 42u);
}

TEST(Config, RoundTripsThroughJson) {
    const ExperimentConfig a = small_config({Scheme::Clust2, Scheme::Random}, {3, 9}, 7);
    const ExperimentConfig b = config_from_json(config_to_json(a));
    EXPECT_EQ(config_to_json(a), config_to_json(b));
}

TEST(Config, RejectsInvalidDocuments) {
    EXPECT_THROW(config_from_json("{"), InvalidInput);
    EXPECT_THROW(config_from_json(R"({"drops": 3})"), InvalidInput);
    EXPECT_THROW(config_from_json(R"({"schemes": ["opt", "magic"]})"), InvalidInput);
    EXPECT_THROW(config_from_json(R"({"schemes": []})"), InvalidInput);
    EXPECT_THROW(config_from_json(R"({"num_drops": 0})"), InvalidInput);
    EXPECT_THROW(config_from_json(R"({"drop": {"m_aps": 2, "k_ues": 2}, "pairing": {"b_tot": 1}})"), InvalidInput);
    EXPECT_THROW(config_from_json(R"({"drop": {"m_aps": 2, "k_ues": 2}, "pairing": {"b_tot": 5}})"), InvalidInput);
    EXPECT_THROW(config_from_json(R"({"pairing": {"variant": "sometimes"}})"), InvalidInput);
    EXPECT_THROW(config_from_json(R"({"drop": {"preset": "urban"}})"), InvalidInput);
    EXPECT_THROW(config_from_json(R"({"misocp": {"time_limit_s": -1}})"), InvalidInput);
    EXPECT_THROW(load_config("/nonexistent/dmimo.json"), InvalidInput);
}

TEST(RunExperiment, SingleApproxAtFullBudget) {
    const ExperimentConfig cfg = small_config({Scheme::Approx}, {9}, 1);
    const ExperimentResult r = run_experiment(cfg);
    ASSERT_EQ(r.records.size(), 1u);
    DropConfig dc = cfg.drop;
    dc.seed = cfg.base_seed;
    const Drop drop = generate_drop(dc);
    EXPECT_NEAR(r.records[0].t_star, max_common_sinr(drop.channel, ZeroSet(3, 3), PowerBudget(1.0)).t_star, 1e-12);
    EXPECT_EQ(r.records[0].active_pairs_total, 9);
    EXPECT_NEAR(r.records[0].per_ue_rate_bps, shannon_rate(r.records[0].t_star, 200e3), 1e-9);
}

TEST(RunExperiment, DeterministicAcrossRunsAndWorkers) {
    ExperimentConfig cfg = small_config({Scheme::Opt, Scheme::Approx, Scheme::Random}, {3, 5}, 3);
    const std::string first = csv_of(run_experiment(cfg));
    EXPECT_EQ(first, csv_of(run_experiment(cfg)));
    cfg.workers = 3;
    EXPECT_EQ(first, csv_of(run_experiment(cfg)));
}

TEST(RunExperiment, RecordsOrderedByDropBudgetScheme) {
    const ExperimentConfig cfg = small_config({Scheme::Clust1, Scheme::Clust2}, {3, 6}, 2);
    const ExperimentResult r = run_experiment(cfg);
    ASSERT_EQ(r.records.size(), 8u);
    EXPECT_EQ(r.records[0].drop_index, 0);
    EXPECT_EQ(r.records[1].scheme, Scheme::Clust2);
    EXPECT_EQ(r.records[2].b_tot, 6);
    EXPECT_EQ(r.records[4].drop_index, 1);
    EXPECT_EQ(r.records[4].seed, cfg.base_seed + 1);
}

TEST(RunExperiment, PairedOrderingOnSmallNetwork) {
    const ExperimentConfig cfg = small_config({Scheme::Opt, Scheme::Approx, Scheme::Clust1, Scheme::Random}, {3}, 20);
    const ExperimentResult r = run_experiment(cfg);
    std::map<int, std::map<Scheme, double>> t;
    for (const auto& rec : r.records) {
        ASSERT_FALSE(rec.flagged()) << rec.error;
        t[rec.drop_index][rec.scheme] = rec.t_star;
    }
    double approx = 0.0;
    double random = 0.0;
    double opt = 0.0;
    for (auto& [drop, m] : t) {
        EXPECT_GE(m[Scheme::Opt], m[Scheme::Approx] - 2 * kEps) << "drop " << drop;
        opt += m[Scheme::Opt];
        approx += m[Scheme::Approx];
        random += m[Scheme::Random];
    }
    EXPECT_GE(opt, approx);
    EXPECT_GE(approx, random);
}

TEST(RunExperiment, SizeGuardSkipsOpt) {
    ExperimentConfig cfg = small_config({Scheme::Opt, Scheme::OptPerUE, Scheme::Clust1}, {3}, 1);
    cfg.opt_max_mk = 4;
    const ExperimentResult r = run_experiment(cfg);
    ASSERT_EQ(r.records.size(), 1u);
    EXPECT_EQ(r.records[0].scheme, Scheme::Clust1);
    EXPECT_EQ(r.notes.size(), 2u);
}

TEST(Summary, MeansOverUnflaggedRecords) {
    std::vector<RunRecord> recs(4);
    const double rates[] = {100.0, 300.0, 50.0, 80.0};
    for (int i = 0; i < 4; ++i) {
        recs[static_cast<std::size_t>(i)].drop_index = i % 2;
        recs[static_cast<std::size_t>(i)].b_tot = 3;
        recs[static_cast<std::size_t>(i)].per_ue_rate_bps = rates[i];
        recs[static_cast<std::size_t>(i)].scheme = i < 2 ? Scheme::Opt : Scheme::Approx;
    }
    recs[3].time_limited = true;
    const auto summary = summarize(recs);
    ASSERT_EQ(summary.size(), 2u);
    const SchemeSummary& opt = summary[0];
    const SchemeSummary& approx = summary[1];
    EXPECT_EQ(opt.scheme, Scheme::Opt);
    EXPECT_DOUBLE_EQ(opt.mean_rate_bps, 200.0);
    EXPECT_DOUBLE_EQ(opt.worst_rate_bps, 100.0);
    EXPECT_DOUBLE_EQ(*opt.mean_ratio_to_opt, 1.0);
    EXPECT_EQ(approx.records, 2);
    EXPECT_EQ(approx.used, 1);
    EXPECT_DOUBLE_EQ(approx.mean_rate_bps, 50.0);
    EXPECT_DOUBLE_EQ(*approx.mean_ratio_to_opt, 0.5);
}

TEST(Csv, HeaderAndOneRowPerRecord) {
    const ExperimentResult r = run_experiment(small_config({Scheme::Clust1}, {3, 6, 9}, 2));
    std::ostringstream os;
    write_csv(r.records, os, true);
    std::istringstream in(os.str());
    std::string line;
    int rows = 0;
    std::getline(in, line);
    EXPECT_NE(line.find("wall_time_s"), std::string::npos);
    while (std::getline(in, line)) {
        ++rows;
    }
    EXPECT_EQ(rows, 6);
}

TEST(Snapshot, EdgesFollowPairing) {
    ExperimentConfig cfg = small_config({Scheme::Opt}, {9, 3}, 1);
    const ExperimentResult r = run_experiment(cfg);
    DropConfig dc = cfg.drop;
    dc.seed = cfg.base_seed;
    const Drop drop = generate_drop(dc);
    ASSERT_EQ(r.records.size(), 2u);

    const std::string full = pairing_snapshot_json(r.records[0], drop);
    const std::string minimal = pairing_snapshot_json(r.records[1], drop);
    auto count = [](const std::string& s, const std::string& needle) {
        int n = 0;
        for (std::size_t pos = s.find(needle); pos != std::string::npos; pos = s.find(needle, pos + 1)) {
            ++n;
        }
        return n;
    };
    EXPECT_EQ(count(full, "\"ue\":"), 9);
    EXPECT_EQ(count(minimal, "\"ue\":"), 3);
    EXPECT_EQ(r.records[1].active_pairs_per_ue, (std::vector<int>{1, 1, 1}));
    EXPECT_NE(minimal.find("\"active_per_ue\""), std::string::npos);
}

TEST(GreedyTraceJson, ListsRemovals) {
    const ExperimentResult r = run_experiment(small_config({Scheme::Approx}, {3}, 1));
    const std::string s = greedy_trace_json(r.records[0]);
    EXPECT_NE(s.find("\"removals\""), std::string::npos);
    EXPECT_EQ(r.records[0].trace->removal_sequence.size(), 6u);
}
