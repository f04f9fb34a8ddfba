// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "dmimo/channel_gen.hpp"
#include "dmimo/greedy.hpp"
#include "dmimo/misocp.hpp"
#include "dmimo/network_model.hpp"
#include "dmimo/precoding.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dmimo {

enum class Scheme { Opt, OptPerUE, Approx, Clust1, Clust2, Random };

const char* to_string(Scheme scheme);
/// Accepts the names printed by to_string. Throws InvalidInput otherwise.
Scheme scheme_from_string(std::string_view name);
std::vector<Scheme> all_schemes();

struct ExperimentConfig {
    DropConfig drop;
    std::vector<Scheme> schemes;
    /// Variant of the OPT and APPROX budgets. OPT-perUE and the baselines always use per-UE caps.
    SharingVariant variant = SharingVariant::Total;
    std::vector<int> b_tot_sweep;
    BisectionParams bisection;
    MisocpConfig misocp;
    SolverTolerances socp;
    double p_max_watt = 1.0;
    int num_drops = 20;
    std::uint64_t base_seed = 1;
    std::string output_path = "results.csv";
    /// OPT and OPT-perUE are skipped on networks with M * K above this.
    int opt_max_mk = 36;
    /// 0 picks the hardware concurrency.
    int workers = 0;
    /// Adds the wall-time column, which makes the CSV run-dependent.
    bool csv_timing = false;

    /// Throws InvalidInput on any inconsistency.
    void validate() const;
};

/// Throws InvalidInput on malformed documents, unknown keys or invalid values.
ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string config_to_json(const ExperimentConfig& cfg);

struct SolverStats {
    long bisection_steps = 0;
    long numerical_failures = 0;
    long bnb_nodes = 0;
    long bnb_pruned = 0;
    long heuristic_hits = 0;
};

struct RunRecord {
    int drop_index = 0;
    std::uint64_t seed = 0;
    Scheme scheme = Scheme::Opt;
    SharingVariant variant = SharingVariant::Total;
    int b_tot = 0;
    double t_star = 0.0;
    double per_ue_rate_bps = 0.0;
    int active_pairs_total = 0;
    std::vector<int> active_pairs_per_ue;
    double wall_time_s = 0.0;
    SolverStats stats;
    bool time_limited = false;
    bool partial_constraint = false;
    bool failure_flagged = false;
    /// Exception text when the scheme threw.
    std::string error;
    PairingMatrix pairing;
    PrecoderMatrix precoder;
    std::optional<GreedyTrace> trace;

    /// Excluded from summary statistics.
    [[nodiscard]] bool flagged() const {
        return time_limited || partial_constraint || failure_flagged || !error.empty();
    }
};

/// Runs one scheme on one drop. Scheme exceptions are caught into the record's error field.
RunRecord run_scheme(Scheme scheme, const Drop& drop, int b_tot, const ExperimentConfig& cfg, int drop_index,
                     std::uint64_t seed);

struct SchemeSummary {
    Scheme scheme = Scheme::Opt;
    int b_tot = 0;
    int records = 0;
    int used = 0;
    double mean_rate_bps = 0.0;
    double worst_rate_bps = 0.0;
    /// Mean and worst rate over the same drops, divided by OPT's; set when OPT ran.
    std::optional<double> mean_ratio_to_opt;
    std::optional<double> worst_ratio_to_opt;
};

struct ExperimentResult {
    std::vector<RunRecord> records;
    std::vector<SchemeSummary> summary;
    std::vector<std::string> notes;
};

/// Drop i uses seed base_seed + i; every scheme sees the same channel. Drops run on a
/// worker pool and records come back ordered by (drop, b_tot, scheme).
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Per-(scheme, b_tot) statistics over unflagged records.
std::vector<SchemeSummary> summarize(const std::vector<RunRecord>& records);

void write_csv(const std::vector<RunRecord>& records, std::ostream& out, bool with_timing = false);
void write_summary_csv(const std::vector<SchemeSummary>& summary, std::ostream& out);

/// JSON with node positions and the active AP-UE edges of the record's pairing.
std::string pairing_snapshot_json(const RunRecord& record, const Drop& drop);

std::string greedy_trace_json(const RunRecord& record);

}  // namespace dmimo
