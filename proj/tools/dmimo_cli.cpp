// SPDX-License-Identifier: Apache-2.0
//
// dmimo run | snapshot | calibrate
#include "dmimo/channel_gen.hpp"
#include "dmimo/harness.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

constexpr int kExitInvalidConfig = 2;
constexpr int kExitFailure = 1;

std::vector<dmimo::Scheme> parse_scheme_list(const std::string& list) {
    std::vector<dmimo::Scheme> out;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) {
            out.push_back(dmimo::scheme_from_string(item));
        }
    }
    return out;
}

std::ostream& open_or_stdout(const std::string& path, std::ofstream& file) {
    if (path.empty() || path == "-") {
        return std::cout;
    }
    file.open(path);
    if (!file) {
        throw std::runtime_error("cannot write " + path);
    }
    return file;
}

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::string schemes;
    std::string output;
    std::optional<int> drops;
    std::optional<int> workers;
};

dmimo::ExperimentConfig load(const std::string& path, const Overrides& o) {
    dmimo::ExperimentConfig cfg = dmimo::load_config(path);
    if (o.seed) {
        cfg.base_seed = *o.seed;
    }
    if (!o.schemes.empty()) {
        cfg.schemes = parse_scheme_list(o.schemes);
    }
    if (!o.output.empty()) {
        cfg.output_path = o.output;
    }
    if (o.drops) {
        cfg.num_drops = *o.drops;
    }
    if (o.workers) {
        cfg.workers = *o.workers;
    }
    cfg.validate();
    return cfg;
}

void print_summary(const dmimo::ExperimentResult& result) {
    std::printf("%-11s %6s %5s %14s %14s %9s %9s\n", "scheme", "b_tot", "used", "mean_rate_bps", "worst_rate_bps",
                "mean/opt", "worst/opt");
    for (const auto& s : result.summary) {
        std::printf("%-11s %6d %2d/%-2d %14.1f %14.1f", dmimo::to_string(s.scheme), s.b_tot, s.used, s.records,
                    s.mean_rate_bps, s.worst_rate_bps);
        if (s.mean_ratio_to_opt) {
            std::printf(" %9.3f", *s.mean_ratio_to_opt);
        } else {
            std::printf(" %9s", "-");
        }
        if (s.worst_ratio_to_opt) {
            std::printf(" %9.3f", *s.worst_ratio_to_opt);
        } else {
            std::printf(" %9s", "-");
        }
        std::printf("\n");
    }
    for (const auto& note : result.notes) {
        std::printf("note: %s\n", note.c_str());
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Max-min fair downlink rates in distributed MIMO with limited data sharing"};
    app.require_subcommand(1);

    Overrides o;
    std::string config_path;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("config", config_path, "Experiment config (JSON)")->required();
        sub->add_option("--seed", o.seed, "Override base_seed");
        sub->add_option("--schemes", o.schemes, "Comma-separated scheme filter, e.g. opt,approx,clust1");
    };

    CLI::App* run = app.add_subcommand("run", "Run the Monte-Carlo experiment and write per-drop CSV");
    add_common(run);
    run->add_option("-o,--output", o.output, "CSV output path ('-' for stdout)");
    run->add_option("--drops", o.drops, "Override num_drops");
    run->add_option("--workers", o.workers, "Worker threads, 0 = hardware concurrency");
    std::string summary_path;
    std::string traces_path;
    run->add_option("--summary", summary_path, "Also write the summary table as CSV");
    run->add_option("--traces", traces_path, "Write greedy removal traces as JSON lines");

    CLI::App* snapshot = app.add_subcommand("snapshot", "Pairing snapshot of one drop as JSON");
    add_common(snapshot);
    int drop_index = 0;
    std::string scheme_name;
    std::optional<int> snap_b_tot;
    std::string snap_output;
    snapshot->add_option("--drop", drop_index, "Drop index (seed = base_seed + index)")->check(CLI::NonNegativeNumber);
    snapshot->add_option("--scheme", scheme_name, "Scheme, default the first configured one");
    snapshot->add_option("--b-tot", snap_b_tot, "Budget, default the first in the sweep");
    snapshot->add_option("-o,--output", snap_output, "JSON output path, default stdout");

    CLI::App* calibrate = app.add_subcommand("calibrate", "Mean reference SNR of the channel model");
    add_common(calibrate);
    std::vector<double> exponents;
    std::optional<double> target_db;
    int cal_drops = 100;
    calibrate->add_option("--exponents", exponents, "Path-loss exponents to sweep")->delimiter(',');
    calibrate->add_option("--target-db", target_db, "Also print the path-loss reference that hits this SNR");
    calibrate->add_option("--drops", cal_drops, "Drops per point")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitInvalidConfig;
    }

    try {
        const dmimo::ExperimentConfig cfg = load(config_path, o);

        if (run->parsed()) {
            const dmimo::ExperimentResult result = dmimo::run_experiment(cfg);
            std::ofstream file;
            dmimo::write_csv(result.records, open_or_stdout(cfg.output_path, file), cfg.csv_timing);
            if (!summary_path.empty()) {
                std::ofstream sf;
                dmimo::write_summary_csv(result.summary, open_or_stdout(summary_path, sf));
            }
            if (!traces_path.empty()) {
                std::ofstream tf;
                std::ostream& out = open_or_stdout(traces_path, tf);
                for (const auto& r : result.records) {
                    if (r.trace) {
                        out << dmimo::greedy_trace_json(r) << "\n";
                    }
                }
            }
            if (cfg.output_path != "-") {
                print_summary(result);
            }
            return 0;
        }

        if (snapshot->parsed()) {
            const dmimo::Scheme scheme =
                scheme_name.empty() ? cfg.schemes.front() : dmimo::scheme_from_string(scheme_name);
            const int b_tot = snap_b_tot.value_or(cfg.b_tot_sweep.front());
            dmimo::ExperimentConfig one = cfg;
            one.b_tot_sweep = {b_tot};
            one.validate();
            dmimo::DropConfig dc = cfg.drop;
            dc.seed = cfg.base_seed + static_cast<std::uint64_t>(drop_index);
            const dmimo::Drop drop = dmimo::generate_drop(dc);
            const dmimo::RunRecord rec = dmimo::run_scheme(scheme, drop, b_tot, one, drop_index, dc.seed);
            if (!rec.error.empty()) {
                std::cerr << "error: " << rec.error << "\n";
                return kExitFailure;
            }
            std::ofstream file;
            open_or_stdout(snap_output, file) << dmimo::pairing_snapshot_json(rec, drop) << "\n";
            return 0;
        }

        if (calibrate->parsed()) {
            if (exponents.empty()) {
                exponents.push_back(cfg.drop.pathloss_exponent);
            }
            const dmimo::PowerBudget p_max(cfg.p_max_watt);
            std::printf("%9s %12s %14s", "exponent", "ref_db_1m", "mean_snr_db");
            if (target_db) {
                std::printf(" %18s", "ref_db_for_target");
            }
            std::printf("\n");
            for (double n : exponents) {
                dmimo::DropConfig dc = cfg.drop;
                dc.pathloss_exponent = n;
                dc.validate();
                const double snr = dmimo::mean_reference_snr_db(dc, p_max, cal_drops, cfg.base_seed);
                std::printf("%9.3f %12.3f %14.3f", n, dc.pathloss_ref_db_at_1m, snr);
                if (target_db) {
                    const auto point = dmimo::calibrate_pathloss_ref(dc, p_max, *target_db, cal_drops, cfg.base_seed);
                    std::printf(" %18.3f", point.pathloss_ref_db_at_1m);
                }
                std::printf("\n");
            }
            return 0;
        }
    } catch (const dmimo::InvalidInput& e) {
        std::cerr << "invalid config: " << e.what() << "\n";
        return kExitInvalidConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return 0;
}
