// Experiment runner: synthetic cohorts, labeling, the hyperparameter sweep
// and the three-scenario comparison.

#include "shelterfl/config.hpp"
#include "shelterfl/features.hpp"
#include "shelterfl/fedsim.hpp"
#include "shelterfl/labeling.hpp"
#include "shelterfl/metrics.hpp"
#include "shelterfl/nnet.hpp"
#include "shelterfl/stay_io.hpp"
#include "shelterfl/synthgen.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace sfl = shelterfl;
namespace fs = std::filesystem;

namespace {

constexpr int kExitConfigError = 2;
constexpr int kExitPropertyFailure = 3;

struct CommonOptions {
    std::string config_path;
    std::string out_dir = "out";
    std::string scenario;
    std::string data_path;
    long long seed = -1;
    int repeats = -1;
    bool fast = false;
};

sfl::ExperimentConfig resolve_config(const CommonOptions& opts) {
    sfl::ExperimentConfig config;
    if (opts.fast) {
        sfl::apply_fast_profile(config);
    }
    if (!opts.config_path.empty()) {
        std::ifstream in(opts.config_path);
        if (!in) {
            throw sfl::ConfigError("cannot open config: " + opts.config_path);
        }
        config = sfl::parse_config_with_defaults(in, config);
    }
    if (!opts.data_path.empty()) {
        config.data_path = opts.data_path;
    }
    if (opts.seed >= 0) {
        config.master_seed = static_cast<std::uint64_t>(opts.seed);
    }
    if (opts.repeats > 0) {
        config.repeats = opts.repeats;
    }
    if (!opts.scenario.empty()) {
        config.scenarios = opts.scenario;
    }
    config.validate();
    return config;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open for writing: " + path.string());
    }
    return out;
}

sfl::Cohort load_or_generate_cohort(const sfl::ExperimentConfig& config) {
    sfl::Cohort cohort;
    if (!config.data_path.empty()) {
        const auto records = sfl::read_stay_records_file(config.data_path);
        if (records.empty()) {
            throw sfl::ConfigError("data file has no records: " +
                                   config.data_path);
        }
        // Drop clients that entered too late to realize a label over T_p.
        sfl::Day dataset_end = records.front().date;
        for (const auto& rec : records) {
            dataset_end = std::max(dataset_end, rec.date);
        }
        const sfl::Day cutoff = dataset_end - config.window.prediction_days;
        std::map<std::string, sfl::Day> first_day;
        for (const auto& rec : records) {
            auto [it, inserted] = first_day.emplace(rec.client_id, rec.date);
            if (!inserted) {
                it->second = std::min(it->second, rec.date);
            }
        }
        std::vector<sfl::StayRecord> kept;
        std::size_t dropped = 0;
        for (const auto& rec : records) {
            if (first_day.at(rec.client_id) > cutoff) {
                ++dropped;
                continue;
            }
            kept.push_back(rec);
        }
        if (dropped > 0) {
            std::cerr << "note: dropped " << dropped
                      << " records of clients entering after day "
                      << sfl::format_day(cutoff) << " (insufficient follow-up)\n";
        }
        cohort.linked = sfl::group_by_agency(kept);
    } else {
        cohort = sfl::gen_cohort(config.cohort);
    }
    return cohort;
}

int cmd_generate(const sfl::ExperimentConfig& config, const fs::path& out_dir) {
    const auto cohort = sfl::gen_cohort(config.cohort);
    fs::create_directories(out_dir);
    const auto records = sfl::flatten(cohort.linked);
    sfl::write_stay_records_file((out_dir / "stays.csv").string(), records);
    sfl::write_truth_file((out_dir / "truth.csv").string(),
                          sfl::truth_rows(cohort));

    std::map<sfl::Label, int> class_counts;
    for (const auto& [client_id, label] : cohort.truth) {
        ++class_counts[label];
    }
    std::cout << "clients: " << cohort.truth.size() << '\n';
    std::cout << "stay records: " << records.size() << '\n';
    for (sfl::Label label : sfl::kAllLabels) {
        std::cout << sfl::to_string(label) << ": " << class_counts[label] << '\n';
    }
    for (const auto& [agency_id, dataset] : cohort.linked) {
        std::cout << "agency " << agency_id << ": " << dataset.clients.size()
                  << " linked clients\n";
    }
    std::cout << "wrote " << (out_dir / "stays.csv").string() << " and "
              << (out_dir / "truth.csv").string() << '\n';
    return 0;
}

int cmd_label(const sfl::ExperimentConfig& config, const fs::path& out_dir,
              const std::string& mode) {
    if (config.data_path.empty()) {
        throw sfl::ConfigError("label: --data is required");
    }
    if (mode != "central" && mode != "decentral" && mode != "isolated") {
        throw sfl::ConfigError("label: mode must be central|decentral|isolated");
    }
    const auto cohort = load_or_generate_cohort(config);
    fs::create_directories(out_dir);
    const auto& window = config.window;
    const std::uint64_t seed =
        sfl::derive_seed(config.master_seed, "labeling/local");

    auto centroids_out = open_out(out_dir / "centroids.txt");
    std::vector<sfl::FeatureVector> labeled;

    // Per-agency units: each (client, agency) pair with that agency's stays.
    std::map<std::string, std::vector<sfl::StayTuple>> tuples_by_agency;
    for (const auto& [agency_id, dataset] : cohort.linked) {
        for (const auto& client : dataset.clients) {
            tuples_by_agency[agency_id].push_back(
                sfl::extract_tuple(client, window));
        }
    }

    auto labeled_vector = [&](const sfl::ClientHistory& history,
                              const std::string& agency_id,
                              sfl::Label label) {
        sfl::FeatureVector fv = sfl::extract_features(history, window);
        fv.agency_id = agency_id;
        fv.label = label;
        return fv;
    };

    if (mode == "central") {
        const auto merged = sfl::merged_histories(cohort.linked);
        std::vector<sfl::StayTuple> tuples;
        for (const auto& history : merged) {
            tuples.push_back(sfl::extract_tuple(history, window));
        }
        const auto central = sfl::centralized_labeling(
            tuples, sfl::derive_seed(config.master_seed, "labeling/central"));
        centroids_out << sfl::format_centroids(central.centroids) << '\n';
        for (std::size_t i = 0; i < merged.size(); ++i) {
            labeled.push_back(
                labeled_vector(merged[i], "all", central.labels[i]));
        }
    } else if (mode == "decentral") {
        const auto global = sfl::decentralized_labeling(tuples_by_agency, seed);
        centroids_out << sfl::format_centroids(global) << '\n';
        for (const auto& [agency_id, dataset] : cohort.linked) {
            for (const auto& client : dataset.clients) {
                labeled.push_back(labeled_vector(
                    client, agency_id,
                    sfl::label_with_centroids(
                        sfl::extract_tuple(client, window), global)));
            }
        }
        // Distance report against a centralized fit over the merged units.
        const auto merged = sfl::merged_histories(cohort.linked);
        std::vector<sfl::StayTuple> tuples;
        for (const auto& history : merged) {
            tuples.push_back(sfl::extract_tuple(history, window));
        }
        const auto central = sfl::centralized_labeling(
            tuples, sfl::derive_seed(config.master_seed, "labeling/central"));
        const double dist =
            (global.transitional - central.centroids.transitional).norm() +
            (global.episodic - central.centroids.episodic).norm() +
            (global.chronic - central.centroids.chronic).norm();
        std::cout << "decentralized vs centralized centroid distance (sum of "
                     "role norms): "
                  << dist << '\n';
    } else {  // isolated
        for (const auto& [agency_id, tuples] : tuples_by_agency) {
            try {
                const auto result = sfl::kmeans3(
                    tuples, sfl::derive_seed(seed, "agency/" + agency_id));
                const auto roles = sfl::assign_roles(result.centroids);
                centroids_out << agency_id << ' ' << sfl::format_centroids(roles)
                              << '\n';
                const auto& dataset = cohort.linked.at(agency_id);
                for (const auto& client : dataset.clients) {
                    labeled.push_back(labeled_vector(
                        client, agency_id,
                        sfl::label_with_centroids(
                            sfl::extract_tuple(client, window), roles)));
                }
            } catch (const sfl::DegenerateClustering&) {
                centroids_out << agency_id << " degenerate\n";
            }
        }
    }

    auto labels_out = open_out(out_dir / "labels.csv");
    sfl::write_feature_matrix(labels_out, labeled);
    std::cout << "labeled " << labeled.size() << " records ("
              << mode << ") -> " << (out_dir / "labels.csv").string() << '\n';
    return 0;
}

struct SweepRow {
    int t_b, t_o, t_p;
    sfl::Stat precision, recall;
};

int cmd_sweep(const sfl::ExperimentConfig& config, const fs::path& out_dir) {
    const auto cohort = load_or_generate_cohort(config);
    fs::create_directories(out_dir);

    sfl::TrainConfig train_cfg = config.train;
    if (config.sweep_epochs > 0) {
        train_cfg.epochs = config.sweep_epochs;
    }
    const std::uint64_t seed_base =
        sfl::derive_seed(config.master_seed, "runs");

    // Table layout: bins, then prediction window ascending, then observation
    // window descending.
    std::vector<SweepRow> rows;
    auto observations = config.sweep_observation;
    std::sort(observations.rbegin(), observations.rend());
    auto predictions = config.sweep_prediction;
    std::sort(predictions.begin(), predictions.end());
    auto bins = config.sweep_bins;
    std::sort(bins.begin(), bins.end());

    for (int t_b : bins) {
        for (int t_p : predictions) {
            for (int t_o : observations) {
                sfl::WindowConfig window = config.window;
                window.n_bins = t_b;
                window.prediction_days = t_p;
                window.observation_days = t_o;
                const auto data =
                    sfl::prepare_experiment(cohort, window, config.master_seed);
                const auto avg = sfl::repeat_and_average(
                    [&](std::uint64_t run_seed) {
                        return sfl::run_centralized(data.central, data.test,
                                                    data.central_centroids,
                                                    train_cfg, run_seed);
                    },
                    "centralized", config.repeats, seed_base);
                rows.push_back({t_b, t_o, t_p, avg.macro_precision,
                                avg.macro_recall});
                std::cerr << "sweep cell T_b=" << t_b << " T_o=" << t_o
                          << " T_p=" << t_p
                          << " recall=" << avg.macro_recall.mean << '\n';
            }
        }
    }

    auto csv = open_out(out_dir / "sweep.csv");
    csv << "t_b,t_o,t_p,precision,recall,precision_std,recall_std\n";
    for (const auto& row : rows) {
        csv << row.t_b << ',' << row.t_o << ',' << row.t_p << ','
            << sfl::format_metric(row.precision.mean) << ','
            << sfl::format_metric(row.recall.mean) << ','
            << sfl::format_metric(row.precision.stddev) << ','
            << sfl::format_metric(row.recall.stddev) << '\n';
    }

    auto txt = open_out(out_dir / "sweep.txt");
    txt << "T_b  T_o  T_p   Precision  Recall\n";
    char buf[96];
    for (const auto& row : rows) {
        std::snprintf(buf, sizeof(buf), "%3d  %3d  %3d   %.3f      %.3f\n",
                      row.t_b, row.t_o, row.t_p, row.precision.mean,
                      row.recall.mean);
        txt << buf;
    }

    // Trend checks: recall non-increasing in T_p at fixed (T_b, T_o) and
    // non-decreasing in T_o at fixed (T_b, T_p); one violation allowed per
    // nine comparisons in each direction.
    auto recall_at = [&](int t_b, int t_o, int t_p) {
        for (const auto& row : rows) {
            if (row.t_b == t_b && row.t_o == t_o && row.t_p == t_p) {
                return row.recall.mean;
            }
        }
        throw std::logic_error("sweep cell missing");
    };
    int tp_comparisons = 0, tp_violations = 0;
    for (int t_b : bins) {
        for (int t_o : observations) {
            for (std::size_t i = 0; i + 1 < predictions.size(); ++i) {
                ++tp_comparisons;
                if (recall_at(t_b, t_o, predictions[i + 1]) >
                    recall_at(t_b, t_o, predictions[i])) {
                    ++tp_violations;
                }
            }
        }
    }
    int to_comparisons = 0, to_violations = 0;
    for (int t_b : bins) {
        for (int t_p : predictions) {
            for (std::size_t i = 0; i + 1 < observations.size(); ++i) {
                ++to_comparisons;
                // observations is sorted descending
                if (recall_at(t_b, observations[i + 1], t_p) >
                    recall_at(t_b, observations[i], t_p)) {
                    ++to_violations;
                }
            }
        }
    }
    const int tp_allowed = tp_comparisons / 9;
    const int to_allowed = to_comparisons / 9;
    txt << "\nrecall non-increasing in T_p: " << tp_violations << '/'
        << tp_comparisons << " violations (allowed " << tp_allowed << ")\n";
    txt << "recall non-decreasing in T_o: " << to_violations << '/'
        << to_comparisons << " violations (allowed " << to_allowed << ")\n";
    std::cout << "sweep wrote " << rows.size() << " rows; T_p violations "
              << tp_violations << '/' << tp_comparisons << ", T_o violations "
              << to_violations << '/' << to_comparisons << '\n';

    if (tp_violations > tp_allowed || to_violations > to_allowed) {
        std::cerr << "sweep: monotone trend check failed\n";
        return kExitPropertyFailure;
    }
    return 0;
}

void write_averaged_tables(std::ostream& out,
                           const std::vector<sfl::AveragedScenario>& scenarios) {
    out << "[aggregate]\n";
    out << "scenario,macro_precision,macro_recall,macro_f1,weighted_precision,"
           "weighted_recall,weighted_f1,macro_recall_std\n";
    for (const auto& s : scenarios) {
        out << s.scenario << ',' << sfl::format_metric(s.macro_precision.mean)
            << ',' << sfl::format_metric(s.macro_recall.mean) << ','
            << sfl::format_metric(s.macro_f1.mean) << ','
            << sfl::format_metric(s.weighted_precision.mean) << ','
            << sfl::format_metric(s.weighted_recall.mean) << ','
            << sfl::format_metric(s.weighted_f1.mean) << ','
            << sfl::format_metric(s.macro_recall.stddev) << '\n';
    }
    out << "\n[per_class]\n";
    out << "scenario,class,precision,recall,f1\n";
    for (const auto& s : scenarios) {
        for (int c = 0; c < sfl::kNumClasses; ++c) {
            out << s.scenario << ','
                << sfl::to_string(static_cast<sfl::Label>(c)) << ','
                << sfl::format_metric(s.per_class[static_cast<std::size_t>(c)][0].mean)
                << ','
                << sfl::format_metric(s.per_class[static_cast<std::size_t>(c)][1].mean)
                << ','
                << sfl::format_metric(s.per_class[static_cast<std::size_t>(c)][2].mean)
                << '\n';
        }
    }
}

int cmd_compare(const sfl::ExperimentConfig& config, const fs::path& out_dir) {
    const auto started = std::chrono::steady_clock::now();
    const auto cohort = load_or_generate_cohort(config);
    const auto data =
        sfl::prepare_experiment(cohort, config.window, config.master_seed);
    fs::create_directories(out_dir);

    const std::uint64_t seed_base = sfl::derive_seed(config.master_seed, "runs");
    const std::uint64_t labeling_seed =
        sfl::derive_seed(config.master_seed, "labeling/local");

    const bool run_central =
        config.scenarios == "all" || config.scenarios == "central";
    const bool run_fed =
        config.scenarios == "all" || config.scenarios == "federated";
    const bool run_iso =
        config.scenarios == "all" || config.scenarios == "isolated";

    std::vector<sfl::AveragedScenario> scenarios;
    const sfl::AveragedScenario* centralized = nullptr;
    const sfl::AveragedScenario* federated = nullptr;
    const sfl::AveragedScenario* isolated = nullptr;

    if (run_central) {
        scenarios.push_back(sfl::repeat_and_average(
            [&](std::uint64_t run_seed) {
                return sfl::run_centralized(data.central, data.test,
                                            data.central_centroids, config.train,
                                            run_seed);
            },
            "centralized", config.repeats, seed_base));
        std::cerr << "centralized done: macro recall "
                  << scenarios.back().macro_recall.mean << '\n';
    }
    if (run_fed) {
        scenarios.push_back(sfl::repeat_and_average(
            [&](std::uint64_t run_seed) {
                return sfl::run_federated(data.unlinked, data.test, config.train,
                                          config.fed, run_seed, labeling_seed,
                                          config.round_metrics_every,
                                          config.max_parallel);
            },
            "federated", config.repeats, seed_base));
        std::cerr << "federated done: macro recall "
                  << scenarios.back().macro_recall.mean << '\n';
    }
    if (run_iso) {
        scenarios.push_back(sfl::repeat_and_average(
            [&](std::uint64_t run_seed) {
                return sfl::run_isolated(data.unlinked, data.test, config.train,
                                         run_seed, labeling_seed,
                                         config.max_parallel);
            },
            "isolated", config.repeats, seed_base));
        std::cerr << "isolated done: macro recall "
                  << scenarios.back().macro_recall.mean << '\n';
    }
    for (const auto& s : scenarios) {
        if (s.scenario == "centralized") centralized = &s;
        if (s.scenario == "federated") federated = &s;
        if (s.scenario == "isolated") isolated = &s;
    }

    // Round logs (federated repeats, stable order).
    std::vector<std::string> agency_ids;
    for (const auto& [agency_id, ignored] : data.unlinked.agencies) {
        agency_ids.push_back(agency_id);
    }
    if (federated != nullptr) {
        auto rounds_out = open_out(out_dir / "rounds_federated.csv");
        sfl::write_rounds_csv_header(rounds_out, agency_ids);
        for (std::size_t r = 0; r < federated->runs.size(); ++r) {
            sfl::write_rounds_csv(rounds_out, "federated", static_cast<int>(r),
                                  federated->runs[r].rounds, agency_ids);
        }
    }

    // Per-agency tables + F1 chart data.
    if (federated != nullptr && isolated != nullptr) {
        auto chart = open_out(out_dir / "f1_chart.csv");
        std::vector<sfl::F1ChartPoint> points;
        for (const auto& [agency_id, stat] : federated->agency_macro_f1) {
            points.push_back({agency_id, "federated", stat.mean});
        }
        for (const auto& [agency_id, stat] : isolated->agency_macro_f1) {
            points.push_back({agency_id, "isolated", stat.mean});
        }
        sfl::write_f1_chart(chart, points);

        auto table = open_out(out_dir / "per_agency.csv");
        table << "agency,total_clients,test_clients,f_precision,f_recall,f_f1,"
                 "i_precision,i_recall,i_f1\n";
        for (const auto& agency_id : agency_ids) {
            auto stat_or = [&](const std::map<std::string, sfl::Stat>& m) {
                const auto found = m.find(agency_id);
                return found == m.end() ? sfl::Stat{} : found->second;
            };
            std::int64_t tests = 0;
            if (const auto found = federated->agency_test_clients.find(agency_id);
                found != federated->agency_test_clients.end()) {
                tests = found->second;
            }
            table << agency_id << ','
                  << data.agency_total_clients.at(agency_id) << ',' << tests
                  << ',' << sfl::format_metric(stat_or(federated->agency_precision).mean)
                  << ',' << sfl::format_metric(stat_or(federated->agency_recall).mean)
                  << ',' << sfl::format_metric(stat_or(federated->agency_macro_f1).mean)
                  << ',' << sfl::format_metric(stat_or(isolated->agency_precision).mean)
                  << ',' << sfl::format_metric(stat_or(isolated->agency_recall).mean)
                  << ',' << sfl::format_metric(stat_or(isolated->agency_macro_f1).mean)
                  << '\n';
        }
    }

    // Manifest: config echo, seeds, centroids, tables, property checks.
    auto manifest = open_out(out_dir / "manifest.txt");
    manifest << "# shelterfl run manifest (format 1)\n\n";
    sfl::write_config(manifest, config);
    manifest << "\n[seeds]\n";
    manifest << "master = " << config.master_seed << '\n';
    manifest << "run_seed_base = " << seed_base << '\n';
    manifest << "labeling_seed = " << labeling_seed << '\n';
    manifest << "\n[labeling]\n";
    manifest << "central " << sfl::format_centroids(data.central_centroids)
             << '\n';
    if (federated != nullptr && !federated->runs.empty()) {
        manifest << "decentralized "
                 << sfl::format_centroids(
                        federated->runs.front().labeling_centroids)
                 << '\n';
    }
    manifest << '\n';
    write_averaged_tables(manifest, scenarios);

    bool ordering_ok = true;
    if (centralized != nullptr && federated != nullptr && isolated != nullptr) {
        ordering_ok =
            sfl::scenario_ordering_holds(*centralized, *federated, *isolated);
        manifest << "\n[checks]\n";
        manifest << "ordering_holds = " << (ordering_ok ? "true" : "false")
                 << '\n';

        const double scale =
            static_cast<double>(config.cohort.n_clients) / 50000.0;
        const auto cap = std::max<std::int64_t>(
            1, static_cast<std::int64_t>(std::llround(10000.0 * scale)));
        const auto min_test = std::max<std::int64_t>(
            1, static_cast<std::int64_t>(std::llround(500.0 * scale)));
        const auto equity = sfl::equity_rows(*federated, *isolated,
                                             data.agency_total_clients, cap,
                                             min_test);
        manifest << "equity_small_agency_cap = " << cap << '\n';
        manifest << "equity_min_test_clients = " << min_test << '\n';
        manifest << "equity_holds = "
                 << (sfl::equity_trend_holds(equity) ? "true" : "false") << '\n';
        manifest << "agency,total_clients,test_clients,federated_f1,isolated_f1,"
                    "considered\n";
        for (const auto& row : equity) {
            manifest << row.agency_id << ',' << row.total_clients << ','
                     << row.test_clients << ','
                     << sfl::format_metric(row.federated_f1) << ','
                     << sfl::format_metric(row.isolated_f1) << ','
                     << (row.considered ? "yes" : "no") << '\n';
        }
    }

    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
            .count();
    std::cerr << "compare finished in " << elapsed << " s\n";
    std::cout << "wrote " << (out_dir / "manifest.txt").string() << '\n';
    for (const auto& s : scenarios) {
        std::cout << s.scenario << ": macro precision "
                  << sfl::format_metric(s.macro_precision.mean)
                  << ", macro recall "
                  << sfl::format_metric(s.macro_recall.mean) << '\n';
    }
    if (!ordering_ok) {
        std::cerr << "compare: scenario ordering property failed\n";
        return kExitPropertyFailure;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Federated shelter-use prediction experiments"};
    app.require_subcommand(1);

    CommonOptions opts;
    std::string mode = "central";

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", opts.config_path, "Config file path");
        cmd->add_option("--out", opts.out_dir, "Output directory");
        cmd->add_option("--seed", opts.seed, "Master seed");
        cmd->add_option("--repeats", opts.repeats, "Number of repeats");
        cmd->add_flag("--fast", opts.fast,
                      "Desk-scale profile (5k clients, 25 rounds, 3 repeats)");
        cmd->add_option("--data", opts.data_path,
                        "Stay-record file (instead of the generator)");
    };

    auto* generate = app.add_subcommand("generate", "Write a synthetic cohort");
    add_common(generate);
    auto* label = app.add_subcommand("label", "Standalone labeling utility");
    add_common(label);
    label->add_option("--mode", mode, "central|decentral|isolated");
    auto* sweep = app.add_subcommand(
        "sweep", "Centralized hyperparameter sweep over the window grid");
    add_common(sweep);
    auto* compare = app.add_subcommand(
        "compare", "Run and compare the three training scenarios");
    add_common(compare);
    compare->add_option("--scenario", opts.scenario,
                        "central|federated|isolated|all");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfigError;
    }

    try {
        const auto config = resolve_config(opts);
        const fs::path out_dir(opts.out_dir);
        if (generate->parsed()) {
            return cmd_generate(config, out_dir);
        }
        if (label->parsed()) {
            return cmd_label(config, out_dir, mode);
        }
        if (sweep->parsed()) {
            return cmd_sweep(config, out_dir);
        }
        if (compare->parsed()) {
            return cmd_compare(config, out_dir);
        }
    } catch (const sfl::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
