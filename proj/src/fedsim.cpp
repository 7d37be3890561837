#include "shelterfl/fedsim.hpp"

#include "shelterfl/nnet.hpp"
#include "shelterfl/rng.hpp"
#include "shelterfl/stay_io.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <ostream>
#include <set>
#include <stdexcept>

namespace shelterfl {

namespace {

std::string modal_agency(const std::map<std::string, int>& stay_counts) {
    std::string best;
    int best_days = -1;
    for (const auto& [agency_id, days] : stay_counts) {
        if (days > best_days) {  // map order breaks ties toward smaller id
            best_days = days;
            best = agency_id;
        }
    }
    return best;
}

struct TestEval {
    ConfusionMatrix aggregate;
    std::map<std::string, ConfusionMatrix> per_agency;
};

TestEval evaluate_pool(const ModelParameters& model,
                       const Eigen::MatrixXd& x_normalized,
                       const SharedTestPool& test, OutputActivation activation) {
    TestEval eval;
    if (x_normalized.rows() == 0) {
        return eval;
    }
    const auto predictions = predict(model, x_normalized, activation);
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        eval.aggregate.add(test.labels[i], predictions[i]);
        eval.per_agency[test.agency[i]].add(test.labels[i], predictions[i]);
    }
    return eval;
}

void finalize_metrics(ScenarioResult& result) {
    result.per_class = per_class_metrics(result.aggregate_cm);
    result.macro = macro_metrics(result.aggregate_cm);
    result.weighted = weighted_metrics(result.aggregate_cm);
}

/// Row ranges of the shared test pool per agency (rows are grouped).
std::map<std::string, std::pair<Eigen::Index, Eigen::Index>> test_ranges(
    const SharedTestPool& test) {
    std::map<std::string, std::pair<Eigen::Index, Eigen::Index>> ranges;
    Eigen::Index start = 0;
    for (Eigen::Index i = 0; i <= static_cast<Eigen::Index>(test.agency.size());
         ++i) {
        if (i == static_cast<Eigen::Index>(test.agency.size()) ||
            (i > start &&
             test.agency[static_cast<std::size_t>(i)] !=
                 test.agency[static_cast<std::size_t>(start)])) {
            if (i > start) {
                ranges[test.agency[static_cast<std::size_t>(start)]] = {start, i};
            }
            start = i;
        }
    }
    return ranges;
}

}  // namespace

ExperimentData prepare_experiment(const Cohort& cohort,
                                  const WindowConfig& window,
                                  std::uint64_t master_seed) {
    window.validate();
    const auto merged = merged_histories(cohort.linked);
    if (merged.empty()) {
        throw std::invalid_argument("prepare_experiment: empty cohort");
    }

    ExperimentData data;

    // Central labels from the linked tuples.
    std::vector<StayTuple> tuples;
    tuples.reserve(merged.size());
    for (const auto& history : merged) {
        tuples.push_back(extract_tuple(history, window));
    }
    const auto central = centralized_labeling(
        tuples, derive_seed(master_seed, "labeling/central"));
    data.central_centroids = central.centroids;

    // Per-person stay counts by agency, for the modal-agency stratification
    // key.
    std::map<std::string, std::map<std::string, int>> stay_counts;
    for (const auto& [agency_id, dataset] : cohort.linked) {
        for (const auto& client : dataset.clients) {
            stay_counts[client.client_id][agency_id] +=
                static_cast<int>(client.stays.size());
        }
    }

    std::vector<FeatureVector> person_vectors;
    person_vectors.reserve(merged.size());
    std::map<std::string, Label> central_label;
    for (std::size_t i = 0; i < merged.size(); ++i) {
        FeatureVector fv = extract_features(merged[i], window);
        fv.label = central.labels[i];
        fv.agency_id = modal_agency(stay_counts.at(merged[i].client_id));
        person_vectors.push_back(std::move(fv));
        central_label.emplace(merged[i].client_id, central.labels[i]);
        data.person_ids.push_back(merged[i].client_id);
    }
    data.person_tuples = std::move(tuples);
    data.person_labels = central.labels;

    // Person-level split: every fragment of a person follows the person.
    auto [train_fv, test_fv] =
        stratified_split(person_vectors, 0.8, derive_seed(master_seed, "split"));
    data.central.x = stack_features(train_fv);
    data.central.y.reserve(train_fv.size());
    for (const auto& fv : train_fv) {
        data.central.y.push_back(*fv.label);
    }
    std::set<std::string> train_ids;
    for (const auto& fv : train_fv) {
        train_ids.insert(fv.client_id);
    }

    // Fragment views: training fragments per agency, test fragments pooled
    // with labels synchronized to the parent's central label.
    const auto unlinked = unlink(cohort.linked);
    std::vector<FeatureVector> test_rows;
    std::vector<Label> test_labels;
    for (const auto& [agency_id, dataset] : unlinked.unlinked) {
        AgencyTrainData train_data;
        std::vector<FeatureVector> train_features;
        for (const auto& fragment : dataset.clients) {
            const std::string& parent = unlinked.provenance.at(fragment.client_id);
            if (train_ids.count(parent) > 0) {
                FeatureVector fv = extract_features(fragment, window);
                fv.agency_id = agency_id;
                train_features.push_back(std::move(fv));
                train_data.tuples.push_back(extract_tuple(fragment, window));
                train_data.client_ids.push_back(fragment.client_id);
            } else {
                FeatureVector fv = extract_features(fragment, window);
                fv.agency_id = agency_id;
                test_rows.push_back(std::move(fv));
                test_labels.push_back(central_label.at(parent));
            }
        }
        train_data.x = stack_features(train_features);
        if (train_data.x.size() == 0) {
            train_data.x.resize(0, window.feature_dim());
        }
        data.agency_total_clients[agency_id] =
            static_cast<std::int64_t>(dataset.clients.size());
        data.unlinked.agencies.emplace(agency_id, std::move(train_data));
    }

    data.test.x = stack_features(test_rows);
    if (data.test.x.size() == 0) {
        data.test.x.resize(0, window.feature_dim());
    }
    data.test.labels = std::move(test_labels);
    data.test.agency.reserve(test_rows.size());
    for (const auto& fv : test_rows) {
        data.test.agency.push_back(fv.agency_id);
    }
    return data;
}

ModelParameters fedavg_aggregate(
    const std::map<std::string, std::pair<ModelParameters, std::int64_t>>&
        locals) {
    if (locals.empty()) {
        throw std::invalid_argument("fedavg_aggregate: no local models");
    }
    double total = 0.0;
    for (const auto& [agency_id, entry] : locals) {
        if (entry.second <= 0) {
            throw std::invalid_argument(
                "fedavg_aggregate: non-positive dataset size for " + agency_id);
        }
        if (!entry.first.same_shape(locals.begin()->second.first)) {
            throw std::invalid_argument("fedavg_aggregate: shape mismatch at " +
                                        agency_id);
        }
        total += static_cast<double>(entry.second);
    }
    ModelParameters out =
        ModelParameters::zeros_like(locals.begin()->second.first);
    for (const auto& [agency_id, entry] : locals) {
        out.axpy(static_cast<double>(entry.second) / total, entry.first);
    }
    return out;
}

std::uint64_t fed_round_seed(std::uint64_t run_seed, int round,
                             const std::string& agency_id) {
    return derive_seed(derive_seed(run_seed, "fed/round-" + std::to_string(round)),
                       "agency/" + agency_id);
}

ScenarioResult run_centralized(const CentralizedInputs& data,
                               const SharedTestPool& test,
                               const LabelCentroids& centroids,
                               TrainConfig train_cfg, std::uint64_t run_seed) {
    if (data.x.rows() == 0) {
        throw std::invalid_argument("run_centralized: empty training data");
    }
    ScenarioResult result;
    result.scenario = "centralized";
    result.run_seed = run_seed;
    result.labeling_centroids = centroids;

    const auto z = fit_normalization(data.x);
    const Eigen::MatrixXd x_train = apply_normalization(data.x, z);

    ModelParameters model = init_model(static_cast<int>(data.x.cols()),
                                       derive_seed(run_seed, "init"));
    TrainConfig cfg = train_cfg;
    cfg.seed = derive_seed(run_seed, "centralized/train");
    model = agency_training(std::move(model), x_train, data.y, cfg);

    const Eigen::MatrixXd x_test = apply_normalization(test.x, z);
    auto eval = evaluate_pool(model, x_test, test, cfg.output_activation);
    result.aggregate_cm = eval.aggregate;
    result.per_agency_cm = std::move(eval.per_agency);
    result.global_model = std::move(model);
    finalize_metrics(result);
    return result;
}

namespace {

std::vector<std::string> participating_agencies(const UnlinkedInputs& data,
                                                const FedConfig& fed_cfg) {
    std::vector<std::string> agencies;
    if (fed_cfg.agencies.empty()) {
        for (const auto& [agency_id, ignored] : data.agencies) {
            agencies.push_back(agency_id);
        }
    } else {
        agencies = fed_cfg.agencies;
        std::sort(agencies.begin(), agencies.end());
        for (const auto& agency_id : agencies) {
            if (data.agencies.find(agency_id) == data.agencies.end()) {
                throw std::invalid_argument("run_federated: unknown agency " +
                                            agency_id);
            }
        }
    }
    return agencies;
}

/// Applies `work(agency)` for each agency, at most `max_parallel` at a time.
/// Results are keyed by agency so downstream reductions stay order-stable.
template <typename Work>
void for_each_agency(const std::vector<std::string>& agencies, int max_parallel,
                     Work&& work) {
    if (max_parallel <= 1) {
        for (const auto& agency_id : agencies) {
            work(agency_id);
        }
        return;
    }
    std::size_t next = 0;
    while (next < agencies.size()) {
        const std::size_t batch =
            std::min<std::size_t>(static_cast<std::size_t>(max_parallel),
                                  agencies.size() - next);
        std::vector<std::future<void>> futures;
        futures.reserve(batch);
        for (std::size_t i = 0; i < batch; ++i) {
            const std::string& agency_id = agencies[next + i];
            futures.push_back(std::async(std::launch::async,
                                         [&work, &agency_id] { work(agency_id); }));
        }
        for (auto& future : futures) {
            future.get();
        }
        next += batch;
    }
}

}  // namespace

ScenarioResult run_federated(const UnlinkedInputs& data,
                             const SharedTestPool& test, TrainConfig train_cfg,
                             const FedConfig& fed_cfg, std::uint64_t run_seed,
                             std::uint64_t labeling_seed, int metrics_every,
                             int max_parallel) {
    fed_cfg.validate();
    train_cfg.validate();
    const auto agencies = participating_agencies(data, fed_cfg);
    if (agencies.empty()) {
        throw std::invalid_argument("run_federated: no agencies");
    }

    ScenarioResult result;
    result.scenario = "federated";
    result.run_seed = run_seed;

    // Step 1: decentralized labeling of the local training tuples.
    std::map<std::string, std::vector<StayTuple>> tuple_map;
    for (const auto& agency_id : agencies) {
        tuple_map.emplace(agency_id, data.agencies.at(agency_id).tuples);
    }
    const LabelCentroids centroids =
        decentralized_labeling(tuple_map, labeling_seed);
    result.labeling_centroids = centroids;

    std::map<std::string, std::vector<Label>> labels;
    for (const auto& agency_id : agencies) {
        auto& agency_labels = labels[agency_id];
        for (const auto& tuple : data.agencies.at(agency_id).tuples) {
            agency_labels.push_back(label_with_centroids(tuple, centroids));
        }
    }

    // Global z-scoring from aggregated per-agency moments.
    MomentAccumulator moments;
    for (const auto& agency_id : agencies) {
        const auto& x = data.agencies.at(agency_id).x;
        if (x.rows() > 0) {
            moments.merge(MomentAccumulator::from_matrix(x));
        }
    }
    const NormalizationParams z = moments.finalize();

    std::map<std::string, Eigen::MatrixXd> x_train;
    std::vector<std::string> active;
    for (const auto& agency_id : agencies) {
        const auto& x = data.agencies.at(agency_id).x;
        if (x.rows() == 0) {
            result.untrainable_agencies.push_back(agency_id);
            continue;  // skipped every round; weight redistributes
        }
        x_train.emplace(agency_id, apply_normalization(x, z));
        active.push_back(agency_id);
    }
    if (active.empty()) {
        throw std::invalid_argument("run_federated: no trainable agencies");
    }
    const Eigen::MatrixXd x_test = apply_normalization(test.x, z);

    ModelParameters model =
        init_model(static_cast<int>(x_train.begin()->second.cols()),
                   derive_seed(run_seed, "init"));

    for (int round = 1; round <= fed_cfg.rounds; ++round) {
        const auto round_start = std::chrono::steady_clock::now();
        std::map<std::string, std::pair<ModelParameters, std::int64_t>> locals;
        std::map<std::string, double> losses;
        std::mutex collect;

        for_each_agency(active, max_parallel, [&](const std::string& agency_id) {
            TrainConfig local_cfg = train_cfg;
            local_cfg.epochs = fed_cfg.local_epochs;
            local_cfg.seed = fed_round_seed(run_seed, round, agency_id);
            TrainStats stats;
            ModelParameters trained = agency_training(
                model, x_train.at(agency_id), labels.at(agency_id), local_cfg,
                &stats);
            std::lock_guard<std::mutex> guard(collect);
            locals.emplace(agency_id,
                           std::make_pair(std::move(trained),
                                          static_cast<std::int64_t>(
                                              x_train.at(agency_id).rows())));
            losses.emplace(agency_id, stats.epoch_mean_loss.empty()
                                          ? 0.0
                                          : stats.epoch_mean_loss.back());
        });

        model = fedavg_aggregate(locals);

        RoundLog log;
        log.round = round;
        log.agency_loss = std::move(losses);
        if (metrics_every > 0 &&
            (round % metrics_every == 0 || round == fed_cfg.rounds)) {
            auto eval =
                evaluate_pool(model, x_test, test, train_cfg.output_activation);
            log.test_macro = macro_metrics(eval.aggregate);
            log.has_metrics = true;
        }
        log.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                          round_start)
                .count();
        result.rounds.push_back(std::move(log));
    }

    auto eval = evaluate_pool(model, x_test, test, train_cfg.output_activation);
    result.aggregate_cm = eval.aggregate;
    result.per_agency_cm = std::move(eval.per_agency);
    result.global_model = std::move(model);
    finalize_metrics(result);
    return result;
}

ScenarioResult run_isolated(const UnlinkedInputs& data,
                            const SharedTestPool& test, TrainConfig train_cfg,
                            std::uint64_t run_seed, std::uint64_t labeling_seed,
                            int max_parallel) {
    train_cfg.validate();
    ScenarioResult result;
    result.scenario = "isolated";
    result.run_seed = run_seed;

    std::vector<std::string> agencies;
    for (const auto& [agency_id, ignored] : data.agencies) {
        agencies.push_back(agency_id);
    }
    const auto ranges = test_ranges(test);

    std::mutex collect;
    std::vector<std::string> untrainable;
    for_each_agency(agencies, max_parallel, [&](const std::string& agency_id) {
        const auto& agency = data.agencies.at(agency_id);
        if (agency.x.rows() == 0) {
            std::lock_guard<std::mutex> guard(collect);
            untrainable.push_back(agency_id);
            return;
        }
        LabelCentroids centroids;
        try {
            // Same per-agency seed stream as decentralized labeling, so a
            // one-agency federation labels identically to isolation.
            auto kmeans = kmeans3(agency.tuples,
                                  derive_seed(labeling_seed, "agency/" + agency_id));
            centroids = assign_roles(kmeans.centroids);
        } catch (const DegenerateClustering&) {
            std::lock_guard<std::mutex> guard(collect);
            untrainable.push_back(agency_id);
            return;
        }

        std::vector<Label> labels;
        labels.reserve(agency.tuples.size());
        for (const auto& tuple : agency.tuples) {
            labels.push_back(label_with_centroids(tuple, centroids));
        }

        const auto z = fit_normalization(agency.x);
        const Eigen::MatrixXd x_train = apply_normalization(agency.x, z);

        TrainConfig cfg = train_cfg;
        cfg.seed = derive_seed(run_seed, "isolated/train/" + agency_id);
        ModelParameters model =
            init_model(static_cast<int>(agency.x.cols()),
                       derive_seed(derive_seed(run_seed, "init"),
                                   "agency/" + agency_id));
        model = agency_training(std::move(model), x_train, labels, cfg);

        ConfusionMatrix cm;
        const auto range = ranges.find(agency_id);
        if (range != ranges.end()) {
            const auto [begin, end] = range->second;
            const Eigen::MatrixXd slice =
                apply_normalization(test.x.middleRows(begin, end - begin), z);
            const auto predictions =
                predict(model, slice, cfg.output_activation);
            for (Eigen::Index i = 0; i < end - begin; ++i) {
                cm.add(test.labels[static_cast<std::size_t>(begin + i)],
                       predictions[static_cast<std::size_t>(i)]);
            }
        }

        std::lock_guard<std::mutex> guard(collect);
        result.agency_models.emplace(agency_id, std::move(model));
        result.per_agency_cm.emplace(agency_id, cm);
    });

    std::sort(untrainable.begin(), untrainable.end());
    result.untrainable_agencies = std::move(untrainable);
    for (const auto& [agency_id, cm] : result.per_agency_cm) {
        result.aggregate_cm += cm;
    }
    finalize_metrics(result);
    return result;
}

Stat stat_of(const std::vector<double>& values) {
    Stat stat;
    if (values.empty()) {
        return stat;
    }
    for (double v : values) {
        stat.mean += v;
    }
    stat.mean /= static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) {
            ss += (v - stat.mean) * (v - stat.mean);
        }
        stat.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return stat;
}

AveragedScenario repeat_and_average(
    const std::function<ScenarioResult(std::uint64_t)>& runner,
    const std::string& scenario, int n_repeats, std::uint64_t seed_base) {
    if (n_repeats < 1) {
        throw std::invalid_argument("repeat_and_average: n_repeats must be >= 1");
    }
    AveragedScenario avg;
    avg.scenario = scenario;
    avg.n_repeats = n_repeats;
    for (int r = 0; r < n_repeats; ++r) {
        avg.runs.push_back(runner(seed_base + static_cast<std::uint64_t>(r)));
    }

    auto collect = [&](auto&& get) {
        std::vector<double> values;
        values.reserve(avg.runs.size());
        for (const auto& run : avg.runs) {
            values.push_back(get(run));
        }
        return stat_of(values);
    };

    avg.macro_precision = collect([](const ScenarioResult& r) { return r.macro.precision; });
    avg.macro_recall = collect([](const ScenarioResult& r) { return r.macro.recall; });
    avg.macro_f1 = collect([](const ScenarioResult& r) { return r.macro.f1; });
    avg.weighted_precision =
        collect([](const ScenarioResult& r) { return r.weighted.precision; });
    avg.weighted_recall =
        collect([](const ScenarioResult& r) { return r.weighted.recall; });
    avg.weighted_f1 = collect([](const ScenarioResult& r) { return r.weighted.f1; });
    for (int c = 0; c < kNumClasses; ++c) {
        avg.per_class[static_cast<std::size_t>(c)][0] = collect(
            [c](const ScenarioResult& r) { return r.per_class[static_cast<std::size_t>(c)].precision; });
        avg.per_class[static_cast<std::size_t>(c)][1] = collect(
            [c](const ScenarioResult& r) { return r.per_class[static_cast<std::size_t>(c)].recall; });
        avg.per_class[static_cast<std::size_t>(c)][2] = collect(
            [c](const ScenarioResult& r) { return r.per_class[static_cast<std::size_t>(c)].f1; });
    }

    std::set<std::string> agency_ids;
    for (const auto& run : avg.runs) {
        for (const auto& [agency_id, ignored] : run.per_agency_cm) {
            agency_ids.insert(agency_id);
        }
    }
    for (const auto& agency_id : agency_ids) {
        std::vector<double> f1s, precisions, recalls;
        std::int64_t clients = 0;
        for (const auto& run : avg.runs) {
            const auto found = run.per_agency_cm.find(agency_id);
            if (found == run.per_agency_cm.end()) {
                continue;
            }
            const auto macro = macro_metrics(found->second);
            f1s.push_back(macro.f1);
            precisions.push_back(macro.precision);
            recalls.push_back(macro.recall);
            clients = found->second.total();
        }
        avg.agency_macro_f1.emplace(agency_id, stat_of(f1s));
        avg.agency_precision.emplace(agency_id, stat_of(precisions));
        avg.agency_recall.emplace(agency_id, stat_of(recalls));
        avg.agency_test_clients.emplace(agency_id, clients);
    }
    return avg;
}

bool scenario_ordering_holds(const AveragedScenario& centralized,
                             const AveragedScenario& federated,
                             const AveragedScenario& isolated,
                             double min_fed_iso_gap, double max_cent_fed_gap) {
    const double c = centralized.macro_recall.mean;
    const double f = federated.macro_recall.mean;
    const double i = isolated.macro_recall.mean;
    return c >= f && f >= i && (f - i) >= min_fed_iso_gap &&
           (c - f) <= max_cent_fed_gap;
}

std::vector<EquityRow> equity_rows(
    const AveragedScenario& federated, const AveragedScenario& isolated,
    const std::map<std::string, std::int64_t>& agency_total_clients,
    std::int64_t small_agency_cap, std::int64_t min_test_clients) {
    std::vector<EquityRow> rows;
    for (const auto& [agency_id, fed_f1] : federated.agency_macro_f1) {
        EquityRow row;
        row.agency_id = agency_id;
        row.federated_f1 = fed_f1.mean;
        const auto iso = isolated.agency_macro_f1.find(agency_id);
        row.isolated_f1 = iso == isolated.agency_macro_f1.end() ? 0.0 : iso->second.mean;
        const auto total = agency_total_clients.find(agency_id);
        row.total_clients = total == agency_total_clients.end() ? 0 : total->second;
        const auto tests = federated.agency_test_clients.find(agency_id);
        row.test_clients = tests == federated.agency_test_clients.end() ? 0 : tests->second;
        row.considered = row.total_clients < small_agency_cap &&
                         row.test_clients >= min_test_clients;
        rows.push_back(std::move(row));
    }
    return rows;
}

bool equity_trend_holds(const std::vector<EquityRow>& rows) {
    for (const auto& row : rows) {
        if (row.considered && !(row.federated_f1 > row.isolated_f1)) {
            return false;
        }
    }
    return true;
}

void write_rounds_csv_header(std::ostream& out,
                             const std::vector<std::string>& agencies) {
    out << "scenario,repeat,round,test_macro_precision,test_macro_recall,"
           "test_macro_f1";
    for (const auto& agency_id : agencies) {
        out << ",loss_" << agency_id;
    }
    out << '\n';
}

void write_rounds_csv(std::ostream& out, const std::string& scenario,
                      int repeat_index, const std::vector<RoundLog>& rounds,
                      const std::vector<std::string>& agencies) {
    for (const auto& log : rounds) {
        out << scenario << ',' << repeat_index << ',' << log.round << ',';
        if (log.has_metrics) {
            out << format_metric(log.test_macro.precision) << ','
                << format_metric(log.test_macro.recall) << ','
                << format_metric(log.test_macro.f1);
        } else {
            out << ",,";
        }
        char buf[32];
        for (const auto& agency_id : agencies) {
            const auto found = log.agency_loss.find(agency_id);
            out << ',';
            if (found != log.agency_loss.end()) {
                std::snprintf(buf, sizeof(buf), "%.6f", found->second);
                out << buf;
            }
        }
        out << '\n';
    }
}

}  // namespace shelterfl
