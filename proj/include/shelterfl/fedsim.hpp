#pragma once

#include "shelterfl/features.hpp"
#include "shelterfl/labeling.hpp"
#include "shelterfl/metrics.hpp"
#include "shelterfl/synthgen.hpp"
#include "shelterfl/types.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace shelterfl {

/// Training rows for the centralized scenario: merged (linked) features with
/// centrally assigned labels.
struct CentralizedInputs {
    Eigen::MatrixXd x;
    std::vector<Label> y;
};

/// One agency's private training slice: raw features plus the (N_S, N_E)
/// tuples its local or decentralized labeling runs on.
struct AgencyTrainData {
    Eigen::MatrixXd x;
    std::vector<StayTuple> tuples;
    std::vector<std::string> client_ids;
};

/// The only view the federated and isolated code paths ever receive; holds
/// no linked records and no provenance.
struct UnlinkedInputs {
    std::map<std::string, AgencyTrainData> agencies;
};

/// Held-out evaluation pool shared verbatim by all three scenarios: raw
/// unlinked features with centrally synchronized labels. Rows are grouped by
/// agency in sorted order.
struct SharedTestPool {
    Eigen::MatrixXd x;
    std::vector<Label> labels;
    std::vector<std::string> agency;
};

struct ExperimentData {
    CentralizedInputs central;
    UnlinkedInputs unlinked;
    SharedTestPool test;
    LabelCentroids central_centroids;

    // Harness-side diagnostics (never passed to scenario runners).
    std::vector<std::string> person_ids;
    std::vector<StayTuple> person_tuples;
    std::vector<Label> person_labels;
    std::map<std::string, std::int64_t> agency_total_clients;  // unlinked counts
};

/// Builds the shared experiment views from a cohort: central k-means labels
/// on linked tuples, a person-level stratified 80/20 split (so no person
/// straddles train and test), per-agency training fragments for the
/// federated/isolated paths and the shared synchronized test pool. The
/// provenance map is consumed here and not retained.
ExperimentData prepare_experiment(const Cohort& cohort,
                                  const WindowConfig& window,
                                  std::uint64_t master_seed);

/// Dataset-size-weighted entry-wise mean of local parameters, accumulated in
/// agency-id order.
ModelParameters fedavg_aggregate(
    const std::map<std::string, std::pair<ModelParameters, std::int64_t>>&
        locals);

/// Seed for agency-local training in a given federated round; exposed so an
/// equivalence harness can replay the exact schedule.
std::uint64_t fed_round_seed(std::uint64_t run_seed, int round,
                             const std::string& agency_id);

struct RoundLog {
    int round = 0;
    std::map<std::string, double> agency_loss;  // final local-epoch mean loss
    ClassMetrics test_macro;
    bool has_metrics = false;
    double wall_seconds = 0.0;  // diagnostic only; never serialized
};

struct ScenarioResult {
    std::string scenario;
    ModelParameters global_model;                       // centralized/federated
    std::map<std::string, ModelParameters> agency_models;  // isolated
    ConfusionMatrix aggregate_cm;
    std::map<std::string, ConfusionMatrix> per_agency_cm;
    std::array<ClassMetrics, kNumClasses> per_class;
    ClassMetrics macro;
    ClassMetrics weighted;
    std::vector<RoundLog> rounds;
    std::vector<std::string> untrainable_agencies;
    std::uint64_t run_seed = 0;
    LabelCentroids labeling_centroids;
};

ScenarioResult run_centralized(const CentralizedInputs& data,
                               const SharedTestPool& test,
                               const LabelCentroids& centroids,
                               TrainConfig train_cfg, std::uint64_t run_seed);

/// FedAvg: decentralized labeling of the per-agency training tuples, global
/// z-scoring from aggregated per-agency moments, then T rounds of local
/// training from the broadcast global model followed by size-weighted
/// aggregation. `metrics_every` controls test-metric snapshots in the round
/// log (0 disables them).
ScenarioResult run_federated(const UnlinkedInputs& data,
                             const SharedTestPool& test, TrainConfig train_cfg,
                             const FedConfig& fed_cfg, std::uint64_t run_seed,
                             std::uint64_t labeling_seed, int metrics_every = 1,
                             int max_parallel = 1);

/// Per-agency k-means labels, per-agency z-scoring and one model per agency,
/// each evaluated on that agency's slice of the shared test pool. Aggregate
/// metrics pool the per-agency confusion matrices.
ScenarioResult run_isolated(const UnlinkedInputs& data,
                            const SharedTestPool& test, TrainConfig train_cfg,
                            std::uint64_t run_seed, std::uint64_t labeling_seed,
                            int max_parallel = 1);

struct Stat {
    double mean = 0.0;
    double stddev = 0.0;  // sample convention; 0 for a single repeat
};

Stat stat_of(const std::vector<double>& values);

struct AveragedScenario {
    std::string scenario;
    int n_repeats = 0;
    Stat macro_precision, macro_recall, macro_f1;
    Stat weighted_precision, weighted_recall, weighted_f1;
    std::array<std::array<Stat, 3>, kNumClasses> per_class;  // [class][p/r/f1]
    std::map<std::string, Stat> agency_macro_f1;
    std::map<std::string, Stat> agency_precision;
    std::map<std::string, Stat> agency_recall;
    std::map<std::string, std::int64_t> agency_test_clients;
    std::vector<ScenarioResult> runs;
};

/// Runs the scenario with seeds seed_base .. seed_base + n_repeats - 1 and
/// averages every reported metric (mean and sample standard deviation).
AveragedScenario repeat_and_average(
    const std::function<ScenarioResult(std::uint64_t)>& runner,
    const std::string& scenario, int n_repeats, std::uint64_t seed_base);

/// Table-2-style trend: centralized >= federated >= isolated macro-recall
/// with a minimum federated-isolated gap and a maximum centralized-federated
/// gap.
bool scenario_ordering_holds(const AveragedScenario& centralized,
                             const AveragedScenario& federated,
                             const AveragedScenario& isolated,
                             double min_fed_iso_gap = 0.05,
                             double max_cent_fed_gap = 0.08);

struct EquityRow {
    std::string agency_id;
    std::int64_t total_clients = 0;
    std::int64_t test_clients = 0;
    double federated_f1 = 0.0;
    double isolated_f1 = 0.0;
    bool considered = false;  // under the size cap and enough test clients
};

/// Fig.-3-style equity check: agencies under `small_agency_cap` total
/// clients (and at least `min_test_clients` test-evaluable ones) must show
/// federated macro-F1 strictly above isolated.
std::vector<EquityRow> equity_rows(
    const AveragedScenario& federated, const AveragedScenario& isolated,
    const std::map<std::string, std::int64_t>& agency_total_clients,
    std::int64_t small_agency_cap = 10000, std::int64_t min_test_clients = 500);

bool equity_trend_holds(const std::vector<EquityRow>& rows);

/// One row per round in a stable field order; wall time is deliberately
/// omitted so reruns are byte-identical.
void write_rounds_csv_header(std::ostream& out,
                             const std::vector<std::string>& agencies);
void write_rounds_csv(std::ostream& out, const std::string& scenario,
                      int repeat_index, const std::vector<RoundLog>& rounds,
                      const std::vector<std::string>& agencies);

}  // namespace shelterfl
