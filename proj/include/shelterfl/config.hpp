#pragma once

#include "shelterfl/synthgen.hpp"
#include "shelterfl/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace shelterfl {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Experiment controls. Defaults reproduce the reference configuration, so a
/// run needs no config file at all; a flat sectioned key=value file can
/// override any field.
struct ExperimentConfig {
    CohortSpec cohort;
    std::string data_path;  // when set, ingest stays instead of generating

    WindowConfig window;

    std::vector<int> sweep_observation = {60, 90, 120};
    std::vector<int> sweep_bins = {5, 10};
    std::vector<int> sweep_prediction = {548, 730, 913};
    int sweep_epochs = 0;  // 0 = train.epochs

    TrainConfig train;
    FedConfig fed;

    std::string scenarios = "all";  // central|federated|isolated|all
    int repeats = 10;
    std::uint64_t master_seed = 1;
    int round_metrics_every = 1;
    int max_parallel = 2;

    void validate() const;  // throws ConfigError
};

ExperimentConfig parse_config(std::istream& in);

/// Parses overrides on top of an existing configuration (profile defaults
/// first, file second, CLI flags last).
ExperimentConfig parse_config_with_defaults(std::istream& in,
                                            ExperimentConfig base);

ExperimentConfig load_config_file(const std::string& path);

/// Echoes the configuration in the same format parse_config reads. Used for
/// the run manifest; contains no paths or timestamps.
void write_config(std::ostream& out, const ExperimentConfig& config);

/// Desk-scale profile: 5,000 clients, 25 federated rounds, 3 repeats.
void apply_fast_profile(ExperimentConfig& config);

}  // namespace shelterfl
