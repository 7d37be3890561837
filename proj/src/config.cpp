#include "shelterfl/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace shelterfl {

namespace {

std::string trim(const std::string& text) {
    const auto begin = text.find_first_not_of(" \t\r");
    if (begin == std::string::npos) {
        return "";
    }
    const auto end = text.find_last_not_of(" \t\r");
    return text.substr(begin, end - begin + 1);
}

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, sep)) {
        parts.push_back(trim(part));
    }
    return parts;
}

double to_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double parsed = std::stod(value, &used);
        if (used != value.size()) {
            throw std::invalid_argument(value);
        }
        return parsed;
    } catch (const std::exception&) {
        throw ConfigError("config: bad numeric value for " + key + ": '" +
                          value + "'");
    }
}

long long to_int(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const long long parsed = std::stoll(value, &used);
        if (used != value.size()) {
            throw std::invalid_argument(value);
        }
        return parsed;
    } catch (const std::exception&) {
        throw ConfigError("config: bad integer value for " + key + ": '" +
                          value + "'");
    }
}

bool to_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") {
        return true;
    }
    if (value == "false" || value == "0") {
        return false;
    }
    throw ConfigError("config: bad boolean value for " + key + ": '" + value +
                      "'");
}

std::vector<int> to_int_list(const std::string& key, const std::string& value) {
    std::vector<int> out;
    for (const auto& part : split(value, ',')) {
        out.push_back(static_cast<int>(to_int(key, part)));
    }
    if (out.empty()) {
        throw ConfigError("config: empty list for " + key);
    }
    return out;
}

StayClassParams& class_params_for(ExperimentConfig& config,
                                  const std::string& section) {
    if (section == "class.transitional") {
        return config.cohort.class_params[0];
    }
    if (section == "class.episodic") {
        return config.cohort.class_params[1];
    }
    return config.cohort.class_params[2];
}

void apply_class_key(StayClassParams& params, const std::string& key,
                     const std::string& value) {
    if (key == "min_runs") {
        params.min_runs = static_cast<int>(to_int(key, value));
    } else if (key == "max_runs") {
        params.max_runs = static_cast<int>(to_int(key, value));
    } else if (key == "run_length_mean") {
        params.run_length_mean = to_double(key, value);
    } else if (key == "gap_extra_mean") {
        params.gap_extra_mean = to_double(key, value);
    } else if (key == "presence_prob") {
        params.presence_prob = to_double(key, value);
    } else if (key == "total_days_mean") {
        params.total_days_mean = to_double(key, value);
    } else if (key == "total_days_std") {
        params.total_days_std = to_double(key, value);
    } else if (key == "relapse_prob") {
        params.relapse_prob = to_double(key, value);
    } else if (key == "relapse_min_runs") {
        params.relapse_min_runs = static_cast<int>(to_int(key, value));
    } else if (key == "relapse_max_runs") {
        params.relapse_max_runs = static_cast<int>(to_int(key, value));
    } else if (key == "relapse_run_mean") {
        params.relapse_run_mean = to_double(key, value);
    } else if (key == "relapse_earliest_day") {
        params.relapse_earliest_day = static_cast<int>(to_int(key, value));
    } else {
        throw ConfigError("config: unknown class key '" + key + "'");
    }
}

void apply_key(ExperimentConfig& config, const std::string& section,
               const std::string& key, const std::string& value) {
    if (section == "cohort") {
        if (key == "n_clients") {
            config.cohort.n_clients = static_cast<int>(to_int(key, value));
        } else if (key == "class_mix") {
            const auto parts = split(value, ',');
            if (parts.size() != 3) {
                throw ConfigError("config: class_mix needs 3 values");
            }
            for (int i = 0; i < 3; ++i) {
                config.cohort.class_mix[static_cast<std::size_t>(i)] =
                    to_double(key, parts[static_cast<std::size_t>(i)]);
            }
        } else if (key == "agencies") {
            config.cohort.agency_weights.clear();
            for (const auto& part : split(value, ',')) {
                const auto colon = part.find(':');
                if (colon == std::string::npos) {
                    throw ConfigError("config: agencies entries are id:weight");
                }
                config.cohort.agency_weights.emplace_back(
                    trim(part.substr(0, colon)),
                    to_double(key, trim(part.substr(colon + 1))));
            }
        } else if (key == "agencies_per_client") {
            const auto parts = split(value, ',');
            if (parts.size() != 3) {
                throw ConfigError("config: agencies_per_client needs 3 values");
            }
            for (int i = 0; i < 3; ++i) {
                config.cohort.agencies_per_client[static_cast<std::size_t>(i)] =
                    to_double(key, parts[static_cast<std::size_t>(i)]);
            }
        } else if (key == "horizon_days") {
            config.cohort.horizon_days = static_cast<int>(to_int(key, value));
        } else if (key == "entry_offset_max_days") {
            config.cohort.entry_offset_max_days =
                static_cast<int>(to_int(key, value));
        } else if (key == "start_date") {
            config.cohort.start_date = parse_day(value);
        } else if (key == "data_path") {
            config.data_path = value;
        } else {
            throw ConfigError("config: unknown [cohort] key '" + key + "'");
        }
    } else if (section == "class.transitional" || section == "class.episodic" ||
               section == "class.chronic") {
        apply_class_key(class_params_for(config, section), key, value);
    } else if (section == "window") {
        if (key == "observation_days") {
            config.window.observation_days = static_cast<int>(to_int(key, value));
        } else if (key == "n_bins") {
            config.window.n_bins = static_cast<int>(to_int(key, value));
        } else if (key == "prediction_days") {
            config.window.prediction_days = static_cast<int>(to_int(key, value));
        } else if (key == "episode_gap") {
            config.window.episode_gap = static_cast<int>(to_int(key, value));
        } else {
            throw ConfigError("config: unknown [window] key '" + key + "'");
        }
    } else if (section == "sweep") {
        if (key == "observation_days") {
            config.sweep_observation = to_int_list(key, value);
        } else if (key == "n_bins") {
            config.sweep_bins = to_int_list(key, value);
        } else if (key == "prediction_days") {
            config.sweep_prediction = to_int_list(key, value);
        } else if (key == "epochs") {
            config.sweep_epochs = static_cast<int>(to_int(key, value));
        } else {
            throw ConfigError("config: unknown [sweep] key '" + key + "'");
        }
    } else if (section == "train") {
        if (key == "learning_rate") {
            config.train.learning_rate = to_double(key, value);
        } else if (key == "batch_size") {
            config.train.batch_size = static_cast<int>(to_int(key, value));
        } else if (key == "epochs") {
            config.train.epochs = static_cast<int>(to_int(key, value));
        } else if (key == "dropout_rates") {
            const auto parts = split(value, ',');
            if (parts.size() != 3) {
                throw ConfigError("config: dropout_rates needs 3 values");
            }
            for (int i = 0; i < 3; ++i) {
                config.train.dropout_rates[static_cast<std::size_t>(i)] =
                    to_double(key, parts[static_cast<std::size_t>(i)]);
            }
        } else if (key == "adam_beta1") {
            config.train.adam_beta1 = to_double(key, value);
        } else if (key == "adam_beta2") {
            config.train.adam_beta2 = to_double(key, value);
        } else if (key == "adam_epsilon") {
            config.train.adam_epsilon = to_double(key, value);
        } else if (key == "output_activation") {
            if (value == "softmax") {
                config.train.output_activation = OutputActivation::Softmax;
            } else if (value == "sigmoid-normalized") {
                config.train.output_activation =
                    OutputActivation::SigmoidNormalized;
            } else {
                throw ConfigError(
                    "config: output_activation must be softmax or "
                    "sigmoid-normalized");
            }
        } else if (key == "use_float32") {
            config.train.use_float32 = to_bool(key, value);
        } else {
            throw ConfigError("config: unknown [train] key '" + key + "'");
        }
    } else if (section == "fed") {
        if (key == "rounds") {
            config.fed.rounds = static_cast<int>(to_int(key, value));
        } else if (key == "local_epochs") {
            config.fed.local_epochs = static_cast<int>(to_int(key, value));
        } else if (key == "agencies") {
            config.fed.agencies = split(value, ',');
        } else {
            throw ConfigError("config: unknown [fed] key '" + key + "'");
        }
    } else if (section == "run") {
        if (key == "scenarios") {
            config.scenarios = value;
        } else if (key == "repeats") {
            config.repeats = static_cast<int>(to_int(key, value));
        } else if (key == "seed") {
            config.master_seed = static_cast<std::uint64_t>(to_int(key, value));
        } else if (key == "round_metrics_every") {
            config.round_metrics_every = static_cast<int>(to_int(key, value));
        } else if (key == "max_parallel") {
            config.max_parallel = static_cast<int>(to_int(key, value));
        } else {
            throw ConfigError("config: unknown [run] key '" + key + "'");
        }
    } else {
        throw ConfigError("config: unknown section [" + section + "]");
    }
}

}  // namespace

void ExperimentConfig::validate() const {
    try {
        cohort.validate();
        window.validate();
        train.validate();
        fed.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    if (sweep_observation.empty() || sweep_bins.empty() ||
        sweep_prediction.empty()) {
        throw ConfigError("config: sweep grid must be non-empty");
    }
    if (scenarios != "all" && scenarios != "central" &&
        scenarios != "federated" && scenarios != "isolated") {
        throw ConfigError(
            "config: scenarios must be central, federated, isolated or all");
    }
    if (repeats < 1) {
        throw ConfigError("config: repeats must be >= 1");
    }
    if (max_parallel < 1) {
        throw ConfigError("config: max_parallel must be >= 1");
    }
    if (cohort.horizon_days < window.prediction_days) {
        throw ConfigError("config: horizon_days must cover prediction_days");
    }
    for (int t_p : sweep_prediction) {
        if (cohort.horizon_days < t_p) {
            throw ConfigError(
                "config: horizon_days must cover every sweep prediction window");
        }
    }
}

ExperimentConfig parse_config(std::istream& in) {
    return parse_config_with_defaults(in, ExperimentConfig{});
}

ExperimentConfig parse_config_with_defaults(std::istream& in,
                                            ExperimentConfig base) {
    ExperimentConfig config = std::move(base);
    std::string line;
    std::string section;
    int line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        const std::string text = trim(line);
        if (text.empty() || text[0] == '#' || text[0] == ';') {
            continue;
        }
        if (text.front() == '[') {
            if (text.back() != ']') {
                throw ConfigError("config line " + std::to_string(line_number) +
                                  ": malformed section header");
            }
            section = trim(text.substr(1, text.size() - 2));
            continue;
        }
        const auto eq = text.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(line_number) +
                              ": expected key = value");
        }
        const std::string key = trim(text.substr(0, eq));
        const std::string value = trim(text.substr(eq + 1));
        if (section.empty()) {
            throw ConfigError("config line " + std::to_string(line_number) +
                              ": key outside any section");
        }
        apply_key(config, section, key, value);
    }
    config.validate();
    return config;
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("config: cannot open " + path);
    }
    return parse_config(in);
}

namespace {

std::string format_double(double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

void write_class_params(std::ostream& out, const char* name,
                        const StayClassParams& p) {
    out << "[class." << name << "]\n";
    out << "min_runs = " << p.min_runs << '\n';
    out << "max_runs = " << p.max_runs << '\n';
    out << "run_length_mean = " << format_double(p.run_length_mean) << '\n';
    out << "gap_extra_mean = " << format_double(p.gap_extra_mean) << '\n';
    out << "presence_prob = " << format_double(p.presence_prob) << '\n';
    out << "total_days_mean = " << format_double(p.total_days_mean) << '\n';
    out << "total_days_std = " << format_double(p.total_days_std) << '\n';
    out << "relapse_prob = " << format_double(p.relapse_prob) << '\n';
    out << "relapse_min_runs = " << p.relapse_min_runs << '\n';
    out << "relapse_max_runs = " << p.relapse_max_runs << '\n';
    out << "relapse_run_mean = " << format_double(p.relapse_run_mean) << '\n';
    out << "relapse_earliest_day = " << p.relapse_earliest_day << '\n';
    out << '\n';
}

template <typename T>
std::string join(const std::vector<T>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i > 0) {
            out += ',';
        }
        out += std::to_string(values[i]);
    }
    return out;
}

}  // namespace

void write_config(std::ostream& out, const ExperimentConfig& config) {
    out << "[cohort]\n";
    out << "n_clients = " << config.cohort.n_clients << '\n';
    out << "class_mix = " << format_double(config.cohort.class_mix[0]) << ','
        << format_double(config.cohort.class_mix[1]) << ','
        << format_double(config.cohort.class_mix[2]) << '\n';
    out << "agencies = ";
    for (std::size_t i = 0; i < config.cohort.agency_weights.size(); ++i) {
        if (i > 0) {
            out << ',';
        }
        out << config.cohort.agency_weights[i].first << ':'
            << format_double(config.cohort.agency_weights[i].second);
    }
    out << '\n';
    out << "agencies_per_client = "
        << format_double(config.cohort.agencies_per_client[0]) << ','
        << format_double(config.cohort.agencies_per_client[1]) << ','
        << format_double(config.cohort.agencies_per_client[2]) << '\n';
    out << "horizon_days = " << config.cohort.horizon_days << '\n';
    out << "entry_offset_max_days = " << config.cohort.entry_offset_max_days
        << '\n';
    out << "start_date = " << format_day(config.cohort.start_date) << '\n';
    if (!config.data_path.empty()) {
        out << "data_path = " << config.data_path << '\n';
    }
    out << '\n';
    write_class_params(out, "transitional", config.cohort.class_params[0]);
    write_class_params(out, "episodic", config.cohort.class_params[1]);
    write_class_params(out, "chronic", config.cohort.class_params[2]);
    out << "[window]\n";
    out << "observation_days = " << config.window.observation_days << '\n';
    out << "n_bins = " << config.window.n_bins << '\n';
    out << "prediction_days = " << config.window.prediction_days << '\n';
    out << "episode_gap = " << config.window.episode_gap << '\n';
    out << '\n';
    out << "[sweep]\n";
    out << "observation_days = " << join(config.sweep_observation) << '\n';
    out << "n_bins = " << join(config.sweep_bins) << '\n';
    out << "prediction_days = " << join(config.sweep_prediction) << '\n';
    out << "epochs = " << config.sweep_epochs << '\n';
    out << '\n';
    out << "[train]\n";
    out << "learning_rate = " << format_double(config.train.learning_rate)
        << '\n';
    out << "batch_size = " << config.train.batch_size << '\n';
    out << "epochs = " << config.train.epochs << '\n';
    out << "dropout_rates = " << format_double(config.train.dropout_rates[0])
        << ',' << format_double(config.train.dropout_rates[1]) << ','
        << format_double(config.train.dropout_rates[2]) << '\n';
    out << "adam_beta1 = " << format_double(config.train.adam_beta1) << '\n';
    out << "adam_beta2 = " << format_double(config.train.adam_beta2) << '\n';
    out << "adam_epsilon = " << format_double(config.train.adam_epsilon) << '\n';
    out << "output_activation = "
        << (config.train.output_activation == OutputActivation::Softmax
                ? "softmax"
                : "sigmoid-normalized")
        << '\n';
    out << "use_float32 = " << (config.train.use_float32 ? "true" : "false")
        << '\n';
    out << '\n';
    out << "[fed]\n";
    out << "rounds = " << config.fed.rounds << '\n';
    out << "local_epochs = " << config.fed.local_epochs << '\n';
    if (!config.fed.agencies.empty()) {
        out << "agencies = " << [&] {
            std::string joined;
            for (std::size_t i = 0; i < config.fed.agencies.size(); ++i) {
                if (i > 0) {
                    joined += ',';
                }
                joined += config.fed.agencies[i];
            }
            return joined;
        }() << '\n';
    }
    out << '\n';
    out << "[run]\n";
    out << "scenarios = " << config.scenarios << '\n';
    out << "repeats = " << config.repeats << '\n';
    out << "seed = " << config.master_seed << '\n';
    out << "round_metrics_every = " << config.round_metrics_every << '\n';
    out << "max_parallel = " << config.max_parallel << '\n';
}

void apply_fast_profile(ExperimentConfig& config) {
    config.cohort.n_clients = 5000;
    config.fed.rounds = 25;
    config.repeats = 3;
}

}  // namespace shelterfl
