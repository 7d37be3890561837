#include "shelterfl/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <stdexcept>

namespace shelterfl {

// Calendar conversions use Howard Hinnant's civil-date algorithms.
Day day_from_ymd(int year, int month, int day) {
    year -= month <= 2;
    const int era = (year >= 0 ? year : year - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(year - era * 400);
    const unsigned doy =
        (153u * static_cast<unsigned>(month + (month > 2 ? -3 : 9)) + 2u) / 5u +
        static_cast<unsigned>(day) - 1u;
    const unsigned doe = yoe * 365u + yoe / 4u - yoe / 100u + doy;
    return static_cast<Day>(era * 146097 + static_cast<int>(doe) - 719468);
}

void ymd_from_day(Day day, int& year, int& month, int& dom) {
    int z = day + 719468;
    const int era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const int y = static_cast<int>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    dom = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    month = static_cast<int>(mp < 10 ? mp + 3 : mp - 9);
    year = y + (month <= 2);
}

std::string format_day(Day day) {
    int y, m, d;
    ymd_from_day(day, y, m, d);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y, m, d);
    return buf;
}

Day parse_day(std::string_view text) {
    int y = 0, m = 0, d = 0;
    std::string owned(text);
    if (std::sscanf(owned.c_str(), "%d-%d-%d", &y, &m, &d) != 3 || m < 1 ||
        m > 12 || d < 1 || d > 31) {
        throw std::invalid_argument("parse_day: expected YYYY-MM-DD, got '" +
                                    owned + "'");
    }
    const Day result = day_from_ymd(y, m, d);
    int y2, m2, d2;
    ymd_from_day(result, y2, m2, d2);
    if (y2 != y || m2 != m || d2 != d) {
        throw std::invalid_argument("parse_day: invalid calendar day '" + owned +
                                    "'");
    }
    return result;
}

void ClientHistory::validate() const {
    if (client_id.empty()) {
        throw std::invalid_argument("ClientHistory: empty client_id");
    }
    if (stays.empty()) {
        throw std::invalid_argument("ClientHistory: empty stay sequence");
    }
    for (std::size_t i = 1; i < stays.size(); ++i) {
        if (stays[i] <= stays[i - 1]) {
            throw std::invalid_argument(
                "ClientHistory: stays must be strictly increasing");
        }
    }
}

void AgencyDataset::validate() const {
    if (agency_id.empty()) {
        throw std::invalid_argument("AgencyDataset: empty agency_id");
    }
    std::set<std::string> seen;
    for (const auto& client : clients) {
        client.validate();
        if (!seen.insert(client.client_id).second) {
            throw std::invalid_argument("AgencyDataset: duplicate client_id " +
                                        client.client_id);
        }
    }
}

const char* to_string(Label label) {
    switch (label) {
        case Label::Transitional:
            return "transitional";
        case Label::Episodic:
            return "episodic";
        case Label::Chronic:
            return "chronic";
    }
    return "?";
}

Label label_from_string(std::string_view text) {
    for (Label label : kAllLabels) {
        if (text == to_string(label)) {
            return label;
        }
    }
    throw std::invalid_argument("label_from_string: unknown label '" +
                                std::string(text) + "'");
}

void WindowConfig::validate() const {
    if (observation_days < 1 || n_bins < 1 || prediction_days < 1 ||
        episode_gap < 1) {
        throw std::invalid_argument("WindowConfig: all fields must be >= 1");
    }
    if (observation_days > prediction_days) {
        throw std::invalid_argument("WindowConfig: T_o must not exceed T_p");
    }
}

const Eigen::Vector2d& LabelCentroids::of(Label label) const {
    switch (label) {
        case Label::Transitional:
            return transitional;
        case Label::Episodic:
            return episodic;
        case Label::Chronic:
            return chronic;
    }
    return transitional;
}

void LabelCentroids::validate() const {
    const Eigen::Vector2d* cs[3] = {&transitional, &episodic, &chronic};
    for (int i = 0; i < 3; ++i) {
        for (int j = i + 1; j < 3; ++j) {
            if (*cs[i] == *cs[j]) {
                throw std::invalid_argument(
                    "LabelCentroids: centroids must be pairwise distinct");
            }
        }
    }
}

bool ModelParameters::same_shape(const ModelParameters& other) const {
    if (layers.size() != other.layers.size()) {
        return false;
    }
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (layers[i].weights.rows() != other.layers[i].weights.rows() ||
            layers[i].weights.cols() != other.layers[i].weights.cols() ||
            layers[i].bias.size() != other.layers[i].bias.size()) {
            return false;
        }
    }
    return true;
}

bool ModelParameters::all_finite() const {
    for (const auto& layer : layers) {
        if (!layer.weights.allFinite() || !layer.bias.allFinite()) {
            return false;
        }
    }
    return true;
}

std::size_t ModelParameters::scalar_count() const {
    std::size_t n = 0;
    for (const auto& layer : layers) {
        n += static_cast<std::size_t>(layer.weights.size()) +
             static_cast<std::size_t>(layer.bias.size());
    }
    return n;
}

void ModelParameters::axpy(double scale, const ModelParameters& other) {
    if (!same_shape(other)) {
        throw std::invalid_argument("ModelParameters::axpy: shape mismatch");
    }
    for (std::size_t i = 0; i < layers.size(); ++i) {
        layers[i].weights.noalias() += scale * other.layers[i].weights;
        layers[i].bias.noalias() += scale * other.layers[i].bias;
    }
}

void ModelParameters::scale(double factor) {
    for (auto& layer : layers) {
        layer.weights *= factor;
        layer.bias *= factor;
    }
}

void ModelParameters::set_zero() {
    for (auto& layer : layers) {
        layer.weights.setZero();
        layer.bias.setZero();
    }
}

ModelParameters ModelParameters::zeros_like(const ModelParameters& shape) {
    ModelParameters out;
    out.layers.reserve(shape.layers.size());
    for (const auto& layer : shape.layers) {
        out.layers.push_back(
            {Eigen::MatrixXd::Zero(layer.weights.rows(), layer.weights.cols()),
             Eigen::VectorXd::Zero(layer.bias.size())});
    }
    return out;
}

double ModelParameters::max_abs_diff(const ModelParameters& other) const {
    if (!same_shape(other)) {
        throw std::invalid_argument(
            "ModelParameters::max_abs_diff: shape mismatch");
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        worst = std::max(
            worst,
            (layers[i].weights - other.layers[i].weights).cwiseAbs().maxCoeff());
        if (layers[i].bias.size() > 0) {
            worst = std::max(
                worst, (layers[i].bias - other.layers[i].bias).cwiseAbs().maxCoeff());
        }
    }
    return worst;
}

void TrainConfig::validate() const {
    if (!(learning_rate >= 0.0)) {
        throw std::invalid_argument("TrainConfig: learning_rate must be >= 0");
    }
    if (batch_size < 1) {
        throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
    }
    if (epochs < 0) {
        throw std::invalid_argument("TrainConfig: epochs must be >= 0");
    }
    for (double rate : dropout_rates) {
        if (rate < 0.0 || rate >= 1.0) {
            throw std::invalid_argument(
                "TrainConfig: dropout rates must lie in [0, 1)");
        }
    }
}

void FedConfig::validate() const {
    if (rounds < 0) {
        throw std::invalid_argument("FedConfig: rounds must be >= 0");
    }
    if (local_epochs < 1) {
        throw std::invalid_argument("FedConfig: local_epochs must be >= 1");
    }
}

}  // namespace shelterfl
