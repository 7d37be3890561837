#include "shelterfl/features.hpp"

#include "shelterfl/rng.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace shelterfl {

MomentAccumulator MomentAccumulator::from_matrix(const Eigen::MatrixXd& x) {
    MomentAccumulator acc;
    acc.count = x.rows();
    acc.sum = x.colwise().sum();
    acc.sum_sq = x.array().square().colwise().sum();
    return acc;
}

MomentAccumulator& MomentAccumulator::merge(const MomentAccumulator& other) {
    if (count == 0) {
        *this = other;
        return *this;
    }
    if (other.count == 0) {
        return *this;
    }
    if (sum.size() != other.sum.size()) {
        throw std::invalid_argument("MomentAccumulator: dimension mismatch");
    }
    count += other.count;
    sum += other.sum;
    sum_sq += other.sum_sq;
    return *this;
}

NormalizationParams MomentAccumulator::finalize() const {
    if (count <= 0) {
        throw std::invalid_argument("MomentAccumulator: no rows accumulated");
    }
    NormalizationParams params;
    const double m = static_cast<double>(count);
    params.means = sum / m;
    Eigen::VectorXd variance =
        (sum_sq / m - params.means.array().square().matrix()).cwiseMax(0.0);
    params.stds = variance.array().sqrt();
    for (Eigen::Index j = 0; j < params.stds.size(); ++j) {
        if (params.stds[j] == 0.0) {
            params.stds[j] = 1.0;  // zero-variance column normalizes to 0
        }
    }
    return params;
}

int count_episodes(std::span<const Day> stays, Day window_start,
                   int window_days, int gap) {
    const Day window_end = window_start + window_days;
    int episodes = 0;
    bool in_window = false;
    Day prev = 0;
    for (Day day : stays) {
        if (day < window_start || day >= window_end) {
            continue;
        }
        if (!in_window || day - prev >= gap) {
            ++episodes;
        }
        prev = day;
        in_window = true;
    }
    return episodes;
}

FeatureVector extract_features(const ClientHistory& history,
                               const WindowConfig& cfg) {
    cfg.validate();
    history.validate();

    const Day start = history.first_day();
    const int t_o = cfg.observation_days;
    const int t_b = cfg.n_bins;
    const int bin_width = std::max(1, t_o / t_b);

    FeatureVector fv;
    fv.client_id = history.client_id;
    fv.values = Eigen::VectorXd::Zero(cfg.feature_dim());

    int total_stays = 0;
    for (Day day : history.stays) {
        const int offset = day - start;
        if (offset < 0 || offset >= t_o) {
            continue;
        }
        int bin = std::min(offset / bin_width, t_b - 1);
        fv.values[bin] += 1.0;
        ++total_stays;
    }
    fv.values[t_b] = static_cast<double>(total_stays);
    fv.values[t_b + 1] = static_cast<double>(
        count_episodes(history.stays, start, t_o, cfg.episode_gap));
    return fv;
}

StayTuple extract_tuple(const ClientHistory& history, const WindowConfig& cfg) {
    history.validate();
    const Day start = history.first_day();
    const Day end = start + cfg.prediction_days;
    StayTuple tuple;
    for (Day day : history.stays) {
        if (day >= start && day < end) {
            ++tuple.n_stays;
        }
    }
    tuple.n_episodes =
        count_episodes(history.stays, start, cfg.prediction_days, cfg.episode_gap);
    return tuple;
}

NormalizationParams fit_normalization(const Eigen::MatrixXd& train) {
    if (train.rows() == 0) {
        throw std::invalid_argument("fit_normalization: empty training matrix");
    }
    return MomentAccumulator::from_matrix(train).finalize();
}

Eigen::MatrixXd apply_normalization(const Eigen::MatrixXd& x,
                                    const NormalizationParams& params) {
    if (x.cols() != params.means.size()) {
        throw std::invalid_argument("apply_normalization: dimension mismatch");
    }
    return (x.rowwise() - params.means.transpose()).array().rowwise() /
           params.stds.transpose().array();
}

Eigen::MatrixXd invert_normalization(const Eigen::MatrixXd& z,
                                     const NormalizationParams& params) {
    return (z.array().rowwise() * params.stds.transpose().array()).matrix()
               .rowwise() +
           params.means.transpose();
}

std::pair<std::vector<FeatureVector>, std::vector<FeatureVector>>
stratified_split(const std::vector<FeatureVector>& vectors,
                 double train_fraction, std::uint64_t seed) {
    if (vectors.empty()) {
        throw std::invalid_argument("stratified_split: empty input");
    }
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw std::invalid_argument(
            "stratified_split: fraction must lie in (0, 1)");
    }

    // Strata keyed by (agency, label); members sorted by client id so the
    // split is independent of input order.
    std::map<std::pair<std::string, int>, std::vector<std::size_t>> strata;
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        if (!vectors[i].label.has_value()) {
            throw std::invalid_argument("stratified_split: unlabeled vector " +
                                        vectors[i].client_id);
        }
        strata[{vectors[i].agency_id, static_cast<int>(*vectors[i].label)}]
            .push_back(i);
    }

    std::vector<FeatureVector> train, test;
    train.reserve(vectors.size());
    for (auto& [key, members] : strata) {
        std::sort(members.begin(), members.end(),
                  [&](std::size_t a, std::size_t b) {
                      return vectors[a].client_id < vectors[b].client_id;
                  });
        RngStream rng(derive_seed(
            seed, "split/" + key.first + "/" + std::to_string(key.second)));
        rng.shuffle(members);

        const std::size_t n = members.size();
        std::size_t n_train =
            static_cast<std::size_t>(std::llround(train_fraction * n));
        n_train = std::min(n_train, n);
        if (n == 1) {
            n_train = 1;  // singleton stratum goes to train
        }
        for (std::size_t i = 0; i < n; ++i) {
            (i < n_train ? train : test).push_back(vectors[members[i]]);
        }
    }
    return {std::move(train), std::move(test)};
}

void write_feature_matrix(std::ostream& out,
                          const std::vector<FeatureVector>& vectors) {
    if (vectors.empty()) {
        throw std::invalid_argument("write_feature_matrix: empty input");
    }
    const Eigen::Index dim = vectors.front().values.size();
    const Eigen::Index n_bins = dim - 2;
    for (Eigen::Index b = 0; b < n_bins; ++b) {
        out << "bin_" << b << ',';
    }
    out << "total_stays,total_episodes,label,agency_id,client_id\n";
    char buf[32];
    for (const auto& fv : vectors) {
        if (fv.values.size() != dim) {
            throw std::invalid_argument(
                "write_feature_matrix: inconsistent dimensions");
        }
        for (Eigen::Index j = 0; j < dim; ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", fv.values[j]);
            out << buf << ',';
        }
        out << (fv.label ? to_string(*fv.label) : "unset") << ','
            << fv.agency_id << ',' << fv.client_id << '\n';
    }
}

std::vector<FeatureVector> read_feature_matrix(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw std::invalid_argument("feature matrix: missing header");
    }
    std::size_t n_fields = 1 + static_cast<std::size_t>(std::count(
                                   line.begin(), line.end(), ','));
    if (n_fields < 6) {
        throw std::invalid_argument("feature matrix: malformed header");
    }
    const std::size_t dim = n_fields - 3;

    std::vector<FeatureVector> vectors;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> fields;
        std::string field;
        std::stringstream ss(line);
        while (std::getline(ss, field, ',')) {
            fields.push_back(field);
        }
        if (fields.size() != n_fields) {
            throw std::invalid_argument("feature matrix: malformed line '" +
                                        line + "'");
        }
        FeatureVector fv;
        fv.values.resize(static_cast<Eigen::Index>(dim));
        for (std::size_t j = 0; j < dim; ++j) {
            fv.values[static_cast<Eigen::Index>(j)] = std::stod(fields[j]);
        }
        if (fields[dim] != "unset") {
            fv.label = label_from_string(fields[dim]);
        }
        fv.agency_id = fields[dim + 1];
        fv.client_id = fields[dim + 2];
        vectors.push_back(std::move(fv));
    }
    return vectors;
}

Eigen::MatrixXd stack_features(const std::vector<FeatureVector>& vectors) {
    if (vectors.empty()) {
        return Eigen::MatrixXd(0, 0);
    }
    Eigen::MatrixXd x(static_cast<Eigen::Index>(vectors.size()),
                      vectors.front().values.size());
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        if (vectors[i].values.size() != x.cols()) {
            throw std::invalid_argument("stack_features: inconsistent dims");
        }
        x.row(static_cast<Eigen::Index>(i)) = vectors[i].values.transpose();
    }
    return x;
}

}  // namespace shelterfl
