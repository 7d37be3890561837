#pragma once

#include "shelterfl/types.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

namespace shelterfl {

/// Column-wise z-scoring parameters. Zero-variance columns keep std = 1 so
/// they normalize to exactly zero.
struct NormalizationParams {
    Eigen::VectorXd means;
    Eigen::VectorXd stds;
};

/// Streaming per-column moments (count, sum, sum of squares). This is the
/// only statistic an agency shares for federated z-scoring, and fitting
/// normalization locally goes through the same accumulator so that a
/// single-agency federation matches a centralized fit bit for bit.
struct MomentAccumulator {
    std::int64_t count = 0;
    Eigen::VectorXd sum;
    Eigen::VectorXd sum_sq;

    static MomentAccumulator from_matrix(const Eigen::MatrixXd& x);
    MomentAccumulator& merge(const MomentAccumulator& other);
    NormalizationParams finalize() const;  // population convention (divide by m)
};

/// Number of episodes among the stays that fall in
/// [window_start, window_start + window_days). A gap of `gap` or more days
/// between consecutive in-window stays starts a new episode.
int count_episodes(std::span<const Day> stays, Day window_start,
                   int window_days, int gap = 30);

/// Bin counts over the observation window anchored at the client's first
/// stay, followed by total stays and total episodes in that window. Bin
/// width is floor(T_o / T_b); the last bin extends to the end of the window.
/// The label is left unset.
FeatureVector extract_features(const ClientHistory& history,
                               const WindowConfig& cfg);

/// (N_S, N_E) over [first_day, first_day + T_p).
StayTuple extract_tuple(const ClientHistory& history, const WindowConfig& cfg);

NormalizationParams fit_normalization(const Eigen::MatrixXd& train);
Eigen::MatrixXd apply_normalization(const Eigen::MatrixXd& x,
                                    const NormalizationParams& params);
Eigen::MatrixXd invert_normalization(const Eigen::MatrixXd& z,
                                     const NormalizationParams& params);

/// 80/20-style split stratified on the (agency_id, label) cross-product.
/// Every vector must be labeled. Per stratum the train share is within one
/// client of `train_fraction`; singleton strata go to train. Deterministic
/// given the seed regardless of input order.
std::pair<std::vector<FeatureVector>, std::vector<FeatureVector>>
stratified_split(const std::vector<FeatureVector>& vectors,
                 double train_fraction, std::uint64_t seed);

/// Columnar text export:
/// bin_0,...,bin_{T_b-1},total_stays,total_episodes,label,agency_id,client_id
void write_feature_matrix(std::ostream& out,
                          const std::vector<FeatureVector>& vectors);
std::vector<FeatureVector> read_feature_matrix(std::istream& in);

/// Stacks feature vectors into a row-per-client matrix.
Eigen::MatrixXd stack_features(const std::vector<FeatureVector>& vectors);

}  // namespace shelterfl
