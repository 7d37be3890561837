#pragma once

#include "shelterfl/types.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace shelterfl {

/// Raised when clustering is impossible (< 3 distinct points).
struct DegenerateClustering : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct KMeansResult {
    std::array<Eigen::Vector2d, 3> centroids;
    std::vector<int> assignments;
    double inertia = 0.0;
    int iterations = 0;
    std::vector<double> inertia_trace;  // per Lloyd iteration, winning restart
};

Eigen::MatrixX2d tuples_to_points(std::span<const StayTuple> tuples);

/// Lloyd's algorithm with k = 3 on raw (N_S, N_E) coordinates: k-means++
/// initialization, Euclidean distance, convergence on stable assignments or
/// 300 iterations, best of 10 seeded restarts by inertia.
KMeansResult kmeans3(const Eigen::MatrixX2d& points, std::uint64_t seed);
KMeansResult kmeans3(std::span<const StayTuple> tuples, std::uint64_t seed);

/// Maps three anonymous centroids to roles: chronic takes the largest N_S;
/// of the remaining two, episodic takes the larger N_E. Coordinate ties fall
/// to the candidate with smaller N_E (chronic pick) or larger N_S (episodic
/// pick). Duplicate centroids are rejected.
LabelCentroids assign_roles(const std::array<Eigen::Vector2d, 3>& centroids);

/// Nearest role centroid by Euclidean distance; exact ties resolve in label
/// order (Transitional < Episodic < Chronic).
Label label_with_centroids(const StayTuple& tuple, const LabelCentroids& c);
Label nearest_label(const Eigen::Vector2d& point, const LabelCentroids& c);

/// Per-agency k-means + role assignment, then a dataset-size-weighted mean
/// of the role centroids across agencies (agency-id order). Agencies with
/// fewer than 3 distinct tuples are excluded from the average (their weight
/// redistributes); if every agency is degenerate this throws.
LabelCentroids decentralized_labeling(
    const std::map<std::string, std::vector<StayTuple>>& per_agency,
    std::uint64_t seed);

struct CentralizedLabeling {
    LabelCentroids centroids;
    std::vector<Label> labels;  // aligned with the input tuples
};

/// k-means + role assignment + nearest-centroid labels over the merged data.
CentralizedLabeling centralized_labeling(std::span<const StayTuple> tuples,
                                         std::uint64_t seed);

/// Role-tagged 6-number manifest record, e.g.
/// "centroids: transitional=(a,b) episodic=(c,d) chronic=(e,f)".
std::string format_centroids(const LabelCentroids& c);
LabelCentroids parse_centroids(const std::string& line);

}  // namespace shelterfl
