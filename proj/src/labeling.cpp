#include "shelterfl/labeling.hpp"

#include "shelterfl/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>

namespace shelterfl {

namespace {

constexpr int kClusters = 3;
constexpr int kMaxIterations = 300;
constexpr int kRestarts = 10;

int count_distinct(const Eigen::MatrixX2d& points) {
    std::set<std::pair<double, double>> distinct;
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        distinct.insert({points(i, 0), points(i, 1)});
        if (distinct.size() >= kClusters) {
            return kClusters;
        }
    }
    return static_cast<int>(distinct.size());
}

std::array<Eigen::Vector2d, 3> kmeanspp_init(const Eigen::MatrixX2d& points,
                                             RngStream& rng) {
    const Eigen::Index n = points.rows();
    std::array<Eigen::Vector2d, 3> centroids;
    centroids[0] = points.row(static_cast<Eigen::Index>(
        rng.uniform_int(static_cast<std::uint64_t>(n))));

    Eigen::VectorXd dist_sq =
        (points.rowwise() - centroids[0].transpose()).rowwise().squaredNorm();
    for (int c = 1; c < kClusters; ++c) {
        const double total = dist_sq.sum();
        Eigen::Index pick = 0;
        if (total > 0.0) {
            double x = rng.next_double() * total;
            for (Eigen::Index i = 0; i < n; ++i) {
                x -= dist_sq[i];
                if (x < 0.0) {
                    pick = i;
                    break;
                }
                pick = i;
            }
        } else {
            pick = static_cast<Eigen::Index>(
                rng.uniform_int(static_cast<std::uint64_t>(n)));
        }
        centroids[c] = points.row(pick);
        if (c + 1 < kClusters) {
            dist_sq = dist_sq.cwiseMin(
                (points.rowwise() - centroids[c].transpose())
                    .rowwise()
                    .squaredNorm());
        }
    }
    return centroids;
}

struct LloydOutcome {
    std::array<Eigen::Vector2d, 3> centroids;
    std::vector<int> assignments;
    double inertia;
    int iterations;
    std::vector<double> inertia_trace;
};

LloydOutcome lloyd(const Eigen::MatrixX2d& points,
                   std::array<Eigen::Vector2d, 3> centroids) {
    const Eigen::Index n = points.rows();
    std::vector<int> assignments(static_cast<std::size_t>(n), -1);
    double inertia = 0.0;
    int iterations = 0;
    std::vector<double> trace;

    for (int iter = 1; iter <= kMaxIterations; ++iter) {
        iterations = iter;
        bool changed = false;
        inertia = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            int best_c = 0;
            for (int c = 0; c < kClusters; ++c) {
                const double d =
                    (points.row(i).transpose() - centroids[c]).squaredNorm();
                if (d < best) {
                    best = d;
                    best_c = c;
                }
            }
            if (assignments[static_cast<std::size_t>(i)] != best_c) {
                assignments[static_cast<std::size_t>(i)] = best_c;
                changed = true;
            }
            inertia += best;
        }
        trace.push_back(inertia);
        if (!changed || iter == kMaxIterations) {
            break;  // centroids stay consistent with assignments and inertia
        }

        std::array<Eigen::Vector2d, 3> sums;
        std::array<Eigen::Index, 3> counts{};
        sums.fill(Eigen::Vector2d::Zero());
        for (Eigen::Index i = 0; i < n; ++i) {
            sums[static_cast<std::size_t>(assignments[static_cast<std::size_t>(i)])] +=
                points.row(i).transpose();
            ++counts[static_cast<std::size_t>(
                assignments[static_cast<std::size_t>(i)])];
        }
        for (int c = 0; c < kClusters; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0) {
                centroids[c] = sums[static_cast<std::size_t>(c)] /
                               static_cast<double>(counts[static_cast<std::size_t>(c)]);
            } else {
                // Empty cluster: reseed at the point farthest from its centroid.
                double worst = -1.0;
                Eigen::Index worst_i = 0;
                for (Eigen::Index i = 0; i < n; ++i) {
                    const int a = assignments[static_cast<std::size_t>(i)];
                    const double d =
                        (points.row(i).transpose() - centroids[a]).squaredNorm();
                    if (d > worst) {
                        worst = d;
                        worst_i = i;
                    }
                }
                centroids[c] = points.row(worst_i);
            }
        }
    }
    return {centroids, std::move(assignments), inertia, iterations,
            std::move(trace)};
}

}  // namespace

Eigen::MatrixX2d tuples_to_points(std::span<const StayTuple> tuples) {
    Eigen::MatrixX2d points(static_cast<Eigen::Index>(tuples.size()), 2);
    for (std::size_t i = 0; i < tuples.size(); ++i) {
        points(static_cast<Eigen::Index>(i), 0) = tuples[i].n_stays;
        points(static_cast<Eigen::Index>(i), 1) = tuples[i].n_episodes;
    }
    return points;
}

KMeansResult kmeans3(const Eigen::MatrixX2d& points, std::uint64_t seed) {
    if (count_distinct(points) < kClusters) {
        throw DegenerateClustering(
            "kmeans3: need at least 3 distinct points, got " +
            std::to_string(count_distinct(points)));
    }

    KMeansResult best;
    best.inertia = std::numeric_limits<double>::infinity();
    for (int restart = 0; restart < kRestarts; ++restart) {
        RngStream rng(derive_seed(seed, "kmeans/restart-" + std::to_string(restart)));
        auto outcome = lloyd(points, kmeanspp_init(points, rng));
        if (outcome.inertia < best.inertia) {
            best.centroids = outcome.centroids;
            best.assignments = std::move(outcome.assignments);
            best.inertia = outcome.inertia;
            best.iterations = outcome.iterations;
            best.inertia_trace = std::move(outcome.inertia_trace);
        }
    }
    return best;
}

KMeansResult kmeans3(std::span<const StayTuple> tuples, std::uint64_t seed) {
    return kmeans3(tuples_to_points(tuples), seed);
}

LabelCentroids assign_roles(const std::array<Eigen::Vector2d, 3>& centroids) {
    for (int i = 0; i < 3; ++i) {
        for (int j = i + 1; j < 3; ++j) {
            if (centroids[static_cast<std::size_t>(i)] ==
                centroids[static_cast<std::size_t>(j)]) {
                throw std::invalid_argument("assign_roles: duplicate centroids");
            }
        }
    }

    // Chronic: max N_S, ties to smaller N_E (more chronic-like).
    int chronic = 0;
    for (int c = 1; c < 3; ++c) {
        const auto& cur = centroids[static_cast<std::size_t>(c)];
        const auto& best = centroids[static_cast<std::size_t>(chronic)];
        if (cur.x() > best.x() || (cur.x() == best.x() && cur.y() < best.y())) {
            chronic = c;
        }
    }
    // Episodic: max N_E among the rest, ties to larger N_S.
    int episodic = -1;
    for (int c = 0; c < 3; ++c) {
        if (c == chronic) {
            continue;
        }
        if (episodic < 0) {
            episodic = c;
            continue;
        }
        const auto& cur = centroids[static_cast<std::size_t>(c)];
        const auto& best = centroids[static_cast<std::size_t>(episodic)];
        if (cur.y() > best.y() || (cur.y() == best.y() && cur.x() > best.x())) {
            episodic = c;
        }
    }
    const int transitional = 3 - chronic - episodic;

    LabelCentroids roles;
    roles.chronic = centroids[static_cast<std::size_t>(chronic)];
    roles.episodic = centroids[static_cast<std::size_t>(episodic)];
    roles.transitional = centroids[static_cast<std::size_t>(transitional)];
    return roles;
}

Label nearest_label(const Eigen::Vector2d& point, const LabelCentroids& c) {
    Label best = Label::Transitional;
    double best_d = std::numeric_limits<double>::infinity();
    for (Label label : kAllLabels) {
        const double d = (point - c.of(label)).squaredNorm();
        if (d < best_d) {  // strict: ties keep the earlier label
            best_d = d;
            best = label;
        }
    }
    return best;
}

Label label_with_centroids(const StayTuple& tuple, const LabelCentroids& c) {
    return nearest_label(Eigen::Vector2d(tuple.n_stays, tuple.n_episodes), c);
}

LabelCentroids decentralized_labeling(
    const std::map<std::string, std::vector<StayTuple>>& per_agency,
    std::uint64_t seed) {
    if (per_agency.empty()) {
        throw std::invalid_argument("decentralized_labeling: no agencies");
    }

    // Per-agency role centroids with dataset sizes; degenerate agencies are
    // skipped so their weight redistributes across the rest.
    std::vector<std::pair<double, LabelCentroids>> locals;
    double total_weight = 0.0;
    for (const auto& [agency_id, tuples] : per_agency) {
        try {
            auto result = kmeans3(tuples, derive_seed(seed, "agency/" + agency_id));
            locals.emplace_back(static_cast<double>(tuples.size()),
                                assign_roles(result.centroids));
            total_weight += static_cast<double>(tuples.size());
        } catch (const DegenerateClustering&) {
            continue;
        }
    }
    if (locals.empty()) {
        throw DegenerateClustering(
            "decentralized_labeling: every agency is degenerate");
    }

    LabelCentroids global;
    global.transitional.setZero();
    global.episodic.setZero();
    global.chronic.setZero();
    for (const auto& [weight, local] : locals) {
        const double w = weight / total_weight;
        global.transitional += w * local.transitional;
        global.episodic += w * local.episodic;
        global.chronic += w * local.chronic;
    }
    return global;
}

CentralizedLabeling centralized_labeling(std::span<const StayTuple> tuples,
                                         std::uint64_t seed) {
    auto result = kmeans3(tuples, seed);
    CentralizedLabeling out;
    out.centroids = assign_roles(result.centroids);
    out.labels.reserve(tuples.size());
    for (const auto& tuple : tuples) {
        out.labels.push_back(label_with_centroids(tuple, out.centroids));
    }
    return out;
}

std::string format_centroids(const LabelCentroids& c) {
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "centroids: transitional=(%.17g,%.17g) episodic=(%.17g,%.17g) "
                  "chronic=(%.17g,%.17g)",
                  c.transitional.x(), c.transitional.y(), c.episodic.x(),
                  c.episodic.y(), c.chronic.x(), c.chronic.y());
    return buf;
}

LabelCentroids parse_centroids(const std::string& line) {
    LabelCentroids c;
    double tx, ty, ex, ey, cx, cy;
    if (std::sscanf(line.c_str(),
                    "centroids: transitional=(%lg,%lg) episodic=(%lg,%lg) "
                    "chronic=(%lg,%lg)",
                    &tx, &ty, &ex, &ey, &cx, &cy) != 6) {
        throw std::invalid_argument("parse_centroids: malformed line '" + line +
                                    "'");
    }
    c.transitional = {tx, ty};
    c.episodic = {ex, ey};
    c.chronic = {cx, cy};
    return c;
}

}  // namespace shelterfl
