#pragma once

#include "shelterfl/rng.hpp"
#include "shelterfl/types.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace shelterfl {

/// Stay-process parameters for one pattern class. A client is a sequence of
/// nominal stay runs (contiguous day blocks realized with a per-day presence
/// probability) separated by gaps of at least the episode threshold.
struct StayClassParams {
    int min_runs = 1;
    int max_runs = 1;
    double run_length_mean = 12.0;   // geometric unless total_days_mean > 0
    double gap_extra_mean = 45.0;    // mean days beyond the 30-day minimum
    double presence_prob = 0.9;

    /// When > 0, a total-stay budget is drawn (normal, clamped) and split
    /// evenly across the runs instead of drawing run lengths independently.
    double total_days_mean = 0.0;
    double total_days_std = 0.0;

    /// Probability of extra late runs (relapse) no earlier than
    /// relapse_earliest_day; they stay clear of every observation window.
    double relapse_prob = 0.0;
    int relapse_min_runs = 1;
    int relapse_max_runs = 2;
    double relapse_run_mean = 6.0;
    int relapse_earliest_day = 150;
};

/// Cohort-level controls for the synthetic multi-agency generator.
struct CohortSpec {
    int n_clients = 50000;
    std::array<double, 3> class_mix = {0.85, 0.09, 0.06};  // label order
    std::vector<std::pair<std::string, double>> agency_weights;  // sums to 1
    int horizon_days = 975;
    std::array<StayClassParams, 3> class_params;  // label order
    /// P(client's home multiset has 1, 2, 3 agencies).
    std::array<double, 3> agencies_per_client = {0.70, 0.22, 0.08};
    Day start_date = 14245;            // 2009-01-01
    int entry_offset_max_days = 365;   // uniform cohort-entry jitter
    std::uint64_t seed = 0;

    CohortSpec();  // fills default class params and 8-agency skewed weights
    void validate() const;
};

/// Full stay sequence for one client over [entry, entry + horizon_days).
/// The process is truncated silently if the drawn runs overrun the horizon.
ClientHistory gen_client(const CohortSpec& spec, Label true_class,
                         RngStream& rng);

struct Cohort {
    CohortView linked;                   // per agency, keyed by global ids
    std::map<std::string, Label> truth;  // harness-only sidecar
};

/// Deterministic cohort draw: every client gets a true class, a home agency
/// multiset (1-3 agencies) and a full history whose stay days are attributed
/// uniformly across the client's home agencies.
Cohort gen_cohort(const CohortSpec& spec);

struct UnlinkResult {
    CohortView unlinked;  // fresh per-(client, agency) ids
    /// unlinked id -> global id; retained only by the evaluation harness for
    /// label synchronization, never handed to training code.
    std::map<std::string, std::string> provenance;
};

/// Re-keys every (client, agency) pair with >= 1 stay under a fresh id local
/// to that pair; each agency keeps exactly the stays that happened there.
UnlinkResult unlink(const CohortView& linked);

/// Linked histories merged across agencies, sorted by client id.
std::vector<ClientHistory> merged_histories(const CohortView& view);

std::vector<std::pair<std::string, Label>> truth_rows(const Cohort& cohort);

}  // namespace shelterfl
