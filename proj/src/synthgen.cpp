#include "shelterfl/synthgen.hpp"

#include "shelterfl/stay_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <stdexcept>

namespace shelterfl {

namespace {

constexpr int kEpisodeGap = 30;

StayClassParams default_transitional() {
    StayClassParams p;
    p.min_runs = 1;
    p.max_runs = 1;
    p.run_length_mean = 12.0;
    p.relapse_prob = 0.18;
    p.relapse_min_runs = 1;
    p.relapse_max_runs = 2;
    p.relapse_run_mean = 6.0;
    p.relapse_earliest_day = 150;
    return p;
}

StayClassParams default_episodic() {
    StayClassParams p;
    p.min_runs = 5;
    p.max_runs = 8;
    p.run_length_mean = 8.0;
    p.gap_extra_mean = 32.0;
    return p;
}

StayClassParams default_chronic() {
    StayClassParams p;
    p.min_runs = 1;
    p.max_runs = 3;
    p.gap_extra_mean = 12.0;
    p.total_days_mean = 333.0;
    p.total_days_std = 55.0;
    return p;
}

// Unlinked-count skew shaped like an 8-agency system with one dominant
// agency, several mid-size ones, two small and one tiny.
std::vector<std::pair<std::string, double>> default_agency_weights() {
    return {{"a004", 0.0305}, {"a013", 0.0902}, {"a055", 0.1535},
            {"a188", 0.1925}, {"a213", 0.0037}, {"a225", 0.0154},
            {"a330", 0.3645}, {"a333", 0.1497}};
}

}  // namespace

CohortSpec::CohortSpec() {
    agency_weights = default_agency_weights();
    class_params = {default_transitional(), default_episodic(),
                    default_chronic()};
}

void CohortSpec::validate() const {
    if (n_clients < 0) {
        throw std::invalid_argument("CohortSpec: n_clients must be >= 0");
    }
    double mix = 0.0;
    for (double p : class_mix) {
        if (p < 0.0) {
            throw std::invalid_argument("CohortSpec: negative class mix entry");
        }
        mix += p;
    }
    if (std::abs(mix - 1.0) > 1e-9) {
        throw std::invalid_argument("CohortSpec: class_mix must sum to 1");
    }
    if (agency_weights.empty()) {
        throw std::invalid_argument("CohortSpec: no agencies");
    }
    double wsum = 0.0;
    std::set<std::string> ids;
    for (const auto& [agency_id, weight] : agency_weights) {
        if (agency_id.empty() || weight < 0.0) {
            throw std::invalid_argument("CohortSpec: bad agency weight entry");
        }
        if (!ids.insert(agency_id).second) {
            throw std::invalid_argument("CohortSpec: duplicate agency id " +
                                        agency_id);
        }
        wsum += weight;
    }
    if (std::abs(wsum - 1.0) > 1e-9) {
        throw std::invalid_argument("CohortSpec: agency_weights must sum to 1");
    }
    if (horizon_days < 1) {
        throw std::invalid_argument("CohortSpec: horizon_days must be >= 1");
    }
    double psum = 0.0;
    for (double p : agencies_per_client) {
        if (p < 0.0) {
            throw std::invalid_argument(
                "CohortSpec: negative agencies_per_client entry");
        }
        psum += p;
    }
    if (std::abs(psum - 1.0) > 1e-9) {
        throw std::invalid_argument(
            "CohortSpec: agencies_per_client must sum to 1");
    }
    if (entry_offset_max_days < 0) {
        throw std::invalid_argument(
            "CohortSpec: entry_offset_max_days must be >= 0");
    }
}

namespace {

struct NominalRun {
    int start = 0;
    int length = 0;
};

int draw_run_length(const StayClassParams& p, RngStream& rng) {
    return static_cast<int>(rng.geometric(p.run_length_mean));
}

// Lays out `n_runs` nominal runs from day 0 with inter-run gaps of at least
// the episode threshold; runs that would start past the horizon are dropped.
void layout_runs(std::vector<NominalRun>& runs, int n_runs,
                 const StayClassParams& p, int horizon,
                 const std::vector<int>& lengths, RngStream& rng) {
    int cursor = 0;
    for (int r = 0; r < n_runs; ++r) {
        if (r > 0) {
            cursor += kEpisodeGap +
                      static_cast<int>(rng.geometric(p.gap_extra_mean)) - 1;
        }
        if (cursor >= horizon) {
            break;  // horizon too short for the drawn structure
        }
        runs.push_back({cursor, lengths[static_cast<std::size_t>(r)]});
        cursor += lengths[static_cast<std::size_t>(r)];
    }
}

}  // namespace

ClientHistory gen_client(const CohortSpec& spec, Label true_class,
                         RngStream& rng) {
    const auto& params = spec.class_params[static_cast<std::size_t>(true_class)];
    const int horizon = spec.horizon_days;

    const int n_runs =
        static_cast<int>(rng.uniform_int_range(params.min_runs, params.max_runs));
    std::vector<int> lengths;
    lengths.reserve(static_cast<std::size_t>(n_runs));
    if (params.total_days_mean > 0.0) {
        // Budgeted total split evenly across runs (+-20% jitter per run).
        double total = rng.normal(params.total_days_mean, params.total_days_std);
        total = std::clamp(total, 30.0, 0.95 * horizon);
        for (int r = 0; r < n_runs; ++r) {
            const double share = total / n_runs;
            lengths.push_back(std::max(
                1, static_cast<int>(std::lround(share * rng.uniform(0.8, 1.2)))));
        }
    } else {
        for (int r = 0; r < n_runs; ++r) {
            lengths.push_back(draw_run_length(params, rng));
        }
    }

    std::vector<NominalRun> runs;
    layout_runs(runs, n_runs, params, horizon, lengths, rng);

    // Relapse: extra short runs landing late in the horizon.
    if (params.relapse_prob > 0.0 && rng.bernoulli(params.relapse_prob)) {
        const int extra = static_cast<int>(rng.uniform_int_range(
            params.relapse_min_runs, params.relapse_max_runs));
        int earliest = params.relapse_earliest_day;
        if (!runs.empty()) {
            earliest = std::max(
                earliest, runs.back().start + runs.back().length + kEpisodeGap);
        }
        for (int r = 0; r < extra && earliest < horizon - 1; ++r) {
            const int start = static_cast<int>(
                rng.uniform_int_range(earliest, horizon - 1));
            const int length =
                static_cast<int>(rng.geometric(params.relapse_run_mean));
            runs.push_back({start, length});
            earliest = start + length + kEpisodeGap;
        }
    }

    // Realize runs day by day with the presence probability; one guaranteed
    // day per client so histories are never empty.
    std::vector<Day> stays;
    for (const auto& run : runs) {
        for (int d = run.start; d < run.start + run.length && d < horizon; ++d) {
            if (rng.bernoulli(params.presence_prob)) {
                stays.push_back(static_cast<Day>(d));
            }
        }
    }
    if (stays.empty()) {
        stays.push_back(runs.empty() ? 0 : static_cast<Day>(runs.front().start));
    }
    std::sort(stays.begin(), stays.end());
    stays.erase(std::unique(stays.begin(), stays.end()), stays.end());

    ClientHistory history;
    history.stays = std::move(stays);
    return history;
}

Cohort gen_cohort(const CohortSpec& spec) {
    spec.validate();
    RngStream rng(derive_seed(spec.seed, "cohort"));

    std::vector<double> class_weights(spec.class_mix.begin(),
                                      spec.class_mix.end());
    std::vector<double> agency_probs;
    agency_probs.reserve(spec.agency_weights.size());
    for (const auto& [ignored, weight] : spec.agency_weights) {
        agency_probs.push_back(weight);
    }
    std::vector<double> multiset_probs(spec.agencies_per_client.begin(),
                                       spec.agencies_per_client.end());

    Cohort cohort;
    for (const auto& [agency_id, ignored] : spec.agency_weights) {
        cohort.linked[agency_id].agency_id = agency_id;
    }

    for (int i = 0; i < spec.n_clients; ++i) {
        char id_buf[24];
        std::snprintf(id_buf, sizeof(id_buf), "c%06d", i);
        const std::string client_id = id_buf;

        const Label true_class =
            static_cast<Label>(rng.weighted_index(class_weights));
        ClientHistory history = gen_client(spec, true_class, rng);
        history.client_id = client_id;

        // Home multiset: 1-3 distinct agencies drawn by weight.
        const int n_home =
            1 + static_cast<int>(rng.weighted_index(multiset_probs));
        std::vector<std::size_t> home;
        for (int h = 0; h < n_home; ++h) {
            const std::size_t pick = rng.weighted_index(agency_probs);
            if (std::find(home.begin(), home.end(), pick) == home.end()) {
                home.push_back(pick);
            }
        }

        const Day entry =
            spec.start_date +
            (spec.entry_offset_max_days > 0
                 ? static_cast<Day>(rng.uniform_int(
                       static_cast<std::uint64_t>(spec.entry_offset_max_days)))
                 : 0);

        // Attribute each stay day to one home agency, uniformly.
        std::map<std::size_t, std::vector<Day>> per_agency_days;
        for (Day day : history.stays) {
            const std::size_t pick =
                home[home.size() == 1
                         ? 0
                         : static_cast<std::size_t>(rng.uniform_int(home.size()))];
            per_agency_days[pick].push_back(entry + day);
        }
        for (auto& [agency_index, days] : per_agency_days) {
            ClientHistory slice;
            slice.client_id = client_id;
            slice.stays = std::move(days);
            cohort.linked[spec.agency_weights[agency_index].first]
                .clients.push_back(std::move(slice));
        }
        cohort.truth.emplace(client_id, true_class);
    }
    return cohort;
}

UnlinkResult unlink(const CohortView& linked) {
    UnlinkResult result;
    std::map<std::string, int> next_index;
    for (const auto& [agency_id, dataset] : linked) {
        AgencyDataset fresh;
        fresh.agency_id = agency_id;
        for (const auto& client : dataset.clients) {
            if (client.stays.empty()) {
                continue;
            }
            char id_buf[48];
            std::snprintf(id_buf, sizeof(id_buf), "%s-u%06d", agency_id.c_str(),
                          next_index[agency_id]++);
            ClientHistory renamed = client;
            renamed.client_id = id_buf;
            result.provenance.emplace(renamed.client_id, client.client_id);
            fresh.clients.push_back(std::move(renamed));
        }
        result.unlinked.emplace(agency_id, std::move(fresh));
    }
    return result;
}

std::vector<ClientHistory> merged_histories(const CohortView& view) {
    return merge_by_client(flatten(view));
}

std::vector<std::pair<std::string, Label>> truth_rows(const Cohort& cohort) {
    std::vector<std::pair<std::string, Label>> rows;
    rows.reserve(cohort.truth.size());
    for (const auto& entry : cohort.truth) {
        rows.push_back(entry);
    }
    return rows;
}

}  // namespace shelterfl
