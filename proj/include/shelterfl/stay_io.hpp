#pragma once

#include "shelterfl/types.hpp"

#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace shelterfl {

/// Line-delimited text format: header "client_id,agency_id,date", then one
/// record per line with the date as an ISO-8601 day. UTF-8 throughout.
void write_stay_records(std::ostream& out,
                        const std::vector<StayRecord>& records);
std::vector<StayRecord> read_stay_records(std::istream& in);

void write_stay_records_file(const std::string& path,
                             const std::vector<StayRecord>& records);
std::vector<StayRecord> read_stay_records_file(const std::string& path);

/// Truth sidecar (harness-only): header "client_id,true_class".
void write_truth(std::ostream& out,
                 const std::vector<std::pair<std::string, Label>>& truth);
std::vector<std::pair<std::string, Label>> read_truth(std::istream& in);
void write_truth_file(const std::string& path,
                      const std::vector<std::pair<std::string, Label>>& truth);
std::vector<std::pair<std::string, Label>> read_truth_file(
    const std::string& path);

/// Groups records into per-agency datasets; within each agency a client's
/// history holds only that agency's stays. Duplicate (client, day) rows
/// collapse to one sleep-day. Output is sorted by agency and client id.
CohortView group_by_agency(const std::vector<StayRecord>& records);

/// Merges records into one history per client across all agencies (the
/// linked view), collapsing same-day stays. Sorted by client id.
std::vector<ClientHistory> merge_by_client(const std::vector<StayRecord>& records);

/// Flattens a per-agency view back into records (sorted by agency, client,
/// date); the inverse of group_by_agency up to row order.
std::vector<StayRecord> flatten(const CohortView& view);

}  // namespace shelterfl
