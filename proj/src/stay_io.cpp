#include "shelterfl/stay_io.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace shelterfl {

namespace {

constexpr const char* kStayHeader = "client_id,agency_id,date";
constexpr const char* kTruthHeader = "client_id,true_class";

std::vector<std::string> split_csv_line(const std::string& line,
                                        std::size_t expected_fields) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) {
        fields.push_back(field);
    }
    if (fields.size() != expected_fields) {
        throw std::invalid_argument("malformed line: '" + line + "'");
    }
    return fields;
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open for reading: " + path);
    }
    return in;
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open for writing: " + path);
    }
    return out;
}

}  // namespace

void write_stay_records(std::ostream& out,
                        const std::vector<StayRecord>& records) {
    out << kStayHeader << '\n';
    for (const auto& rec : records) {
        out << rec.client_id << ',' << rec.agency_id << ','
            << format_day(rec.date) << '\n';
    }
}

std::vector<StayRecord> read_stay_records(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kStayHeader) {
        throw std::invalid_argument("stay-record file: missing header '" +
                                    std::string(kStayHeader) + "'");
    }
    std::vector<StayRecord> records;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        auto fields = split_csv_line(line, 3);
        if (fields[0].empty() || fields[1].empty()) {
            throw std::invalid_argument("stay record with empty id: '" + line +
                                        "'");
        }
        records.push_back({fields[0], fields[1], parse_day(fields[2])});
    }
    return records;
}

void write_stay_records_file(const std::string& path,
                             const std::vector<StayRecord>& records) {
    auto out = open_output(path);
    write_stay_records(out, records);
}

std::vector<StayRecord> read_stay_records_file(const std::string& path) {
    auto in = open_input(path);
    return read_stay_records(in);
}

void write_truth(std::ostream& out,
                 const std::vector<std::pair<std::string, Label>>& truth) {
    out << kTruthHeader << '\n';
    for (const auto& [client_id, label] : truth) {
        out << client_id << ',' << to_string(label) << '\n';
    }
}

std::vector<std::pair<std::string, Label>> read_truth(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kTruthHeader) {
        throw std::invalid_argument("truth file: missing header '" +
                                    std::string(kTruthHeader) + "'");
    }
    std::vector<std::pair<std::string, Label>> truth;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        auto fields = split_csv_line(line, 2);
        truth.emplace_back(fields[0], label_from_string(fields[1]));
    }
    return truth;
}

void write_truth_file(const std::string& path,
                      const std::vector<std::pair<std::string, Label>>& truth) {
    auto out = open_output(path);
    write_truth(out, truth);
}

std::vector<std::pair<std::string, Label>> read_truth_file(
    const std::string& path) {
    auto in = open_input(path);
    return read_truth(in);
}

namespace {

std::vector<ClientHistory> histories_from_day_map(
    std::map<std::string, std::vector<Day>>&& days_by_client) {
    std::vector<ClientHistory> histories;
    histories.reserve(days_by_client.size());
    for (auto& [client_id, days] : days_by_client) {
        std::sort(days.begin(), days.end());
        days.erase(std::unique(days.begin(), days.end()), days.end());
        histories.push_back({client_id, std::move(days)});
    }
    return histories;
}

}  // namespace

CohortView group_by_agency(const std::vector<StayRecord>& records) {
    std::map<std::string, std::map<std::string, std::vector<Day>>> by_agency;
    for (const auto& rec : records) {
        by_agency[rec.agency_id][rec.client_id].push_back(rec.date);
    }
    CohortView view;
    for (auto& [agency_id, by_client] : by_agency) {
        AgencyDataset dataset;
        dataset.agency_id = agency_id;
        dataset.clients = histories_from_day_map(std::move(by_client));
        view.emplace(agency_id, std::move(dataset));
    }
    return view;
}

std::vector<ClientHistory> merge_by_client(
    const std::vector<StayRecord>& records) {
    std::map<std::string, std::vector<Day>> by_client;
    for (const auto& rec : records) {
        by_client[rec.client_id].push_back(rec.date);
    }
    return histories_from_day_map(std::move(by_client));
}

std::vector<StayRecord> flatten(const CohortView& view) {
    std::vector<StayRecord> records;
    for (const auto& [agency_id, dataset] : view) {
        for (const auto& client : dataset.clients) {
            for (Day day : client.stays) {
                records.push_back({client.client_id, agency_id, day});
            }
        }
    }
    return records;
}

}  // namespace shelterfl
