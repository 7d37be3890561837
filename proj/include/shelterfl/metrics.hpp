#pragma once

#include "shelterfl/types.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace shelterfl {

/// 3x3 counts; rows are true labels, columns predictions, both in the fixed
/// Transitional/Episodic/Chronic order.
struct ConfusionMatrix {
    std::array<std::array<std::int64_t, kNumClasses>, kNumClasses> counts{};

    void add(Label truth, Label predicted, std::int64_t n = 1);
    ConfusionMatrix& operator+=(const ConfusionMatrix& other);
    std::int64_t total() const;
    std::int64_t at(Label truth, Label predicted) const;
    std::int64_t support(Label truth) const;  // row sum
};

ConfusionMatrix confusion_matrix(const std::vector<Label>& truth,
                                 const std::vector<Label>& predicted);

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Per-class precision/recall/F1 with the 0/0 -> 0 convention.
std::array<ClassMetrics, kNumClasses> per_class_metrics(
    const ConfusionMatrix& cm);

/// Unweighted mean over classes.
ClassMetrics macro_metrics(const ConfusionMatrix& cm);

/// Support-weighted mean over classes (reported alongside macro).
ClassMetrics weighted_metrics(const ConfusionMatrix& cm);

struct AgencyReportRow {
    std::string agency_id;
    std::int64_t clients = 0;
    ClassMetrics macro;
};

/// Per-agency slice table, sorted by agency id. Pooling the slices must
/// reproduce the aggregate matrix exactly.
std::vector<AgencyReportRow> per_agency_report(
    const std::map<std::string, ConfusionMatrix>& per_agency);

/// Aligned plain-text table and machine-readable columnar form.
void write_agency_table(std::ostream& out,
                        const std::vector<AgencyReportRow>& rows);
void write_agency_table_csv(std::ostream& out,
                            const std::vector<AgencyReportRow>& rows);

/// Chart data: one "agency,scenario,f1" line per entry.
struct F1ChartPoint {
    std::string agency_id;
    std::string scenario;
    double f1 = 0.0;
};
void write_f1_chart(std::ostream& out, const std::vector<F1ChartPoint>& points);

std::string format_metric(double value);  // fixed 4-decimal form for tables

}  // namespace shelterfl
