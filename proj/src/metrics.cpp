#include "shelterfl/metrics.hpp"

#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace shelterfl {

void ConfusionMatrix::add(Label truth, Label predicted, std::int64_t n) {
    counts[static_cast<std::size_t>(truth)][static_cast<std::size_t>(predicted)] +=
        n;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
    for (int i = 0; i < kNumClasses; ++i) {
        for (int j = 0; j < kNumClasses; ++j) {
            counts[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] +=
                other.counts[static_cast<std::size_t>(i)]
                            [static_cast<std::size_t>(j)];
        }
    }
    return *this;
}

std::int64_t ConfusionMatrix::total() const {
    std::int64_t n = 0;
    for (const auto& row : counts) {
        for (std::int64_t c : row) {
            n += c;
        }
    }
    return n;
}

std::int64_t ConfusionMatrix::at(Label truth, Label predicted) const {
    return counts[static_cast<std::size_t>(truth)]
                 [static_cast<std::size_t>(predicted)];
}

std::int64_t ConfusionMatrix::support(Label truth) const {
    std::int64_t n = 0;
    for (std::int64_t c : counts[static_cast<std::size_t>(truth)]) {
        n += c;
    }
    return n;
}

ConfusionMatrix confusion_matrix(const std::vector<Label>& truth,
                                 const std::vector<Label>& predicted) {
    if (truth.size() != predicted.size()) {
        throw std::invalid_argument("confusion_matrix: size mismatch");
    }
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        cm.add(truth[i], predicted[i]);
    }
    return cm;
}

namespace {

double safe_ratio(std::int64_t numerator, std::int64_t denominator) {
    return denominator == 0 ? 0.0
                            : static_cast<double>(numerator) /
                                  static_cast<double>(denominator);
}

ClassMetrics metrics_from_counts(std::int64_t tp, std::int64_t fp,
                                 std::int64_t fn) {
    ClassMetrics m;
    m.precision = safe_ratio(tp, tp + fp);
    m.recall = safe_ratio(tp, tp + fn);
    m.f1 = (m.precision + m.recall) > 0.0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    return m;
}

}  // namespace

std::array<ClassMetrics, kNumClasses> per_class_metrics(
    const ConfusionMatrix& cm) {
    std::array<ClassMetrics, kNumClasses> out;
    for (int c = 0; c < kNumClasses; ++c) {
        std::int64_t tp = 0, fp = 0, fn = 0;
        for (int other = 0; other < kNumClasses; ++other) {
            const auto truth = static_cast<Label>(other);
            const auto pred = static_cast<Label>(c);
            if (other == c) {
                tp = cm.at(truth, pred);
            } else {
                fp += cm.at(truth, pred);
                fn += cm.at(static_cast<Label>(c), static_cast<Label>(other));
            }
        }
        out[static_cast<std::size_t>(c)] = metrics_from_counts(tp, fp, fn);
    }
    return out;
}

ClassMetrics macro_metrics(const ConfusionMatrix& cm) {
    const auto per_class = per_class_metrics(cm);
    ClassMetrics macro;
    for (const auto& m : per_class) {
        macro.precision += m.precision / kNumClasses;
        macro.recall += m.recall / kNumClasses;
        macro.f1 += m.f1 / kNumClasses;
    }
    return macro;
}

ClassMetrics weighted_metrics(const ConfusionMatrix& cm) {
    const auto per_class = per_class_metrics(cm);
    const double total = static_cast<double>(cm.total());
    ClassMetrics weighted;
    if (total == 0.0) {
        return weighted;
    }
    for (int c = 0; c < kNumClasses; ++c) {
        const double w =
            static_cast<double>(cm.support(static_cast<Label>(c))) / total;
        weighted.precision += w * per_class[static_cast<std::size_t>(c)].precision;
        weighted.recall += w * per_class[static_cast<std::size_t>(c)].recall;
        weighted.f1 += w * per_class[static_cast<std::size_t>(c)].f1;
    }
    return weighted;
}

std::vector<AgencyReportRow> per_agency_report(
    const std::map<std::string, ConfusionMatrix>& per_agency) {
    std::vector<AgencyReportRow> rows;
    rows.reserve(per_agency.size());
    for (const auto& [agency_id, cm] : per_agency) {
        rows.push_back({agency_id, cm.total(), macro_metrics(cm)});
    }
    return rows;
}

std::string format_metric(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", value);
    return buf;
}

void write_agency_table(std::ostream& out,
                        const std::vector<AgencyReportRow>& rows) {
    out << "agency      clients  precision  recall  f1\n";
    char buf[128];
    for (const auto& row : rows) {
        std::snprintf(buf, sizeof(buf), "%-10s %8lld     %.4f  %.4f  %.4f\n",
                      row.agency_id.c_str(),
                      static_cast<long long>(row.clients), row.macro.precision,
                      row.macro.recall, row.macro.f1);
        out << buf;
    }
}

void write_agency_table_csv(std::ostream& out,
                            const std::vector<AgencyReportRow>& rows) {
    out << "agency,clients,precision,recall,f1\n";
    for (const auto& row : rows) {
        out << row.agency_id << ',' << row.clients << ','
            << format_metric(row.macro.precision) << ','
            << format_metric(row.macro.recall) << ','
            << format_metric(row.macro.f1) << '\n';
    }
}

void write_f1_chart(std::ostream& out,
                    const std::vector<F1ChartPoint>& points) {
    out << "agency,scenario,f1\n";
    for (const auto& point : points) {
        out << point.agency_id << ',' << point.scenario << ','
            << format_metric(point.f1) << '\n';
    }
}

}  // namespace shelterfl
