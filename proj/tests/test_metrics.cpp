#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "shelterfl/metrics.hpp"
#include "shelterfl/rng.hpp"

#include <sstream>

using namespace shelterfl;

namespace {

ConfusionMatrix random_cm(RngStream& rng, int max_cell = 50) {
    ConfusionMatrix cm;
    for (int t = 0; t < kNumClasses; ++t) {
        for (int p = 0; p < kNumClasses; ++p) {
            cm.add(static_cast<Label>(t), static_cast<Label>(p),
                   static_cast<std::int64_t>(rng.uniform_int(
                       static_cast<std::uint64_t>(max_cell))));
        }
    }
    return cm;
}

}  // namespace

TEST_CASE("diagonal confusion matrix scores ones everywhere") {
    ConfusionMatrix cm;
    cm.add(Label::Transitional, Label::Transitional, 10);
    cm.add(Label::Episodic, Label::Episodic, 5);
    cm.add(Label::Chronic, Label::Chronic, 2);
    const auto per_class = per_class_metrics(cm);
    for (const auto& m : per_class) {
        CHECK(m.precision == 1.0);
        CHECK(m.recall == 1.0);
        CHECK(m.f1 == 1.0);
    }
    const auto macro = macro_metrics(cm);
    CHECK(macro.precision == 1.0);
    CHECK(macro.recall == 1.0);
    CHECK(macro.f1 == 1.0);
    CHECK(cm.total() == 17);
}

TEST_CASE("absent class takes the zero convention") {
    ConfusionMatrix cm;
    cm.add(Label::Transitional, Label::Transitional, 8);
    cm.add(Label::Episodic, Label::Transitional, 2);
    // Chronic never appears in truth or predictions: 0/0 -> 0.
    const auto per_class = per_class_metrics(cm);
    CHECK(per_class[2].precision == 0.0);
    CHECK(per_class[2].recall == 0.0);
    CHECK(per_class[2].f1 == 0.0);
    CHECK(per_class[1].recall == 0.0);  // episodic missed entirely
}

TEST_CASE("per-class metrics match a direct formula oracle") {
    RngStream rng(5);
    for (int trial = 0; trial < 300; ++trial) {
        const auto cm = random_cm(rng);
        const auto per_class = per_class_metrics(cm);
        for (int c = 0; c < kNumClasses; ++c) {
            const auto lc = static_cast<Label>(c);
            double tp = static_cast<double>(cm.at(lc, lc));
            double row = 0.0, col = 0.0;
            for (int o = 0; o < kNumClasses; ++o) {
                row += static_cast<double>(cm.at(lc, static_cast<Label>(o)));
                col += static_cast<double>(cm.at(static_cast<Label>(o), lc));
            }
            const double precision = col > 0 ? tp / col : 0.0;
            const double recall = row > 0 ? tp / row : 0.0;
            const double f1 = (precision + recall) > 0
                                  ? 2 * precision * recall / (precision + recall)
                                  : 0.0;
            CHECK(per_class[static_cast<std::size_t>(c)].precision ==
                  doctest::Approx(precision).epsilon(1e-12));
            CHECK(per_class[static_cast<std::size_t>(c)].recall ==
                  doctest::Approx(recall).epsilon(1e-12));
            CHECK(per_class[static_cast<std::size_t>(c)].f1 ==
                  doctest::Approx(f1).epsilon(1e-12));
        }

        // Macro is the unweighted mean; weighted uses row supports.
        const auto macro = macro_metrics(cm);
        CHECK(macro.recall ==
              doctest::Approx((per_class[0].recall + per_class[1].recall +
                               per_class[2].recall) /
                              3.0)
                  .epsilon(1e-12));
        const auto weighted = weighted_metrics(cm);
        if (cm.total() > 0) {
            double expect = 0.0;
            for (int c = 0; c < kNumClasses; ++c) {
                expect += static_cast<double>(cm.support(static_cast<Label>(c))) /
                          static_cast<double>(cm.total()) *
                          per_class[static_cast<std::size_t>(c)].recall;
            }
            CHECK(weighted.recall == doctest::Approx(expect).epsilon(1e-12));
        }

        // Bounds and the F1 inequality.
        for (const auto& m : per_class) {
            CHECK(m.precision >= 0.0);
            CHECK(m.precision <= 1.0);
            CHECK(m.recall >= 0.0);
            CHECK(m.recall <= 1.0);
            CHECK(m.f1 <= std::max(m.precision, m.recall) + 1e-12);
        }
    }
}

TEST_CASE("pooling per-agency matrices reproduces the aggregate") {
    RngStream rng(9);
    std::map<std::string, ConfusionMatrix> per_agency;
    ConfusionMatrix aggregate;
    for (int a = 0; a < 5; ++a) {
        const auto cm = random_cm(rng);
        per_agency["agency" + std::to_string(a)] = cm;
        aggregate += cm;
    }
    ConfusionMatrix pooled;
    for (const auto& [agency_id, cm] : per_agency) {
        pooled += cm;
    }
    for (int t = 0; t < kNumClasses; ++t) {
        for (int p = 0; p < kNumClasses; ++p) {
            CHECK(pooled.at(static_cast<Label>(t), static_cast<Label>(p)) ==
                  aggregate.at(static_cast<Label>(t), static_cast<Label>(p)));
        }
    }

    const auto rows = per_agency_report(per_agency);
    REQUIRE(rows.size() == 5);
    std::int64_t total = 0;
    for (const auto& row : rows) {
        total += row.clients;
    }
    CHECK(total == aggregate.total());
    CHECK(std::is_sorted(rows.begin(), rows.end(),
                         [](const auto& a, const auto& b) {
                             return a.agency_id < b.agency_id;
                         }));

    // A single agency report equals the aggregate metrics.
    std::map<std::string, ConfusionMatrix> solo{{"only", aggregate}};
    const auto solo_rows = per_agency_report(solo);
    CHECK(solo_rows[0].macro.f1 ==
          doctest::Approx(macro_metrics(aggregate).f1).epsilon(1e-12));
}

TEST_CASE("confusion matrix from label vectors") {
    const std::vector<Label> truth = {Label::Transitional, Label::Episodic,
                                      Label::Chronic, Label::Chronic};
    const std::vector<Label> pred = {Label::Transitional, Label::Chronic,
                                     Label::Chronic, Label::Episodic};
    const auto cm = confusion_matrix(truth, pred);
    CHECK(cm.total() == 4);
    CHECK(cm.at(Label::Transitional, Label::Transitional) == 1);
    CHECK(cm.at(Label::Episodic, Label::Chronic) == 1);
    CHECK(cm.at(Label::Chronic, Label::Episodic) == 1);
    CHECK_THROWS_AS(confusion_matrix(truth, {Label::Chronic}),
                    std::invalid_argument);
}

TEST_CASE("report writers emit stable tables") {
    std::map<std::string, ConfusionMatrix> per_agency;
    RngStream rng(3);
    per_agency["a330"] = random_cm(rng);
    per_agency["a004"] = random_cm(rng);
    const auto rows = per_agency_report(per_agency);

    std::stringstream text, csv, chart;
    write_agency_table(text, rows);
    write_agency_table_csv(csv, rows);
    write_f1_chart(chart, {{"a330", "federated", 0.61},
                           {"a330", "isolated", 0.52}});

    CHECK(text.str().find("a004") != std::string::npos);
    CHECK(csv.str().rfind("agency,clients,precision,recall,f1\n", 0) == 0);
    CHECK(chart.str() ==
          "agency,scenario,f1\na330,federated,0.6100\na330,isolated,0.5200\n");

    std::stringstream csv2;
    write_agency_table_csv(csv2, rows);
    CHECK(csv.str() == csv2.str());
}
