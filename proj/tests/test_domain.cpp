#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "shelterfl/rng.hpp"
#include "shelterfl/stay_io.hpp"
#include "shelterfl/types.hpp"

#include <sstream>

using namespace shelterfl;

TEST_CASE("calendar day conversions") {
    CHECK(day_from_ymd(1970, 1, 1) == 0);
    CHECK(day_from_ymd(2009, 1, 1) == 14245);
    CHECK(format_day(0) == "1970-01-01");
    CHECK(parse_day("2009-01-01") == 14245);
    CHECK(parse_day("2019-12-31") == day_from_ymd(2019, 12, 31));

    RngStream rng(7);
    for (int i = 0; i < 500; ++i) {
        const Day day = static_cast<Day>(rng.uniform_int_range(-20000, 40000));
        CHECK(parse_day(format_day(day)) == day);
        int y, m, d;
        ymd_from_day(day, y, m, d);
        CHECK(day_from_ymd(y, m, d) == day);
    }

    CHECK_THROWS_AS(parse_day("2023-02-29"), std::invalid_argument);
    CHECK_THROWS_AS(parse_day("2023-13-01"), std::invalid_argument);
    CHECK_THROWS_AS(parse_day("not-a-date"), std::invalid_argument);
    CHECK_THROWS_AS(parse_day("2023-04-31"), std::invalid_argument);
}

TEST_CASE("label order and naming") {
    CHECK(static_cast<int>(Label::Transitional) < static_cast<int>(Label::Episodic));
    CHECK(static_cast<int>(Label::Episodic) < static_cast<int>(Label::Chronic));
    for (Label label : kAllLabels) {
        CHECK(label_from_string(to_string(label)) == label);
    }
    CHECK_THROWS_AS(label_from_string("sporadic"), std::invalid_argument);
}

TEST_CASE("client history validation") {
    ClientHistory ok{"c1", {3, 5, 9}};
    CHECK_NOTHROW(ok.validate());
    CHECK(ok.first_day() == 3);

    CHECK_THROWS_AS((ClientHistory{"c1", {}}).validate(), std::invalid_argument);
    CHECK_THROWS_AS((ClientHistory{"", {1}}).validate(), std::invalid_argument);
    CHECK_THROWS_AS((ClientHistory{"c1", {5, 5}}).validate(),
                    std::invalid_argument);
    CHECK_THROWS_AS((ClientHistory{"c1", {5, 4}}).validate(),
                    std::invalid_argument);

    AgencyDataset agency{"a1", {ok, {"c1", {1}}}};
    CHECK_THROWS_AS(agency.validate(), std::invalid_argument);
}

TEST_CASE("window config validation") {
    WindowConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    CHECK(cfg.feature_dim() == 12);

    WindowConfig bad = cfg;
    bad.observation_days = 600;  // exceeds T_p
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = cfg;
    bad.episode_gap = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("stay record round trip") {
    std::vector<StayRecord> records;
    RngStream rng(11);
    for (int i = 0; i < 200; ++i) {
        records.push_back(
            {"c" + std::to_string(rng.uniform_int(50)),
             "a" + std::to_string(rng.uniform_int(5)),
             static_cast<Day>(rng.uniform_int_range(14000, 18000))});
    }
    std::stringstream buffer;
    write_stay_records(buffer, records);
    const auto parsed = read_stay_records(buffer);
    REQUIRE(parsed.size() == records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        CHECK(parsed[i].client_id == records[i].client_id);
        CHECK(parsed[i].agency_id == records[i].agency_id);
        CHECK(parsed[i].date == records[i].date);
    }

    std::stringstream missing_header("c1,a1,2009-01-01\n");
    CHECK_THROWS_AS(read_stay_records(missing_header), std::invalid_argument);
}

TEST_CASE("truth sidecar round trip") {
    std::vector<std::pair<std::string, Label>> truth = {
        {"c1", Label::Transitional}, {"c2", Label::Chronic},
        {"c3", Label::Episodic}};
    std::stringstream buffer;
    write_truth(buffer, truth);
    const auto parsed = read_truth(buffer);
    REQUIRE(parsed.size() == truth.size());
    for (std::size_t i = 0; i < truth.size(); ++i) {
        CHECK(parsed[i] == truth[i]);
    }
}

TEST_CASE("grouping collapses same-day stays and sorts") {
    std::vector<StayRecord> records = {
        {"c2", "a1", 10}, {"c1", "a1", 5}, {"c1", "a1", 5}, {"c1", "a2", 6},
        {"c1", "a1", 4}};
    const auto view = group_by_agency(records);
    REQUIRE(view.size() == 2);
    const auto& a1 = view.at("a1");
    REQUIRE(a1.clients.size() == 2);
    CHECK(a1.clients[0].client_id == "c1");
    CHECK(a1.clients[0].stays == std::vector<Day>{4, 5});
    CHECK(a1.clients[1].stays == std::vector<Day>{10});

    const auto merged = merge_by_client(records);
    REQUIRE(merged.size() == 2);
    CHECK(merged[0].client_id == "c1");
    CHECK(merged[0].stays == std::vector<Day>{4, 5, 6});
}

TEST_CASE("label centroids accessors and validation") {
    LabelCentroids c;
    c.transitional = {10, 1};
    c.episodic = {40, 8};
    c.chronic = {300, 2};
    CHECK_NOTHROW(c.validate());
    CHECK(c.of(Label::Chronic) == Eigen::Vector2d(300, 2));
    CHECK(c.of(Label::Transitional) == Eigen::Vector2d(10, 1));

    c.episodic = c.transitional;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("model parameter arithmetic") {
    ModelParameters a;
    a.layers.push_back({Eigen::MatrixXd::Constant(2, 3, 1.0),
                        Eigen::VectorXd::Constant(3, 2.0)});
    ModelParameters b = a;
    b.layers[0].weights.setConstant(5.0);
    b.layers[0].bias.setConstant(-2.0);

    CHECK(a.same_shape(b));
    CHECK(a.scalar_count() == 9);

    ModelParameters sum = ModelParameters::zeros_like(a);
    sum.axpy(0.25, a);
    sum.axpy(0.75, b);
    CHECK(sum.layers[0].weights(0, 0) == doctest::Approx(4.0));
    CHECK(sum.layers[0].bias(0) == doctest::Approx(-1.0));

    CHECK(a.max_abs_diff(b) == doctest::Approx(4.0));
    a.scale(0.0);
    CHECK(a.all_finite());
    CHECK(a.layers[0].weights.cwiseAbs().maxCoeff() == 0.0);

    ModelParameters other_shape;
    other_shape.layers.push_back(
        {Eigen::MatrixXd::Zero(3, 3), Eigen::VectorXd::Zero(3)});
    CHECK_FALSE(a.same_shape(other_shape));
    CHECK_THROWS_AS(a.axpy(1.0, other_shape), std::invalid_argument);
}

TEST_CASE("training configuration defaults") {
    TrainConfig cfg;
    CHECK(cfg.learning_rate == 0.02);
    CHECK(cfg.batch_size == 500);
    CHECK(cfg.epochs == 200);
    CHECK(cfg.dropout_rates[0] == 0.4);
    CHECK(cfg.dropout_rates[1] == 0.2);
    CHECK(cfg.dropout_rates[2] == 0.1);
    CHECK(cfg.adam_beta1 == 0.9);
    CHECK(cfg.adam_beta2 == 0.999);
    CHECK(cfg.adam_epsilon == 1e-8);
    CHECK(cfg.output_activation == OutputActivation::Softmax);
    CHECK_NOTHROW(cfg.validate());

    TrainConfig bad = cfg;
    bad.dropout_rates[1] = 1.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    FedConfig fed;
    CHECK(fed.rounds == 75);
    CHECK(fed.local_epochs == 15);
    CHECK_NOTHROW(fed.validate());
}
