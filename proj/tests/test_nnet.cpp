#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "shelterfl/nnet.hpp"
#include "shelterfl/rng.hpp"

#include <cmath>
#include <sstream>

using namespace shelterfl;

namespace {

ModelParameters random_small_model(RngStream& rng, int input_dim,
                                   const std::vector<int>& hidden) {
    MlpArchitecture arch;
    arch.input_dim = input_dim;
    arch.hidden = hidden;
    ModelParameters params = init_model(arch, rng.next_u64());
    // Random biases move ReLU kinks away from zero inputs.
    for (auto& layer : params.layers) {
        for (Eigen::Index j = 0; j < layer.bias.size(); ++j) {
            layer.bias[j] = rng.uniform(-0.3, 0.3);
        }
    }
    return params;
}

TrainConfig no_dropout_config() {
    TrainConfig cfg;
    cfg.dropout_rates = {0.0, 0.0, 0.0};
    return cfg;
}

}  // namespace

TEST_CASE("init_model shapes, zero biases and determinism") {
    const auto params = init_model(12, 77);
    REQUIRE(params.layers.size() == 4);
    CHECK(params.layers[0].weights.rows() == 12);
    CHECK(params.layers[0].weights.cols() == 512);
    CHECK(params.layers[1].weights.rows() == 512);
    CHECK(params.layers[1].weights.cols() == 128);
    CHECK(params.layers[2].weights.rows() == 128);
    CHECK(params.layers[2].weights.cols() == 16);
    CHECK(params.layers[3].weights.rows() == 16);
    CHECK(params.layers[3].weights.cols() == 3);
    for (const auto& layer : params.layers) {
        CHECK(layer.bias.cwiseAbs().maxCoeff() == 0.0);
    }

    const auto again = init_model(12, 77);
    CHECK(params.max_abs_diff(again) == 0.0);
    const auto other = init_model(12, 78);
    CHECK(params.max_abs_diff(other) > 0.0);

    // He-uniform bound on the first layer.
    const double limit = std::sqrt(6.0 / 12.0);
    CHECK(params.layers[0].weights.cwiseAbs().maxCoeff() <= limit);

    CHECK_THROWS_AS(init_model(0, 1), std::invalid_argument);
}

TEST_CASE("forward: no dropout makes training equal inference") {
    RngStream rng(5);
    const auto params = random_small_model(rng, 6, {8, 5});
    Eigen::MatrixXd x(4, 6);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        x(i / 6, i % 6) = rng.uniform(-2.0, 2.0);
    }
    TrainConfig cfg = no_dropout_config();
    RngStream dropout_rng(1);
    const auto train_probs = forward_training(params, x, cfg, dropout_rng);
    const auto infer_probs = predict_proba(params, x);
    CHECK((train_probs - infer_probs).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("forward: zero model gives uniform probabilities") {
    auto params = init_model(4, 3);
    for (auto& layer : params.layers) {
        layer.weights.setZero();
    }
    Eigen::MatrixXd x = Eigen::MatrixXd::Random(5, 4);
    for (OutputActivation act :
         {OutputActivation::Softmax, OutputActivation::SigmoidNormalized}) {
        const auto probs = predict_proba(params, x, act);
        CHECK((probs.array() - 1.0 / 3.0).abs().maxCoeff() < 1e-12);
    }
    // Uniform rows: every prediction falls back to the first label.
    const auto labels = predict(params, x);
    for (const auto label : labels) {
        CHECK(label == Label::Transitional);
    }
}

TEST_CASE("forward rows are probability simplices") {
    RngStream rng(6);
    const auto params = random_small_model(rng, 5, {7, 4});
    Eigen::MatrixXd x(30, 5);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            x(i, j) = rng.uniform(-50.0, 50.0);
        }
    }
    for (OutputActivation act :
         {OutputActivation::Softmax, OutputActivation::SigmoidNormalized}) {
        const auto probs = predict_proba(params, x, act);
        for (Eigen::Index i = 0; i < probs.rows(); ++i) {
            CHECK(probs.row(i).minCoeff() >= 0.0);
            CHECK(probs.row(i).sum() == doctest::Approx(1.0).epsilon(1e-6));
        }
    }
    Eigen::MatrixXd bad = x;
    bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(predict_proba(params, bad), std::invalid_argument);
}

TEST_CASE("loss values: uniform gives ln 3, near-perfect goes to zero") {
    auto params = init_model(4, 3);
    for (auto& layer : params.layers) {
        layer.weights.setZero();
    }
    Eigen::MatrixXd x = Eigen::MatrixXd::Ones(6, 4);
    Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(6, 3);
    for (int i = 0; i < 6; ++i) {
        onehot(i, i % 3) = 1.0;
    }
    TrainConfig cfg = no_dropout_config();
    RngStream rng(2);
    const auto uniform = loss_and_grads(params, x, onehot, cfg, rng);
    CHECK(uniform.loss == doctest::Approx(std::log(3.0)).epsilon(1e-12));

    // Saturate the output layer toward the true class.
    MlpArchitecture tiny;
    tiny.input_dim = 3;
    tiny.hidden = {};
    auto direct = init_model(tiny, 1);
    direct.layers[0].weights = 60.0 * Eigen::MatrixXd::Identity(3, 3);
    direct.layers[0].bias.setZero();
    Eigen::MatrixXd xi = Eigen::MatrixXd::Identity(3, 3);
    Eigen::MatrixXd yi = Eigen::MatrixXd::Identity(3, 3);
    const auto perfect = loss_and_grads(direct, xi, yi, cfg, rng);
    CHECK(perfect.loss <= 1e-9);
}

TEST_CASE("backprop matches central finite differences on random networks") {
    RngStream rng(11);
    int checked = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const int input_dim = 2 + static_cast<int>(rng.uniform_int(4));
        std::vector<int> hidden;
        const int n_hidden = 1 + static_cast<int>(rng.uniform_int(2));
        for (int l = 0; l < n_hidden; ++l) {
            hidden.push_back(2 + static_cast<int>(rng.uniform_int(4)));
        }
        auto params = random_small_model(rng, input_dim, hidden);

        const int batch = 1 + static_cast<int>(rng.uniform_int(4));
        Eigen::MatrixXd x(batch, input_dim);
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            for (Eigen::Index j = 0; j < x.cols(); ++j) {
                x(i, j) = rng.uniform(-1.5, 1.5);
            }
        }
        Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(batch, 3);
        for (int i = 0; i < batch; ++i) {
            onehot(i, static_cast<int>(rng.uniform_int(3))) = 1.0;
        }

        TrainConfig cfg = no_dropout_config();
        cfg.output_activation = (trial % 2 == 0)
                                    ? OutputActivation::Softmax
                                    : OutputActivation::SigmoidNormalized;
        RngStream dropout_rng(1);
        const auto got = loss_and_grads(params, x, onehot, cfg, dropout_rng);
        const auto expected = oracles::finite_difference_grads(
            params, x, onehot, cfg.output_activation == OutputActivation::Softmax);
        // The loss itself must agree with the independent plain-loop forward.
        const double plain = oracles::loss_plain(
            params, x, onehot, cfg.output_activation == OutputActivation::Softmax);
        CHECK(got.loss == doctest::Approx(plain).epsilon(1e-10));
        const double err = oracles::max_relative_error(got.grads, expected);
        CHECK(err < 1e-4);
        ++checked;
    }
    CHECK(checked == 100);
}

TEST_CASE("dropout is inverted and unbiased through a linear readout") {
    // One hidden unit; log(p0/p1) is linear in its post-dropout output.
    MlpArchitecture arch;
    arch.input_dim = 1;
    arch.hidden = {1};
    auto params = init_model(arch, 3);
    params.layers[0].weights(0, 0) = 1.0;
    params.layers[0].bias[0] = 0.0;
    params.layers[1].weights(0, 0) = 0.7;
    params.layers[1].weights(0, 1) = -0.4;
    params.layers[1].weights(0, 2) = 0.1;
    params.layers[1].bias.setZero();

    Eigen::MatrixXd x(1, 1);
    x(0, 0) = 1.3;  // ReLU active

    TrainConfig cfg;
    cfg.dropout_rates = {0.3, 0.0, 0.0};
    const auto infer = predict_proba(params, x);
    const double reference = std::log(infer(0, 0) / infer(0, 1));

    RngStream rng(17);
    double mean_readout = 0.0;
    int dropped = 0;
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) {
        const auto probs = forward_training(params, x, cfg, rng);
        mean_readout += std::log(probs(0, 0) / probs(0, 1));
        if (probs(0, 0) == probs(0, 1)) {
            ++dropped;
        }
    }
    mean_readout /= draws;
    CHECK(mean_readout == doctest::Approx(reference).epsilon(0.02));
    // The drop rate itself should be near 30%.
    CHECK(static_cast<double>(dropped) / draws ==
          doctest::Approx(0.3).epsilon(0.1));
}

TEST_CASE("agency_training trivial cases") {
    RngStream rng(23);
    const auto params = random_small_model(rng, 4, {6, 4});
    Eigen::MatrixXd x = Eigen::MatrixXd::Random(10, 4);
    std::vector<Label> y(10, Label::Episodic);

    TrainConfig cfg = no_dropout_config();
    cfg.epochs = 0;
    const auto unchanged = agency_training(params, x, y, cfg);
    CHECK(params.max_abs_diff(unchanged) == 0.0);

    cfg.epochs = 1;
    cfg.batch_size = 10;
    cfg.learning_rate = 0.0;
    const auto frozen = agency_training(params, x, y, cfg);
    CHECK(params.max_abs_diff(frozen) == 0.0);

    cfg.learning_rate = 0.02;
    CHECK_THROWS_AS(
        agency_training(params, Eigen::MatrixXd(0, 4), {}, cfg),
        std::invalid_argument);
}

TEST_CASE("agency_training is bit-reproducible given the seed") {
    RngStream rng(29);
    const auto params = random_small_model(rng, 3, {8});
    Eigen::MatrixXd x(40, 3);
    std::vector<Label> y;
    for (Eigen::Index i = 0; i < 40; ++i) {
        for (Eigen::Index j = 0; j < 3; ++j) {
            x(i, j) = rng.uniform(-1, 1);
        }
        y.push_back(static_cast<Label>(i % 3));
    }
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.batch_size = 16;
    cfg.dropout_rates = {0.2, 0.1, 0.0};
    cfg.seed = 991;
    const auto a = agency_training(params, x, y, cfg);
    const auto b = agency_training(params, x, y, cfg);
    CHECK(a.max_abs_diff(b) == 0.0);

    cfg.seed = 992;
    const auto c = agency_training(params, x, y, cfg);
    CHECK(a.max_abs_diff(c) > 0.0);
}

TEST_CASE("training learns three separated gaussians") {
    RngStream data_rng(37);
    Eigen::MatrixXd x;
    std::vector<Label> y;
    oracles::gaussian_blobs(40, 0.7, x, y, data_rng);

    const double oracle_accuracy = oracles::logistic_train_accuracy(x, y);
    CHECK(oracle_accuracy >= 0.9);

    TrainConfig cfg;
    cfg.epochs = 50;
    cfg.batch_size = 32;
    cfg.seed = 4;
    auto model = init_model(2, 8);
    TrainStats stats;
    model = agency_training(std::move(model), x, y, cfg, &stats);

    const auto predictions = predict(model, x);
    int correct = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        correct += predictions[i] == y[i] ? 1 : 0;
    }
    const double accuracy =
        static_cast<double>(correct) / static_cast<double>(predictions.size());
    CHECK(accuracy >= 0.95);
    REQUIRE(stats.epoch_mean_loss.size() == 50);
}

TEST_CASE("mean epoch loss decreases for most seeds") {
    RngStream data_rng(41);
    Eigen::MatrixXd x;
    std::vector<Label> y;
    oracles::gaussian_blobs(30, 0.8, x, y, data_rng);

    int improved = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        TrainConfig cfg;
        cfg.epochs = 12;
        cfg.batch_size = 16;
        cfg.seed = seed;
        auto model = init_model(2, 100 + seed);
        TrainStats stats;
        agency_training(std::move(model), x, y, cfg, &stats);
        if (stats.epoch_mean_loss.back() < stats.epoch_mean_loss.front()) {
            ++improved;
        }
    }
    CHECK(improved >= 9);
}

TEST_CASE("float32 path trains behind the config flag") {
    RngStream data_rng(43);
    Eigen::MatrixXd x;
    std::vector<Label> y;
    oracles::gaussian_blobs(40, 0.7, x, y, data_rng);

    TrainConfig cfg;
    cfg.epochs = 40;
    cfg.batch_size = 32;
    cfg.seed = 9;
    cfg.use_float32 = true;
    auto model = agency_training(init_model(2, 15), x, y, cfg);
    CHECK(model.all_finite());
    const auto predictions = predict(model, x);
    int correct = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        correct += predictions[i] == y[i] ? 1 : 0;
    }
    CHECK(static_cast<double>(correct) / predictions.size() >= 0.9);
}

TEST_CASE("predict agrees with a brute-force argmax scan") {
    RngStream rng(47);
    const auto params = random_small_model(rng, 4, {6});
    Eigen::MatrixXd x = Eigen::MatrixXd::Random(50, 4);
    const auto probs = predict_proba(params, x);
    const auto labels = predict(params, x);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        int best = 0;
        for (int j = 1; j < 3; ++j) {
            if (probs(i, j) > probs(i, best)) {
                best = j;
            }
        }
        CHECK(labels[static_cast<std::size_t>(i)] == static_cast<Label>(best));
    }
}

TEST_CASE("parameter container round trips and rejects bad input") {
    RngStream rng(53);
    const auto params = random_small_model(rng, 5, {7, 3});

    std::stringstream binary;
    save_parameters(binary, params);
    const auto loaded = load_parameters(binary);
    CHECK(params.max_abs_diff(loaded) == 0.0);

    std::stringstream text;
    export_parameters_text(text, params);
    const auto imported = import_parameters_text(text);
    CHECK(params.max_abs_diff(imported) == 0.0);

    std::stringstream bad("XXXX garbage");
    CHECK_THROWS(load_parameters(bad));

    std::stringstream truncated;
    save_parameters(truncated, params);
    std::string bytes = truncated.str();
    bytes.resize(bytes.size() / 2);
    std::stringstream half(bytes);
    CHECK_THROWS(load_parameters(half));
}
