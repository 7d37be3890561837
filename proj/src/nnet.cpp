#include "shelterfl/nnet.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little,
              "parameter container assumes a little-endian host");

namespace shelterfl {

namespace {

constexpr double kProbFloor = 1e-12;

// The numeric engine is templated on the scalar so 32-bit training is the
// same code path as the default 64-bit one. Dropout masks are drawn from the
// stream as doubles either way, so both precisions consume identical draws.
template <typename Scalar>
struct Engine {
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    struct Params {
        std::vector<Mat> weights;
        std::vector<Vec> bias;

        std::size_t n_layers() const { return weights.size(); }
    };

    static Params from_model(const ModelParameters& model) {
        Params p;
        p.weights.reserve(model.layers.size());
        p.bias.reserve(model.layers.size());
        for (const auto& layer : model.layers) {
            p.weights.push_back(layer.weights.template cast<Scalar>());
            p.bias.push_back(layer.bias.template cast<Scalar>());
        }
        return p;
    }

    static ModelParameters to_model(const Params& p) {
        ModelParameters model;
        model.layers.reserve(p.weights.size());
        for (std::size_t i = 0; i < p.weights.size(); ++i) {
            model.layers.push_back({p.weights[i].template cast<double>(),
                                    p.bias[i].template cast<double>()});
        }
        return model;
    }

    static Params zeros_like(const Params& shape) {
        Params out;
        for (std::size_t i = 0; i < shape.weights.size(); ++i) {
            out.weights.push_back(
                Mat::Zero(shape.weights[i].rows(), shape.weights[i].cols()));
            out.bias.push_back(Vec::Zero(shape.bias[i].size()));
        }
        return out;
    }

    struct Cache {
        std::vector<Mat> activations;  // activations[0] = input batch
        std::vector<Mat> pre_act;      // linear outputs per layer
        std::vector<Mat> masks;        // dropout masks (empty when unused)
        Mat probs;
    };

    static Mat output_probs(const Mat& z, OutputActivation activation) {
        Mat probs(z.rows(), z.cols());
        if (activation == OutputActivation::Softmax) {
            for (Eigen::Index i = 0; i < z.rows(); ++i) {
                const Scalar zmax = z.row(i).maxCoeff();
                probs.row(i) = (z.row(i).array() - zmax).exp();
                probs.row(i) /= probs.row(i).sum();
            }
        } else {
            // Per-class sigmoid renormalized to a probability row.
            probs = ((-z.array()).exp() + Scalar(1)).inverse();
            for (Eigen::Index i = 0; i < probs.rows(); ++i) {
                const Scalar total = probs.row(i).sum();
                if (total > Scalar(0)) {
                    probs.row(i) /= total;
                } else {
                    probs.row(i).setConstant(Scalar(1) / Scalar(probs.cols()));
                }
            }
        }
        return probs;
    }

    static double dropout_rate_for(const TrainConfig& cfg, std::size_t layer) {
        return layer < cfg.dropout_rates.size() ? cfg.dropout_rates[layer] : 0.0;
    }

    // Forward pass; `training` enables inverted dropout. Mask entries are
    // drawn row-major per hidden layer so the draw order is well defined.
    static Cache forward(const Params& p, const Mat& batch,
                         const TrainConfig& cfg, bool training,
                         RngStream* dropout_rng) {
        const std::size_t n_layers = p.n_layers();
        Cache cache;
        cache.activations.resize(n_layers + 1);
        cache.pre_act.resize(n_layers);
        cache.masks.resize(n_layers);
        cache.activations[0] = batch;

        for (std::size_t l = 0; l < n_layers; ++l) {
            Mat z = cache.activations[l] * p.weights[l];
            z.rowwise() += p.bias[l].transpose();
            cache.pre_act[l] = z;
            if (l + 1 == n_layers) {
                cache.probs = output_probs(z, cfg.output_activation);
                cache.activations[l + 1] = cache.probs;
                break;
            }
            Mat a = z.cwiseMax(Scalar(0));
            const double rate = dropout_rate_for(cfg, l);
            if (training && rate > 0.0) {
                const Scalar keep = Scalar(1.0 - rate);
                Mat mask(a.rows(), a.cols());
                for (Eigen::Index i = 0; i < a.rows(); ++i) {
                    for (Eigen::Index j = 0; j < a.cols(); ++j) {
                        mask(i, j) = dropout_rng->bernoulli(rate)
                                         ? Scalar(0)
                                         : Scalar(1) / keep;
                    }
                }
                a = a.cwiseProduct(mask);
                cache.masks[l] = std::move(mask);
            }
            cache.activations[l + 1] = std::move(a);
        }
        return cache;
    }

    static double mean_cross_entropy(const Mat& probs, const Mat& onehot) {
        double total = 0.0;
        for (Eigen::Index i = 0; i < probs.rows(); ++i) {
            for (Eigen::Index j = 0; j < probs.cols(); ++j) {
                if (onehot(i, j) > Scalar(0.5)) {
                    const double p = std::min(
                        1.0, std::max(kProbFloor, static_cast<double>(probs(i, j))));
                    total -= std::log(p);
                }
            }
        }
        return total / static_cast<double>(probs.rows());
    }

    static std::pair<double, Params> loss_and_grads(const Params& p,
                                                    const Mat& batch,
                                                    const Mat& onehot,
                                                    const TrainConfig& cfg,
                                                    RngStream& dropout_rng) {
        const std::size_t n_layers = p.n_layers();
        Cache cache = forward(p, batch, cfg, true, &dropout_rng);
        const double loss = mean_cross_entropy(cache.probs, onehot);
        const Scalar inv_m = Scalar(1) / Scalar(batch.rows());

        Params grads = zeros_like(p);
        Mat delta;  // dL/dZ for the current layer
        if (cfg.output_activation == OutputActivation::Softmax) {
            delta = (cache.probs - onehot) * inv_m;
        } else {
            // p_i = s_i / sum(s); dL/ds = (1/sum - y/s) / m, dz = dL/ds * s(1-s).
            const Mat s = ((-cache.pre_act[n_layers - 1].array()).exp() + Scalar(1))
                              .inverse()
                              .matrix();
            delta.resize(s.rows(), s.cols());
            for (Eigen::Index i = 0; i < s.rows(); ++i) {
                const Scalar total = std::max(
                    s.row(i).sum(), Scalar(kProbFloor));
                for (Eigen::Index j = 0; j < s.cols(); ++j) {
                    const Scalar sij = std::max(s(i, j), Scalar(kProbFloor));
                    const Scalar dl_ds =
                        (Scalar(1) / total - onehot(i, j) / sij) * inv_m;
                    delta(i, j) = dl_ds * sij * (Scalar(1) - sij);
                }
            }
        }

        for (std::size_t l = n_layers; l-- > 0;) {
            grads.weights[l].noalias() =
                cache.activations[l].transpose() * delta;
            grads.bias[l] = delta.colwise().sum().transpose();
            if (l == 0) {
                break;
            }
            Mat prev = delta * p.weights[l].transpose();
            if (cache.masks[l - 1].size() > 0) {
                prev = prev.cwiseProduct(cache.masks[l - 1]);
            }
            delta = prev.cwiseProduct(
                (cache.pre_act[l - 1].array() > Scalar(0)).template cast<Scalar>().matrix());
        }
        return {loss, std::move(grads)};
    }

    struct Adam {
        Params m, v;
        long step = 0;
    };

    static void adam_step(Params& p, Adam& adam, const Params& grads,
                          const TrainConfig& cfg) {
        const Scalar beta1 = Scalar(cfg.adam_beta1);
        const Scalar beta2 = Scalar(cfg.adam_beta2);
        const Scalar eps = Scalar(cfg.adam_epsilon);
        const Scalar lr = Scalar(cfg.learning_rate);
        ++adam.step;
        const Scalar correction1 =
            Scalar(1) - std::pow(beta1, Scalar(adam.step));
        const Scalar correction2 =
            Scalar(1) - std::pow(beta2, Scalar(adam.step));

        for (std::size_t l = 0; l < p.n_layers(); ++l) {
            auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
                m = beta1 * m + (Scalar(1) - beta1) * g;
                v = (beta2 * v.array() + (Scalar(1) - beta2) * g.array().square())
                        .matrix();
                param.array() -= lr * (m.array() / correction1) /
                                 ((v.array() / correction2).sqrt() + eps);
            };
            update(p.weights[l], adam.m.weights[l], adam.v.weights[l],
                   grads.weights[l]);
            update(p.bias[l], adam.m.bias[l], adam.v.bias[l], grads.bias[l]);
        }
    }

    static ModelParameters train(const ModelParameters& model,
                                 const Eigen::MatrixXd& x,
                                 const Eigen::MatrixXd& onehot,
                                 const TrainConfig& cfg, TrainStats* stats) {
        Params p = from_model(model);
        const Mat xs = x.template cast<Scalar>();
        const Mat ys = onehot.template cast<Scalar>();

        Adam adam{zeros_like(p), zeros_like(p), 0};
        RngStream shuffle_rng(derive_seed(cfg.seed, "train/shuffle"));
        RngStream dropout_rng(derive_seed(cfg.seed, "train/dropout"));

        const Eigen::Index m = xs.rows();
        std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
        std::iota(order.begin(), order.end(), 0);

        for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
            shuffle_rng.shuffle(order);
            double loss_sum = 0.0;
            int n_batches = 0;
            for (Eigen::Index start = 0; start < m; start += cfg.batch_size) {
                const Eigen::Index size =
                    std::min<Eigen::Index>(cfg.batch_size, m - start);
                Mat xb(size, xs.cols());
                Mat yb(size, ys.cols());
                for (Eigen::Index r = 0; r < size; ++r) {
                    xb.row(r) = xs.row(order[static_cast<std::size_t>(start + r)]);
                    yb.row(r) = ys.row(order[static_cast<std::size_t>(start + r)]);
                }
                auto [loss, grads] = loss_and_grads(p, xb, yb, cfg, dropout_rng);
                adam_step(p, adam, grads, cfg);
                loss_sum += loss;
                ++n_batches;
            }
            if (stats != nullptr) {
                stats->epoch_mean_loss.push_back(loss_sum /
                                                 std::max(1, n_batches));
            }
        }
        return to_model(p);
    }
};

void check_batch(const ModelParameters& params, const Eigen::MatrixXd& batch) {
    if (params.layers.empty()) {
        throw std::invalid_argument("model has no layers");
    }
    if (batch.cols() != params.layers.front().weights.rows()) {
        throw std::invalid_argument("batch width does not match input_dim");
    }
    if (!batch.allFinite()) {
        throw std::invalid_argument("batch contains non-finite values");
    }
}

}  // namespace

ModelParameters init_model(const MlpArchitecture& arch, std::uint64_t seed) {
    if (arch.input_dim < 1) {
        throw std::invalid_argument("init_model: input_dim must be >= 1");
    }
    for (int width : arch.hidden) {
        if (width < 1) {
            throw std::invalid_argument("init_model: hidden widths must be >= 1");
        }
    }
    std::vector<int> dims;
    dims.push_back(arch.input_dim);
    dims.insert(dims.end(), arch.hidden.begin(), arch.hidden.end());
    dims.push_back(arch.outputs);

    RngStream rng(derive_seed(seed, "init/he-uniform"));
    ModelParameters params;
    params.layers.reserve(dims.size() - 1);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const int fan_in = dims[l];
        const int fan_out = dims[l + 1];
        const double limit = std::sqrt(6.0 / fan_in);
        Eigen::MatrixXd w(fan_in, fan_out);
        for (int i = 0; i < fan_in; ++i) {
            for (int j = 0; j < fan_out; ++j) {
                w(i, j) = rng.uniform(-limit, limit);
            }
        }
        params.layers.push_back({std::move(w), Eigen::VectorXd::Zero(fan_out)});
    }
    return params;
}

ModelParameters init_model(int input_dim, std::uint64_t seed) {
    MlpArchitecture arch;
    arch.input_dim = input_dim;
    return init_model(arch, seed);
}

Eigen::MatrixXd predict_proba(const ModelParameters& params,
                              const Eigen::MatrixXd& batch,
                              OutputActivation activation) {
    check_batch(params, batch);
    TrainConfig cfg;
    cfg.output_activation = activation;
    auto cache = Engine<double>::forward(Engine<double>::from_model(params),
                                         batch, cfg, false, nullptr);
    return cache.probs;
}

std::vector<Label> predict(const ModelParameters& params,
                           const Eigen::MatrixXd& batch,
                           OutputActivation activation) {
    const Eigen::MatrixXd probs = predict_proba(params, batch, activation);
    std::vector<Label> labels(static_cast<std::size_t>(probs.rows()));
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        int best = 0;
        for (int j = 1; j < probs.cols(); ++j) {
            if (probs(i, j) > probs(i, best)) {  // ties keep the earlier label
                best = j;
            }
        }
        labels[static_cast<std::size_t>(i)] = static_cast<Label>(best);
    }
    return labels;
}

Eigen::MatrixXd forward_training(const ModelParameters& params,
                                 const Eigen::MatrixXd& batch,
                                 const TrainConfig& cfg,
                                 RngStream& dropout_rng) {
    check_batch(params, batch);
    auto cache = Engine<double>::forward(Engine<double>::from_model(params),
                                         batch, cfg, true, &dropout_rng);
    return cache.probs;
}

LossGrads loss_and_grads(const ModelParameters& params,
                         const Eigen::MatrixXd& batch,
                         const Eigen::MatrixXd& onehot, const TrainConfig& cfg,
                         RngStream& dropout_rng) {
    check_batch(params, batch);
    if (onehot.rows() != batch.rows() || onehot.cols() != kNumClasses) {
        throw std::invalid_argument("loss_and_grads: bad one-hot shape");
    }
    auto [loss, grads] = Engine<double>::loss_and_grads(
        Engine<double>::from_model(params), batch, onehot, cfg, dropout_rng);
    return {loss, Engine<double>::to_model(grads)};
}

AdamState AdamState::like(const ModelParameters& shape) {
    return {ModelParameters::zeros_like(shape), ModelParameters::zeros_like(shape),
            0};
}

void adam_update(ModelParameters& params, AdamState& state,
                 const ModelParameters& grads, const TrainConfig& cfg) {
    auto p = Engine<double>::from_model(params);
    Engine<double>::Adam adam{Engine<double>::from_model(state.first_moment),
                              Engine<double>::from_model(state.second_moment),
                              state.step};
    Engine<double>::adam_step(p, adam, Engine<double>::from_model(grads), cfg);
    params = Engine<double>::to_model(p);
    state.first_moment = Engine<double>::to_model(adam.m);
    state.second_moment = Engine<double>::to_model(adam.v);
    state.step = adam.step;
}

Eigen::MatrixXd one_hot(const std::vector<Label>& labels) {
    Eigen::MatrixXd y =
        Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(labels.size()),
                              kNumClasses);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        y(static_cast<Eigen::Index>(i), static_cast<int>(labels[i])) = 1.0;
    }
    return y;
}

ModelParameters agency_training(ModelParameters model, const Eigen::MatrixXd& x,
                                const std::vector<Label>& y,
                                const TrainConfig& cfg, TrainStats* stats) {
    cfg.validate();
    check_batch(model, x);
    if (x.rows() == 0) {
        throw std::invalid_argument("agency_training: empty dataset");
    }
    if (static_cast<std::size_t>(x.rows()) != y.size()) {
        throw std::invalid_argument("agency_training: feature/label size mismatch");
    }
    if (cfg.epochs == 0) {
        return model;
    }
    const Eigen::MatrixXd onehot = one_hot(y);
    ModelParameters trained =
        cfg.use_float32 ? Engine<float>::train(model, x, onehot, cfg, stats)
                        : Engine<double>::train(model, x, onehot, cfg, stats);
    if (!trained.all_finite()) {
        throw std::runtime_error(
            "agency_training: non-finite parameters after update");
    }
    return trained;
}

namespace {

constexpr char kMagic[4] = {'S', 'F', 'L', 'M'};
constexpr std::uint32_t kFormatVersion = 1;

template <typename T>
void write_pod(std::ostream& out, const T& value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) {
        throw std::runtime_error("parameter container: truncated input");
    }
    return value;
}

}  // namespace

void save_parameters(std::ostream& out, const ModelParameters& params) {
    out.write(kMagic, sizeof(kMagic));
    write_pod(out, kFormatVersion);
    write_pod(out, static_cast<std::uint32_t>(params.layers.size()));
    for (const auto& layer : params.layers) {
        write_pod(out, static_cast<std::uint32_t>(layer.weights.rows()));
        write_pod(out, static_cast<std::uint32_t>(layer.weights.cols()));
        for (Eigen::Index i = 0; i < layer.weights.rows(); ++i) {
            for (Eigen::Index j = 0; j < layer.weights.cols(); ++j) {
                write_pod(out, layer.weights(i, j));
            }
        }
        for (Eigen::Index j = 0; j < layer.bias.size(); ++j) {
            write_pod(out, layer.bias[j]);
        }
    }
}

ModelParameters load_parameters(std::istream& in) {
    char magic[4];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw std::runtime_error("parameter container: bad magic");
    }
    const auto version = read_pod<std::uint32_t>(in);
    if (version != kFormatVersion) {
        throw std::runtime_error("parameter container: unsupported version " +
                                 std::to_string(version));
    }
    const auto n_layers = read_pod<std::uint32_t>(in);
    ModelParameters params;
    params.layers.reserve(n_layers);
    for (std::uint32_t l = 0; l < n_layers; ++l) {
        const auto rows = read_pod<std::uint32_t>(in);
        const auto cols = read_pod<std::uint32_t>(in);
        Eigen::MatrixXd w(rows, cols);
        for (std::uint32_t i = 0; i < rows; ++i) {
            for (std::uint32_t j = 0; j < cols; ++j) {
                w(i, j) = read_pod<double>(in);
            }
        }
        Eigen::VectorXd b(cols);
        for (std::uint32_t j = 0; j < cols; ++j) {
            b[j] = read_pod<double>(in);
        }
        params.layers.push_back({std::move(w), std::move(b)});
    }
    return params;
}

void save_parameters_file(const std::string& path,
                          const ModelParameters& params) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open for writing: " + path);
    }
    save_parameters(out, params);
}

ModelParameters load_parameters_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open for reading: " + path);
    }
    return load_parameters(in);
}

void export_parameters_text(std::ostream& out, const ModelParameters& params) {
    out << "shelterfl-model v" << kFormatVersion << '\n';
    out << "layers " << params.layers.size() << '\n';
    char buf[32];
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        const auto& layer = params.layers[l];
        out << "layer " << l << ' ' << layer.weights.rows() << ' '
            << layer.weights.cols() << '\n';
        for (Eigen::Index i = 0; i < layer.weights.rows(); ++i) {
            out << 'w';
            for (Eigen::Index j = 0; j < layer.weights.cols(); ++j) {
                std::snprintf(buf, sizeof(buf), "%.17g", layer.weights(i, j));
                out << ' ' << buf;
            }
            out << '\n';
        }
        out << 'b';
        for (Eigen::Index j = 0; j < layer.bias.size(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", layer.bias[j]);
            out << ' ' << buf;
        }
        out << '\n';
    }
}

ModelParameters import_parameters_text(std::istream& in) {
    std::string token;
    std::uint32_t version = 0;
    in >> token;
    if (!in || token != "shelterfl-model") {
        throw std::runtime_error("parameter text: bad header");
    }
    in >> token;
    if (token.size() < 2 || token[0] != 'v') {
        throw std::runtime_error("parameter text: bad version token");
    }
    version = static_cast<std::uint32_t>(std::stoul(token.substr(1)));
    if (version != kFormatVersion) {
        throw std::runtime_error("parameter text: unsupported version");
    }
    std::size_t n_layers = 0;
    in >> token >> n_layers;
    if (!in || token != "layers") {
        throw std::runtime_error("parameter text: bad layer count");
    }
    ModelParameters params;
    params.layers.reserve(n_layers);
    for (std::size_t l = 0; l < n_layers; ++l) {
        std::size_t index = 0;
        Eigen::Index rows = 0, cols = 0;
        in >> token >> index >> rows >> cols;
        if (!in || token != "layer" || index != l) {
            throw std::runtime_error("parameter text: bad layer header");
        }
        Eigen::MatrixXd w(rows, cols);
        for (Eigen::Index i = 0; i < rows; ++i) {
            in >> token;
            if (token != "w") {
                throw std::runtime_error("parameter text: expected weight row");
            }
            for (Eigen::Index j = 0; j < cols; ++j) {
                in >> w(i, j);
            }
        }
        in >> token;
        if (token != "b") {
            throw std::runtime_error("parameter text: expected bias row");
        }
        Eigen::VectorXd b(cols);
        for (Eigen::Index j = 0; j < cols; ++j) {
            in >> b[j];
        }
        if (!in) {
            throw std::runtime_error("parameter text: truncated input");
        }
        params.layers.push_back({std::move(w), std::move(b)});
    }
    return params;
}

}  // namespace shelterfl
