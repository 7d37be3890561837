#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace shelterfl {

/// Calendar day as days since 1970-01-01. All windowing and episode logic is
/// day-based; multiple stays by one client on the same day collapse to one
/// sleep-day.
using Day = std::int32_t;

Day day_from_ymd(int year, int month, int day);
void ymd_from_day(Day day, int& year, int& month, int& dom);
std::string format_day(Day day);                // ISO-8601 "YYYY-MM-DD"
Day parse_day(std::string_view text);           // throws std::invalid_argument

/// One night a client slept at an emergency shelter.
struct StayRecord {
    std::string client_id;
    std::string agency_id;
    Day date = 0;
};

/// A client's full sleep-day history: strictly increasing, no duplicates,
/// non-empty.
struct ClientHistory {
    std::string client_id;
    std::vector<Day> stays;

    Day first_day() const { return stays.front(); }
    void validate() const;  // throws std::invalid_argument on violation
};

/// One agency's horizontal partition of client histories.
struct AgencyDataset {
    std::string agency_id;
    std::vector<ClientHistory> clients;

    std::size_t size() const { return clients.size(); }
    void validate() const;  // unique client ids, valid histories
};

/// Per-agency view of a cohort, keyed by agency id.
using CohortView = std::map<std::string, AgencyDataset>;

/// (N_S, N_E): sleep days and episodes inside the prediction window.
struct StayTuple {
    int n_stays = 0;
    int n_episodes = 0;
};

/// Shelter-use pattern class. The order is fixed so that confusion-matrix
/// axes and serialized output are deterministic.
enum class Label : int { Transitional = 0, Episodic = 1, Chronic = 2 };

inline constexpr int kNumClasses = 3;
inline constexpr Label kAllLabels[kNumClasses] = {Label::Transitional,
                                                  Label::Episodic,
                                                  Label::Chronic};

const char* to_string(Label label);
Label label_from_string(std::string_view text);  // throws on unknown

/// Windowing parameters: observation window T_o subdivided into T_b bins,
/// prediction window T_p for labeling, and the episode gap threshold.
struct WindowConfig {
    int observation_days = 90;   // T_o
    int n_bins = 10;             // T_b
    int prediction_days = 548;   // T_p
    int episode_gap = 30;

    int feature_dim() const { return n_bins + 2; }
    void validate() const;
};

/// Model input row: T_b bin counts, then total stays, then total episodes,
/// all within the observation window. The label is attached later by one of
/// the labeling paths.
struct FeatureVector {
    Eigen::VectorXd values;
    std::optional<Label> label;
    std::string client_id;
    std::string agency_id;
};

/// The three role-assigned cluster centroids in (N_S, N_E) space.
struct LabelCentroids {
    Eigen::Vector2d transitional;
    Eigen::Vector2d episodic;
    Eigen::Vector2d chronic;

    const Eigen::Vector2d& of(Label label) const;
    void validate() const;  // pairwise distinct; role geometry consistent
};

/// Ordered dense weights/biases for the fixed classifier architecture
/// input -> 512 -> 128 -> 16 -> 3. This is the unit federated averaging
/// operates on.
struct ModelParameters {
    struct Layer {
        Eigen::MatrixXd weights;  // fan_in x fan_out
        Eigen::VectorXd bias;     // fan_out
    };
    std::vector<Layer> layers;

    bool same_shape(const ModelParameters& other) const;
    bool all_finite() const;
    std::size_t scalar_count() const;

    /// this += scale * other (shapes must match).
    void axpy(double scale, const ModelParameters& other);
    void scale(double factor);
    void set_zero();
    static ModelParameters zeros_like(const ModelParameters& shape);

    /// Largest absolute entry-wise difference.
    double max_abs_diff(const ModelParameters& other) const;
};

enum class OutputActivation { Softmax, SigmoidNormalized };

/// Local-training hyperparameters (Adam + mini-batch settings).
struct TrainConfig {
    double learning_rate = 0.02;
    int batch_size = 500;
    int epochs = 200;
    std::array<double, 3> dropout_rates = {0.4, 0.2, 0.1};
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    OutputActivation output_activation = OutputActivation::Softmax;
    bool use_float32 = false;  // training math in 32-bit when set
    std::uint64_t seed = 0;

    void validate() const;
};

/// Federation schedule: T communication rounds of E local epochs across the
/// participating agencies.
struct FedConfig {
    int rounds = 75;
    int local_epochs = 15;
    std::vector<std::string> agencies;

    void validate() const;
};

}  // namespace shelterfl
