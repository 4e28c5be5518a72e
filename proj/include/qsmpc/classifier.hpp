#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qsmpc/numerics.hpp"
#include "qsmpc/system.hpp"

namespace qsmpc {

// ============================================================================
// Direction codec
// ============================================================================
// Bijection between class indices and the distinct aggregate directions B_q·u
// over the ternary alphabet, ordered by their 1e-9 grid keys. Each direction
// carries a canonical input: a minimum-1-norm u producing it, preferring
// support on earlier columns, then lexicographically smallest (-1 < 0 < 1).
// For the four-column reference plant this maps (1,0) to (1,0,0,0).
class DirectionCodec {
  public:
    DirectionCodec() = default;
    DirectionCodec(std::vector<Vec> directions, std::vector<Ternary> canonical_inputs);

    [[nodiscard]] std::size_t size() const noexcept { return directions_.size(); }
    [[nodiscard]] const std::vector<Vec>& directions() const noexcept { return directions_; }
    [[nodiscard]] const std::vector<Ternary>& canonical_inputs() const noexcept { return canonical_; }

    // Class index of a direction, matched on a 1e-9 grid.
    [[nodiscard]] std::optional<std::size_t> class_of(std::span<const double> direction) const;
    // Class of B_q·u.
    [[nodiscard]] std::optional<std::size_t> class_of_input(const Mat& B_q, std::span<const int> u) const;

  private:
    std::vector<Vec> directions_;
    std::vector<Ternary> canonical_;
    std::map<std::vector<std::int64_t>, std::size_t> index_;
};

[[nodiscard]] std::vector<std::int64_t> direction_key(std::span<const double> direction);

// Throws GuardExceeded when m exceeds the alphabet enumeration limit.
[[nodiscard]] DirectionCodec codec_build(const QuantizedPlant& plant);

// ============================================================================
// Dense feed-forward classifier
// ============================================================================

struct DenseLayer {
    std::size_t in = 0;
    std::size_t out = 0;
    Vec weights;  // out x in, row-major
    Vec bias;     // out
};

// Hidden layers use ReLU; the output layer is a softmax over classes.
class Mlp {
  public:
    Mlp() = default;
    // All parameters zero.
    explicit Mlp(std::vector<std::size_t> layer_dims);
    // Uniform in ±sqrt(6/(fan_in+fan_out)), biases zero.
    static Mlp initialized(std::vector<std::size_t> layer_dims, std::uint64_t seed);

    [[nodiscard]] const std::vector<std::size_t>& layer_dims() const noexcept { return dims_; }
    [[nodiscard]] std::size_t input_dim() const noexcept { return dims_.front(); }
    [[nodiscard]] std::size_t class_count() const noexcept { return dims_.back(); }
    [[nodiscard]] std::vector<DenseLayer>& layers() noexcept { return layers_; }
    [[nodiscard]] const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
    [[nodiscard]] std::size_t parameter_count() const noexcept;

    // Pre-softmax scores.
    [[nodiscard]] Vec logits(std::span<const double> features) const;
    // Class probabilities.
    [[nodiscard]] Vec forward(std::span<const double> features) const;

  private:
    std::vector<std::size_t> dims_;
    std::vector<DenseLayer> layers_;
};

inline const std::vector<std::size_t> kDefaultHiddenLayers{512, 480, 256};

[[nodiscard]] Vec softmax(std::span<const double> scores);

struct Gradients {
    std::vector<Vec> weights;
    std::vector<Vec> bias;

    static Gradients zeros_like(const Mlp& mlp);
    void scale(double s);
};

// Cross-entropy of one sample; adds its gradient into grad.
double loss_and_gradient(const Mlp& mlp, std::span<const double> features, std::size_t label, Gradients& grad);

[[nodiscard]] double cross_entropy(const Mlp& mlp, std::span<const double> features, std::size_t label);

// Largest relative discrepancy between backpropagated gradients and central
// differences (step 1e-5 by default) over every parameter. The relative error
// of a pair is |a - n| / max(|a|, |n|, 1e-3).
[[nodiscard]] double gradient_check(const Mlp& mlp, std::span<const double> features, std::size_t label,
                                    double step = 1e-5);

struct Dataset {
    std::size_t feature_dim = 0;
    std::vector<Vec> features;
    std::vector<std::size_t> labels;

    [[nodiscard]] std::size_t size() const noexcept { return labels.size(); }
    void push_back(Vec f, std::size_t label);
};

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct TrainOptions {
    std::size_t epochs = 20;
    std::size_t batch_size = 32;
    AdamConfig adam;
    // Fraction of rows used for training when no separate test set is given.
    double split = 0.8;
    std::uint64_t seed = 0;
};

struct TrainReport {
    std::vector<double> epoch_losses;
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
    std::size_t train_rows = 0;
    std::size_t test_rows = 0;
    bool diverged = false;

    friend bool operator==(const TrainReport&, const TrainReport&) = default;
};

// Mini-batch Adam on mean cross-entropy. With test == nullptr the data is
// shuffled (seeded) and split; otherwise all of data trains and test scores.
TrainReport train(Mlp& mlp, const Dataset& data, const TrainOptions& opts, const Dataset* test = nullptr);

[[nodiscard]] std::size_t predict_class(const Mlp& mlp, std::span<const double> features);
[[nodiscard]] double accuracy(const Mlp& mlp, const Dataset& data);

// Argmax class (lowest index on ties) mapped to its canonical input.
[[nodiscard]] Ternary predict_input(const Mlp& mlp, const DirectionCodec& codec, std::span<const double> features);

// ============================================================================
// Persistence
// ============================================================================

inline constexpr int kFeatureSchemaVersion = 1;

struct ClassifierModel {
    Mlp mlp;
    DirectionCodec codec;
    int feature_schema_version = kFeatureSchemaVersion;
};

// {"directions": [...], "canonical_inputs": [...]}, the same object a model
// file stores under "codec".
[[nodiscard]] std::string codec_to_json(const DirectionCodec& codec);
[[nodiscard]] DirectionCodec codec_from_json(const std::string& text);

[[nodiscard]] std::string model_to_json(const ClassifierModel& model);
[[nodiscard]] ClassifierModel model_from_json(const std::string& text);
void save_model(const std::string& path, const ClassifierModel& model);
[[nodiscard]] ClassifierModel load_model(const std::string& path);

} // namespace qsmpc
