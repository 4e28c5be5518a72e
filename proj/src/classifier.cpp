#include "qsmpc/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <utility>

#include <json.hpp>

namespace qsmpc {

// ============================================================================
// Direction codec
// ============================================================================

std::vector<std::int64_t> direction_key(std::span<const double> direction) {
    std::vector<std::int64_t> key(direction.size());
    for (std::size_t i = 0; i < direction.size(); ++i)
        key[i] = std::llround(direction[i] * 1e9);
    return key;
}

DirectionCodec::DirectionCodec(std::vector<Vec> directions, std::vector<Ternary> canonical_inputs)
    : directions_(std::move(directions)), canonical_(std::move(canonical_inputs)) {
    if (directions_.size() != canonical_.size())
        throw DimensionError("DirectionCodec: directions and canonical inputs differ in count");
    for (std::size_t i = 0; i < directions_.size(); ++i) {
        if (!is_ternary(canonical_[i]))
            throw DimensionError("DirectionCodec: canonical input is not ternary");
        if (!index_.emplace(direction_key(directions_[i]), i).second)
            throw Error("DirectionCodec: duplicate direction");
    }
}

std::optional<std::size_t> DirectionCodec::class_of(std::span<const double> direction) const {
    const auto it = index_.find(direction_key(direction));
    if (it == index_.end())
        return std::nullopt;
    return it->second;
}

std::optional<std::size_t> DirectionCodec::class_of_input(const Mat& B_q, std::span<const int> u) const {
    const Vec ur = to_real(u);
    return class_of(B_q * ur);
}

namespace {

// Canonical-input order: smaller ‖u‖₁ first; among equal norms the input
// whose support starts at earlier columns (|u| lexicographically larger).
// Remaining ties keep the lexicographically smaller u, the one met first.
bool preferred(const Ternary& a, int norm_a, const Ternary& b, int norm_b) {
    if (norm_a != norm_b)
        return norm_a < norm_b;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const int ma = std::abs(a[i]);
        const int mb = std::abs(b[i]);
        if (ma != mb)
            return ma > mb;
    }
    return false;
}

} // namespace

DirectionCodec codec_build(const QuantizedPlant& plant) {
    const auto alphabet = enumerate_alphabet(plant.m());

    struct Entry {
        Vec direction;
        Ternary input;
        int norm1 = 0;
    };
    std::map<std::vector<std::int64_t>, Entry> best;
    for (const auto& u : alphabet) {
        Vec d = plant.B_q() * to_real(u);
        const int norm1 = std::accumulate(u.begin(), u.end(), 0, [](int acc, int v) { return acc + std::abs(v); });
        auto key = direction_key(d);
        auto it = best.find(key);
        if (it == best.end())
            best.emplace(std::move(key), Entry{std::move(d), u, norm1});
        else if (preferred(u, norm1, it->second.input, it->second.norm1))
            it->second = Entry{std::move(d), u, norm1};
    }

    std::vector<Vec> directions;
    std::vector<Ternary> inputs;
    for (auto& [key, e] : best) {
        directions.push_back(std::move(e.direction));
        inputs.push_back(std::move(e.input));
    }
    return DirectionCodec(std::move(directions), std::move(inputs));
}

// ============================================================================
// Mlp
// ============================================================================

Mlp::Mlp(std::vector<std::size_t> layer_dims) : dims_(std::move(layer_dims)) {
    if (dims_.size() < 2)
        throw DimensionError("Mlp: need at least an input and an output layer");
    for (std::size_t d : dims_)
        if (d == 0)
            throw DimensionError("Mlp: zero-width layer");
    for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
        DenseLayer layer;
        layer.in = dims_[l];
        layer.out = dims_[l + 1];
        layer.weights.assign(layer.in * layer.out, 0.0);
        layer.bias.assign(layer.out, 0.0);
        layers_.push_back(std::move(layer));
    }
}

Mlp Mlp::initialized(std::vector<std::size_t> layer_dims, std::uint64_t seed) {
    Mlp mlp(std::move(layer_dims));
    std::mt19937_64 rng(seed);
    for (auto& layer : mlp.layers_) {
        const double limit = std::sqrt(6.0 / static_cast<double>(layer.in + layer.out));
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (double& w : layer.weights)
            w = dist(rng);
    }
    return mlp;
}

std::size_t Mlp::parameter_count() const noexcept {
    std::size_t n = 0;
    for (const auto& l : layers_)
        n += l.weights.size() + l.bias.size();
    return n;
}

namespace {

void affine(const DenseLayer& layer, std::span<const double> in, Vec& out) {
    out.assign(layer.bias.begin(), layer.bias.end());
    for (std::size_t r = 0; r < layer.out; ++r) {
        const double* w = layer.weights.data() + r * layer.in;
        double acc = 0.0;
        for (std::size_t c = 0; c < layer.in; ++c)
            acc += w[c] * in[c];
        out[r] += acc;
    }
}

// Activations per layer; acts[0] is the input, acts.back() the logits.
std::vector<Vec> forward_pass(const Mlp& mlp, std::span<const double> features) {
    if (features.size() != mlp.input_dim())
        throw DimensionError("Mlp: feature vector has " + std::to_string(features.size()) + " entries, expected " +
                             std::to_string(mlp.input_dim()));
    const auto& layers = mlp.layers();
    std::vector<Vec> acts(layers.size() + 1);
    acts[0].assign(features.begin(), features.end());
    for (std::size_t l = 0; l < layers.size(); ++l) {
        affine(layers[l], acts[l], acts[l + 1]);
        if (l + 1 < layers.size())
            for (double& v : acts[l + 1])
                v = std::max(v, 0.0);
    }
    if (!all_finite(acts.back()))
        throw NonFiniteValue("Mlp: non-finite class score");
    return acts;
}

double log_sum_exp(std::span<const double> s) {
    const double mx = *std::max_element(s.begin(), s.end());
    double acc = 0.0;
    for (double v : s)
        acc += std::exp(v - mx);
    return mx + std::log(acc);
}

} // namespace

Vec Mlp::logits(std::span<const double> features) const { return std::move(forward_pass(*this, features).back()); }

Vec Mlp::forward(std::span<const double> features) const { return softmax(logits(features)); }

Vec softmax(std::span<const double> scores) {
    if (scores.empty())
        return {};
    const double mx = *std::max_element(scores.begin(), scores.end());
    Vec p(scores.size());
    double total = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        p[i] = std::exp(scores[i] - mx);
        total += p[i];
    }
    for (double& v : p)
        v /= total;
    return p;
}

Gradients Gradients::zeros_like(const Mlp& mlp) {
    Gradients g;
    for (const auto& l : mlp.layers()) {
        g.weights.emplace_back(l.weights.size(), 0.0);
        g.bias.emplace_back(l.bias.size(), 0.0);
    }
    return g;
}

void Gradients::scale(double s) {
    for (auto& w : weights)
        for (double& v : w)
            v *= s;
    for (auto& b : bias)
        for (double& v : b)
            v *= s;
}

double cross_entropy(const Mlp& mlp, std::span<const double> features, std::size_t label) {
    const Vec z = mlp.logits(features);
    if (label >= z.size())
        throw DimensionError("cross_entropy: label out of range");
    return log_sum_exp(z) - z[label];
}

double loss_and_gradient(const Mlp& mlp, std::span<const double> features, std::size_t label, Gradients& grad) {
    const auto acts = forward_pass(mlp, features);
    const Vec& z = acts.back();
    if (label >= z.size())
        throw DimensionError("loss_and_gradient: label out of range");
    const double loss = log_sum_exp(z) - z[label];

    const auto& layers = mlp.layers();
    Vec delta = softmax(z);
    delta[label] -= 1.0;
    for (std::size_t l = layers.size(); l-- > 0;) {
        const DenseLayer& layer = layers[l];
        const Vec& in = acts[l];
        double* gw = grad.weights[l].data();
        for (std::size_t r = 0; r < layer.out; ++r) {
            const double d = delta[r];
            grad.bias[l][r] += d;
            if (d == 0.0)
                continue;
            double* row = gw + r * layer.in;
            for (std::size_t c = 0; c < layer.in; ++c)
                row[c] += d * in[c];
        }
        if (l == 0)
            break;
        Vec prev(layer.in, 0.0);
        for (std::size_t r = 0; r < layer.out; ++r) {
            const double d = delta[r];
            if (d == 0.0)
                continue;
            const double* w = layer.weights.data() + r * layer.in;
            for (std::size_t c = 0; c < layer.in; ++c)
                prev[c] += w[c] * d;
        }
        // ReLU derivative, taken as 0 at the kink.
        for (std::size_t c = 0; c < layer.in; ++c)
            if (in[c] <= 0.0)
                prev[c] = 0.0;
        delta = std::move(prev);
    }
    return loss;
}

double gradient_check(const Mlp& mlp, std::span<const double> features, std::size_t label, double step) {
    Gradients analytic = Gradients::zeros_like(mlp);
    (void)loss_and_gradient(mlp, features, label, analytic);

    Mlp probe = mlp;
    double worst = 0.0;
    auto compare = [&](double& param, double a) {
        const double saved = param;
        param = saved + step;
        const double up = cross_entropy(probe, features, label);
        param = saved - step;
        const double down = cross_entropy(probe, features, label);
        param = saved;
        const double numeric = (up - down) / (2.0 * step);
        const double denom = std::max({std::abs(a), std::abs(numeric), 1e-3});
        worst = std::max(worst, std::abs(a - numeric) / denom);
    };
    for (std::size_t l = 0; l < probe.layers().size(); ++l) {
        auto& layer = probe.layers()[l];
        for (std::size_t i = 0; i < layer.weights.size(); ++i)
            compare(layer.weights[i], analytic.weights[l][i]);
        for (std::size_t i = 0; i < layer.bias.size(); ++i)
            compare(layer.bias[i], analytic.bias[l][i]);
    }
    return worst;
}

// ============================================================================
// Training
// ============================================================================

void Dataset::push_back(Vec f, std::size_t label) {
    if (feature_dim == 0 && features.empty())
        feature_dim = f.size();
    if (f.size() != feature_dim)
        throw DimensionError("Dataset: inconsistent feature dimension");
    features.push_back(std::move(f));
    labels.push_back(label);
}

std::size_t predict_class(const Mlp& mlp, std::span<const double> features) {
    const Vec z = mlp.logits(features);
    // max_element returns the first maximum, i.e. the lowest index on ties.
    return static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
}

double accuracy(const Mlp& mlp, const Dataset& data) {
    if (data.size() == 0)
        return 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < data.size(); ++i)
        if (predict_class(mlp, data.features[i]) == data.labels[i])
            ++hits;
    return static_cast<double>(hits) / static_cast<double>(data.size());
}

namespace {

class AdamState {
  public:
    explicit AdamState(const Mlp& mlp) : m_(Gradients::zeros_like(mlp)), v_(Gradients::zeros_like(mlp)) {}

    void step(Mlp& mlp, const Gradients& g, const AdamConfig& cfg) {
        ++t_;
        const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t_));
        auto update = [&](Vec& param, const Vec& grad, Vec& m, Vec& v) {
            for (std::size_t i = 0; i < param.size(); ++i) {
                m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
                v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
                const double mhat = m[i] / c1;
                const double vhat = v[i] / c2;
                param[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
            }
        };
        for (std::size_t l = 0; l < mlp.layers().size(); ++l) {
            update(mlp.layers()[l].weights, g.weights[l], m_.weights[l], v_.weights[l]);
            update(mlp.layers()[l].bias, g.bias[l], m_.bias[l], v_.bias[l]);
        }
    }

  private:
    Gradients m_;
    Gradients v_;
    std::size_t t_ = 0;
};

} // namespace

TrainReport train(Mlp& mlp, const Dataset& data, const TrainOptions& opts, const Dataset* test) {
    if (data.size() == 0)
        throw Error("train: empty dataset");
    if (opts.batch_size == 0)
        throw Error("train: batch size must be positive");
    for (std::size_t label : data.labels)
        if (label >= mlp.class_count())
            throw DimensionError("train: label " + std::to_string(label) + " outside the class count");
    if (data.feature_dim != mlp.input_dim())
        throw DimensionError("train: dataset feature dimension does not match the network input");

    std::mt19937_64 rng(opts.seed);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);

    std::vector<std::size_t> train_idx;
    Dataset held_out;
    if (test) {
        train_idx = order;
    } else {
        std::shuffle(order.begin(), order.end(), rng);
        const auto n_train = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::floor(opts.split * static_cast<double>(data.size()))));
        train_idx.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(std::min(n_train, data.size())));
        held_out.feature_dim = data.feature_dim;
        for (std::size_t i = train_idx.size(); i < order.size(); ++i)
            held_out.push_back(data.features[order[i]], data.labels[order[i]]);
    }
    const Dataset& test_set = test ? *test : held_out;

    TrainReport rep;
    rep.train_rows = train_idx.size();
    rep.test_rows = test_set.size();

    AdamState adam(mlp);
    Gradients grad = Gradients::zeros_like(mlp);
    for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
        std::shuffle(train_idx.begin(), train_idx.end(), rng);
        double total = 0.0;
        for (std::size_t start = 0; start < train_idx.size(); start += opts.batch_size) {
            const std::size_t end = std::min(train_idx.size(), start + opts.batch_size);
            grad.scale(0.0);
            for (std::size_t i = start; i < end; ++i) {
                const std::size_t row = train_idx[i];
                total += loss_and_gradient(mlp, data.features[row], data.labels[row], grad);
            }
            grad.scale(1.0 / static_cast<double>(end - start));
            adam.step(mlp, grad, opts.adam);
        }
        const double mean = total / static_cast<double>(train_idx.size());
        rep.epoch_losses.push_back(mean);
        if (!std::isfinite(mean)) {
            rep.diverged = true;
            return rep;
        }
    }

    Dataset train_set;
    train_set.feature_dim = data.feature_dim;
    for (std::size_t row : train_idx)
        train_set.push_back(data.features[row], data.labels[row]);
    rep.train_accuracy = accuracy(mlp, train_set);
    rep.test_accuracy = accuracy(mlp, test_set);
    return rep;
}

Ternary predict_input(const Mlp& mlp, const DirectionCodec& codec, std::span<const double> features) {
    if (mlp.class_count() != codec.size())
        throw DimensionError("predict_input: network has " + std::to_string(mlp.class_count()) +
                             " classes, codec has " + std::to_string(codec.size()));
    return codec.canonical_inputs()[predict_class(mlp, features)];
}

// ============================================================================
// Persistence
// ============================================================================

std::string codec_to_json(const DirectionCodec& codec) {
    nlohmann::json j;
    j["directions"] = codec.directions();
    j["canonical_inputs"] = codec.canonical_inputs();
    return j.dump(1);
}

DirectionCodec codec_from_json(const std::string& text) {
    try {
        const auto j = nlohmann::json::parse(text);
        return DirectionCodec(j.at("directions").get<std::vector<Vec>>(),
                              j.at("canonical_inputs").get<std::vector<Ternary>>());
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("codec: ") + e.what());
    }
}

std::string model_to_json(const ClassifierModel& model) {
    using nlohmann::json;
    json j;
    j["feature_schema_version"] = model.feature_schema_version;
    j["layer_dims"] = model.mlp.layer_dims();
    json weights = json::array();
    json biases = json::array();
    for (const auto& l : model.mlp.layers()) {
        weights.push_back(l.weights);
        biases.push_back(l.bias);
    }
    j["weights"] = std::move(weights);
    j["biases"] = std::move(biases);
    j["codec"]["directions"] = model.codec.directions();
    j["codec"]["canonical_inputs"] = model.codec.canonical_inputs();
    return j.dump(1);
}

ClassifierModel model_from_json(const std::string& text) {
    using nlohmann::json;
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(std::string("model: ") + e.what());
    }
    try {
        ClassifierModel model;
        model.feature_schema_version = j.at("feature_schema_version").get<int>();
        if (model.feature_schema_version != kFeatureSchemaVersion)
            throw Error("model: unsupported feature_schema_version " + std::to_string(model.feature_schema_version));
        model.mlp = Mlp(j.at("layer_dims").get<std::vector<std::size_t>>());
        const auto& weights = j.at("weights");
        const auto& biases = j.at("biases");
        if (weights.size() != model.mlp.layers().size() || biases.size() != model.mlp.layers().size())
            throw DimensionError("model: layer count does not match layer_dims");
        for (std::size_t l = 0; l < model.mlp.layers().size(); ++l) {
            auto& layer = model.mlp.layers()[l];
            auto w = weights[l].get<Vec>();
            auto b = biases[l].get<Vec>();
            if (w.size() != layer.weights.size() || b.size() != layer.bias.size())
                throw DimensionError("model: parameter array size mismatch in layer " + std::to_string(l));
            if (!all_finite(w) || !all_finite(b))
                throw NonFiniteValue("model: non-finite parameter");
            layer.weights = std::move(w);
            layer.bias = std::move(b);
        }
        model.codec = DirectionCodec(j.at("codec").at("directions").get<std::vector<Vec>>(),
                                     j.at("codec").at("canonical_inputs").get<std::vector<Ternary>>());
        if (model.codec.size() != model.mlp.class_count())
            throw DimensionError("model: codec size does not match the output layer");
        return model;
    } catch (const json::exception& e) {
        throw Error(std::string("model: ") + e.what());
    }
}

void save_model(const std::string& path, const ClassifierModel& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("cannot write " + path);
    out << model_to_json(model) << '\n';
}

ClassifierModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return model_from_json(ss.str());
}

} // namespace qsmpc
