#include "gcyt/classify.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "gcyt/error.hpp"
#include "gcyt/reconstruct.hpp"
#include "gcyt/rng.hpp"

namespace gcyt {

AlignMode parse_align_mode(const std::string& s) {
    if (s == "align-peak" || s == "peak") return AlignMode::peak;
    if (s == "align-centroid" || s == "centroid") return AlignMode::centroid;
    throw ParameterError("unknown alignment mode: " + s);
}

AmplitudeNorm parse_amplitude_norm(const std::string& s) {
    if (s == "none") return AmplitudeNorm::none;
    if (s == "unit-max") return AmplitudeNorm::unit_max;
    if (s == "unit-energy") return AmplitudeNorm::unit_energy;
    throw ParameterError("unknown amplitude normalisation: " + s);
}

std::string to_string(AlignMode m) {
    return m == AlignMode::peak ? "align-peak" : "align-centroid";
}

std::string to_string(AmplitudeNorm n) {
    switch (n) {
        case AmplitudeNorm::none: return "none";
        case AmplitudeNorm::unit_max: return "unit-max";
        case AmplitudeNorm::unit_energy: return "unit-energy";
    }
    return "none";
}

std::size_t LabeledDataset::feature_len() const {
    return records.empty() ? 0 : records.front().values.size();
}

void LabeledDataset::add(FeatureVector f, int label) {
    records.push_back(std::move(f));
    labels.push_back(label);
}

void LabeledDataset::validate(bool both_classes) const {
    if (records.size() != labels.size()) throw ParameterError("record/label count mismatch");
    if (records.empty()) throw ParameterError("dataset is empty");
    const std::size_t len = feature_len();
    bool pos = false, neg = false;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (records[i].values.size() != len) throw ParameterError("inconsistent feature lengths in dataset");
        for (double v : records[i].values)
            if (!std::isfinite(v)) throw ParameterError("non-finite feature value");
        if (labels[i] == 1) {
            pos = true;
        } else if (labels[i] == -1) {
            neg = true;
        } else {
            throw ParameterError("labels must be +1 or -1");
        }
    }
    if (both_classes && !(pos && neg)) throw DegenerateDataError("dataset contains a single class");
}

// --- feature extraction -------------------------------------------------------

FeatureVector preprocess_waveform(const Waveform& w, std::size_t target_len, AlignMode mode,
                                  AmplitudeNorm norm) {
    require(!w.samples.empty(), "waveform is empty");
    require(target_len >= 8, "target length must be >= 8");
    const auto& s = w.samples;

    long anchor = 0;
    if (mode == AlignMode::peak) {
        anchor = static_cast<long>(std::max_element(s.begin(), s.end()) - s.begin());
    } else {
        double total = 0.0, moment = 0.0;
        for (std::size_t k = 0; k < s.size(); ++k) {
            total += s[k];
            moment += static_cast<double>(k) * s[k];
        }
        if (!(total > 0.0)) throw UndefinedCentroidError("temporal centroid undefined for non-positive waveform");
        anchor = static_cast<long>(std::floor(moment / total + 0.5));
    }

    FeatureVector f;
    f.source = FeatureSource::waveform;
    f.values.assign(target_len, 0.0);
    const long start = anchor - static_cast<long>(target_len / 2);
    for (std::size_t i = 0; i < target_len; ++i) {
        const long k = start + static_cast<long>(i);
        if (k >= 0 && k < static_cast<long>(s.size())) f.values[i] = s[static_cast<std::size_t>(k)];
    }

    double scale = 0.0;
    if (norm == AmplitudeNorm::unit_max) {
        for (double v : f.values) scale = std::max(scale, std::abs(v));
    } else if (norm == AmplitudeNorm::unit_energy) {
        scale = std::sqrt(std::inner_product(f.values.begin(), f.values.end(), f.values.begin(), 0.0));
    }
    if (scale > 0.0)
        for (double& v : f.values) v /= scale;
    return f;
}

std::string waveform_preprocessing_id(std::size_t target_len, AlignMode mode, AmplitudeNorm norm) {
    return "waveform/" + to_string(mode) + "/" + to_string(norm) + "/" + std::to_string(target_len);
}

FeatureVector preprocess_image(const ObjectImage& img, int quarter_turns, std::size_t crop) {
    const ObjectImage rotated = rotate90(crop_centered(img, crop, crop), quarter_turns);
    return FeatureVector{rotated.storage(), FeatureSource::image};
}

FeatureVector preprocess_image(const ObjectImage& img, std::uint64_t seed, std::size_t crop) {
    Rng rng = make_rng(seed);
    const int turns = std::uniform_int_distribution<int>(0, 3)(rng);
    return preprocess_image(img, turns, crop);
}

double global_max(const LabeledDataset& data) {
    double m = 0.0;
    for (const auto& r : data.records)
        for (double v : r.values) m = std::max(m, v);
    return m;
}

void rescale(LabeledDataset& data, double scale) {
    require(scale > 0.0 && std::isfinite(scale), "rescale factor must be positive");
    for (auto& r : data.records)
        for (double& v : r.values) v /= scale;
}

// --- training -----------------------------------------------------------------

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

}  // namespace

LinearModel train_svm(const LabeledDataset& data, double reg_lambda, std::size_t epochs,
                      std::uint64_t seed, TrainReport* report) {
    require(reg_lambda > 0.0 && std::isfinite(reg_lambda), "regularisation must be positive");
    require(epochs >= 1, "epochs must be >= 1");
    data.validate(true);

    const std::size_t n = data.size(), d = data.feature_len();
    std::vector<double> mean(d, 0.0), sd(d, 0.0);
    for (const auto& r : data.records)
        for (std::size_t j = 0; j < d; ++j) mean[j] += r.values[j];
    for (double& m : mean) m /= static_cast<double>(n);
    for (const auto& r : data.records)
        for (std::size_t j = 0; j < d; ++j) sd[j] += (r.values[j] - mean[j]) * (r.values[j] - mean[j]);
    for (double& s : sd) {
        s = std::sqrt(s / static_cast<double>(n));
        if (!(s > 1e-12)) s = 1.0;
    }

    // standardised design matrix with a trailing constant column for the bias
    const std::size_t dim = d + 1;
    std::vector<double> z(n * dim);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) z[i * dim + j] = (data.records[i].values[j] - mean[j]) / sd[j];
        z[i * dim + d] = 1.0;
    }
    auto row = [&](std::size_t i) { return std::span<const double>(z.data() + i * dim, dim); };

    auto objective = [&](std::span<const double> w) {
        double hinge = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            hinge += std::max(0.0, 1.0 - data.labels[i] * dot(w, row(i)));
        return 0.5 * reg_lambda * dot(w, w) + hinge / static_cast<double>(n);
    };

    std::vector<double> w(dim, 0.0), avg(dim, 0.0);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng = make_rng(seed);
    const double radius = 1.0 / std::sqrt(reg_lambda);
    std::size_t t = 0;
    if (report) report->epoch_objective.clear();

    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        for (std::size_t i = n; i > 1; --i) {
            std::uniform_int_distribution<std::size_t> pick(0, i - 1);
            std::swap(order[i - 1], order[pick(rng)]);
        }
        std::fill(avg.begin(), avg.end(), 0.0);
        for (std::size_t i : order) {
            ++t;
            const double eta = 1.0 / (reg_lambda * static_cast<double>(t));
            const auto xi = row(i);
            const double y = data.labels[i];
            const double margin = y * dot(w, xi);
            const double shrink = 1.0 - eta * reg_lambda;
            for (std::size_t j = 0; j < dim; ++j) w[j] *= shrink;
            if (margin < 1.0)
                for (std::size_t j = 0; j < dim; ++j) w[j] += eta * y * xi[j];
            const double norm = std::sqrt(dot(w, w));
            if (norm > radius)
                for (double& v : w) v *= radius / norm;
            for (std::size_t j = 0; j < dim; ++j) avg[j] += w[j];
        }
        for (double& v : avg) v /= static_cast<double>(n);
        if (report) report->epoch_objective.push_back(objective(avg));
    }

    LinearModel model;
    model.feature_len = d;
    model.lambda = reg_lambda;
    model.epochs = epochs;
    model.seed = seed;
    model.weights.resize(d);
    model.bias = avg[d];
    for (std::size_t j = 0; j < d; ++j) {
        model.weights[j] = avg[j] / sd[j];
        model.bias -= avg[j] * mean[j] / sd[j];
    }
    return model;
}

double decision_score(const LinearModel& model, std::span<const double> features) {
    if (features.size() != model.weights.size())
        throw ParameterError("feature length " + std::to_string(features.size()) +
                             " does not match model length " + std::to_string(model.weights.size()));
    return dot(model.weights, features) + model.bias;
}

std::vector<double> decision_scores(const LinearModel& model, const LabeledDataset& data) {
    std::vector<double> out;
    out.reserve(data.size());
    for (const auto& r : data.records) out.push_back(decision_score(model, r.values));
    return out;
}

double svm_objective(const LinearModel& model, const LabeledDataset& data, double reg_lambda) {
    const std::vector<double> scores = decision_scores(model, data);
    double hinge = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i)
        hinge += std::max(0.0, 1.0 - data.labels[i] * scores[i]);
    return 0.5 * reg_lambda * dot(model.weights, model.weights) +
           hinge / static_cast<double>(scores.size());
}

// --- evaluation ---------------------------------------------------------------

RocCurve roc_auc(std::span<const double> scores, std::span<const int> labels) {
    require(scores.size() == labels.size(), "scores and labels differ in length");
    std::size_t pos = 0, neg = 0;
    for (int l : labels) {
        if (l == 1) {
            ++pos;
        } else if (l == -1) {
            ++neg;
        } else {
            throw ParameterError("labels must be +1 or -1");
        }
    }
    if (pos == 0 || neg == 0) throw DegenerateDataError("AUC undefined with a single class");

    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    RocCurve roc;
    roc.points.emplace_back(0.0, 0.0);
    // twice the trapezoid area in units of one positive-negative pair, kept integral
    unsigned long long doubled_area = 0;
    std::size_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t gp = 0, gn = 0;
        const double s = scores[idx[i]];
        for (; i < idx.size() && scores[idx[i]] == s; ++i) {
            if (labels[idx[i]] == 1) {
                ++gp;
            } else {
                ++gn;
            }
        }
        doubled_area += static_cast<unsigned long long>(gn) * (2 * tp + gp);
        tp += gp;
        fp += gn;
        roc.points.emplace_back(static_cast<double>(fp) / static_cast<double>(neg),
                                static_cast<double>(tp) / static_cast<double>(pos));
    }
    roc.auc = static_cast<double>(doubled_area) /
              (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
    return roc;
}

// --- model files --------------------------------------------------------------

void write_model(std::ostream& os, const LinearModel& model) {
    os.precision(17);
    os << "feature_len " << model.feature_len << '\n';
    os << "preprocessing " << (model.preprocessing.empty() ? "none" : model.preprocessing) << '\n';
    os << "lambda " << model.lambda << '\n';
    os << "epochs " << model.epochs << '\n';
    os << "seed " << model.seed << '\n';
    os << "bias " << model.bias << '\n';
    os << "weights";
    for (double v : model.weights) os << ' ' << v;
    os << '\n';
    if (!os) throw IoError("failed to write model");
}

LinearModel read_model(std::istream& is) {
    LinearModel m;
    auto expect = [&](const char* key) {
        std::string k;
        if (!(is >> k) || k != key) throw IoError(std::string("model file: expected '") + key + "'");
    };
    expect("feature_len");
    if (!(is >> m.feature_len)) throw IoError("model file: bad feature_len");
    expect("preprocessing");
    if (!(is >> m.preprocessing)) throw IoError("model file: bad preprocessing id");
    expect("lambda");
    if (!(is >> m.lambda)) throw IoError("model file: bad lambda");
    expect("epochs");
    if (!(is >> m.epochs)) throw IoError("model file: bad epochs");
    expect("seed");
    if (!(is >> m.seed)) throw IoError("model file: bad seed");
    expect("bias");
    if (!(is >> m.bias)) throw IoError("model file: bad bias");
    expect("weights");
    m.weights.resize(m.feature_len);
    for (double& v : m.weights)
        if (!(is >> v)) throw IoError("model file: truncated weights");
    return m;
}

void save_model(const std::filesystem::path& path, const LinearModel& model) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open for writing: " + path.string());
    write_model(os, model);
}

LinearModel load_model(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open: " + path.string());
    return read_model(is);
}

}  // namespace gcyt
