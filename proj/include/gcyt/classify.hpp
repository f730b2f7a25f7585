#pragma once

// Two-class linear SVM on fixed-length feature vectors built either directly
// from detector waveforms or from centroid-cropped images, with ROC/AUC
// evaluation.

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gcyt/forward.hpp"
#include "gcyt/grid.hpp"

namespace gcyt {

enum class FeatureSource { waveform, image };
enum class AlignMode { peak, centroid };
enum class AmplitudeNorm { none, unit_max, unit_energy };

AlignMode parse_align_mode(const std::string& s);
AmplitudeNorm parse_amplitude_norm(const std::string& s);
std::string to_string(AlignMode m);
std::string to_string(AmplitudeNorm n);

struct FeatureVector {
    std::vector<double> values;
    FeatureSource source = FeatureSource::waveform;
};

/// Labels are +1 / -1.
struct LabeledDataset {
    std::vector<FeatureVector> records;
    std::vector<int> labels;
    std::array<std::string, 2> class_names{"negative", "positive"};

    std::size_t size() const noexcept { return records.size(); }
    std::size_t feature_len() const;
    void add(FeatureVector f, int label);
    /// Throws on inconsistent lengths, non-finite entries or labels other than +-1;
    /// with `both_classes` also when a class is missing.
    void validate(bool both_classes) const;
};

struct LinearModel {
    std::vector<double> weights;
    double bias = 0.0;
    std::size_t feature_len = 0;
    std::string preprocessing;
    double lambda = 0.0;
    std::size_t epochs = 0;
    std::uint64_t seed = 0;
};

/// Window of target_len samples centred on the anchor (maximum sample or
/// rounded temporal centroid), zero-padded, then amplitude-normalised.
FeatureVector preprocess_waveform(const Waveform& w, std::size_t target_len, AlignMode mode,
                                  AmplitudeNorm norm);

/// Identifier recorded in model files for a waveform preprocessing setup.
std::string waveform_preprocessing_id(std::size_t target_len, AlignMode mode, AmplitudeNorm norm);

inline constexpr std::size_t kImageCrop = 28;

/// Centroid-centred crop, rotated by quarter_turns * 90 degrees, flattened row-major.
FeatureVector preprocess_image(const ObjectImage& img, int quarter_turns, std::size_t crop = kImageCrop);

/// As above with the rotation drawn uniformly from {0, 90, 180, 270} degrees by `seed`.
FeatureVector preprocess_image(const ObjectImage& img, std::uint64_t seed, std::size_t crop = kImageCrop);

/// Largest feature value over the whole dataset (class-independent scale).
double global_max(const LabeledDataset& data);

/// Divide every feature by `scale`.
void rescale(LabeledDataset& data, double scale);

struct TrainReport {
    std::vector<double> epoch_objective;  // objective of each epoch's averaged iterate
};

/// Pegasos stochastic subgradient descent on lambda/2 ||w||^2 + mean hinge loss.
/// Features are standardised internally (training mean / sd) and the bias is an
/// augmented constant feature; the returned model acts on raw features. The
/// model is the average of the final epoch's iterates.
LinearModel train_svm(const LabeledDataset& data, double reg_lambda, std::size_t epochs,
                      std::uint64_t seed, TrainReport* report = nullptr);

double decision_score(const LinearModel& model, std::span<const double> features);
std::vector<double> decision_scores(const LinearModel& model, const LabeledDataset& data);

/// lambda/2 ||w||^2 + mean hinge loss of `model` on raw features.
double svm_objective(const LinearModel& model, const LabeledDataset& data, double reg_lambda);

struct RocCurve {
    std::vector<std::pair<double, double>> points;  // (false positive rate, true positive rate)
    double auc = 0.0;
};

/// Threshold sweep over unique scores with trapezoidal area; tied
/// positive/negative pairs count one half.
RocCurve roc_auc(std::span<const double> scores, std::span<const int> labels);

void write_model(std::ostream& os, const LinearModel& model);
LinearModel read_model(std::istream& is);
void save_model(const std::filesystem::path& path, const LinearModel& model);
LinearModel load_model(const std::filesystem::path& path);

}  // namespace gcyt
