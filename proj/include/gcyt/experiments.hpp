#pragma once

// End-to-end experiment drivers shared by the CLI and the acceptance suite.
//
//   E1  bead library: simulate -> reconstruct -> Canny diameter / intensity histograms
//   E2  reconstruction PSNR with matched and miscalibrated patterns
//   E3  waveform-domain SVM on two synthetic morphology classes
//   E4  image-domain SVM (28x28 centroid crops, 90-degree rotations) next to E3
//   E5  velocity jitter: waveform SVM vs. reconstruct-then-classify
//
// Every parameter comes from a Config (defaults recorded as resolved) and all
// randomness is derived from explicit seeds.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "gcyt/classify.hpp"
#include "gcyt/config.hpp"
#include "gcyt/forward.hpp"
#include "gcyt/io.hpp"
#include "gcyt/reconstruct.hpp"
#include "gcyt/scene.hpp"

namespace gcyt {

struct RunOptions {
    std::filesystem::path out_dir;  // empty: nothing is written
    unsigned threads = 1;
};

/// Scalar results plus one map per table row, mirrored in the CSV outputs.
struct ExperimentReport {
    std::string id;
    std::map<std::string, double> metrics;
    std::vector<std::map<std::string, double>> rows;
    std::string summary;
    double elapsed_s = 0.0;
};

// --- scene setups -------------------------------------------------------------

struct BeadPopulation {
    double diameter_um = 7.4;
    double diameter_cv = 0.0;
    double peak_intensity = 1.0;
    double peak_cv = 0.0;
    std::size_t count = 0;
};

struct BeadSetup {
    double pitch_um = 0.5;
    Canvas canvas{32, 32};
    std::size_t pattern_cols = 4096;
    double fill_fraction = 0.5;
    std::uint64_t pattern_seed = 1;
    FlowConfig flow;
    std::vector<BeadPopulation> populations;
    bool subpixel_offsets = true;
};

struct BeadSample {
    ObjectImage image;
    std::uint32_t label = 0;
    double diameter_um = 0.0;
};

struct CellSetup {
    double pitch_um = 1.0;
    Canvas canvas{28, 28};
    std::size_t pattern_cols = 256;
    double fill_fraction = 0.5;
    std::uint64_t pattern_seed = 1;
    FlowConfig flow;
    MorphClassSpec negative;  // label -1 / file label 0
    MorphClassSpec positive;  // label +1 / file label 1
    std::size_t train_per_class = 1000;
    std::size_t test_per_class = 100;
};

struct WaveformFeatureSetup {
    std::size_t target_len = 320;
    AlignMode align = AlignMode::centroid;
    AmplitudeNorm norm = AmplitudeNorm::none;
};

struct SvmSetup {
    double lambda = 1e-3;
    std::size_t epochs = 20;
};

BeadSetup bead_setup(const Config& cfg, const std::string& prefix, const std::vector<double>& default_counts,
                     double default_shot_scale);
CellSetup cell_setup(const Config& cfg, const std::string& prefix, std::size_t default_train_per_class = 1000);
WaveformFeatureSetup waveform_feature_setup(const Config& cfg, const std::string& prefix);
SvmSetup svm_setup(const Config& cfg, const std::string& prefix);

/// Inverse of waveform_preprocessing_id.
WaveformFeatureSetup feature_setup_from_id(const std::string& id);

IlluminationPattern make_setup_pattern(const BeadSetup& s);
IlluminationPattern make_setup_pattern(const CellSetup& s);

std::vector<BeadSample> make_beads(const BeadSetup& s, std::uint64_t seed);

/// Cells of one split: `per_class` negatives then `per_class` positives.
struct CellSplit {
    std::vector<ObjectImage> images;
    std::vector<int> labels;
};
CellSplit make_cells(const CellSetup& s, std::size_t per_class, std::uint64_t seed, unsigned threads);

LabeledDataset waveform_dataset(const std::vector<Waveform>& waves, const std::vector<int>& labels,
                                const WaveformFeatureSetup& fs);
LabeledDataset image_dataset(const std::vector<ObjectImage>& images, const std::vector<int>& labels,
                             std::uint64_t rotation_seed);

// --- experiments --------------------------------------------------------------

ExperimentReport run_e1(const Config& cfg, const RunOptions& opt);
ExperimentReport run_e2(const Config& cfg, const RunOptions& opt);
ExperimentReport run_e3(const Config& cfg, const RunOptions& opt);
ExperimentReport run_e4(const Config& cfg, const RunOptions& opt);
ExperimentReport run_e5(const Config& cfg, const RunOptions& opt);

/// Dispatch on "E1".."E5" (case-insensitive).
ExperimentReport run_experiment(const std::string& id, const Config& cfg, const RunOptions& opt);

/// Write the datasets an experiment consumes (patterns, waveforms, images,
/// manifests) into opt.out_dir. Returns the written paths.
std::vector<std::filesystem::path> generate_datasets(const std::string& id, const Config& cfg,
                                                     const RunOptions& opt);

// --- image datasets on disk -------------------------------------------------

/// One line of an image manifest CSV (`file,label,split`); paths are relative
/// to the manifest's directory.
struct ManifestEntry {
    std::filesystem::path file;
    std::uint32_t label = 0;
    std::string split;
};

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path);

/// Preprocessing id of image-path models: crop size and the dataset scale.
std::string image_preprocessing_id(std::size_t crop, double scale);
/// Returns {crop, scale}; throws ParameterError for other ids.
std::pair<std::size_t, double> parse_image_preprocessing_id(const std::string& id);

// --- latency benchmark --------------------------------------------------------

struct BenchReport {
    std::size_t repetitions = 0;
    double median_us = 0.0;
    double p99_us = 0.0;
    double throughput_per_s = 0.0;
    double checksum = 0.0;  // keeps the scoring work observable
};

/// Times preprocess + score per waveform, cycling through the records.
BenchReport bench_scoring(const LinearModel& model, const std::vector<WaveformRecord>& records,
                          const WaveformFeatureSetup& fs, std::size_t repetitions);

inline constexpr double kLatencyTargetUs = 100.0;

/// CPU model and hardware thread count, for timing reports.
std::string hardware_description();

}  // namespace gcyt
