#include "gcyt/experiments.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

#include "gcyt/analyze.hpp"
#include "gcyt/error.hpp"
#include "gcyt/parallel.hpp"
#include "gcyt/rng.hpp"

namespace gcyt {
namespace {

using Clock = std::chrono::steady_clock;

constexpr double kE1ShotScale = 100.0;
// every E5 cell is reconstructed at every jitter level, so its split is smaller
constexpr std::size_t kE5TrainPerClass = 300;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write " + path.string());
    os << text;
    if (!os) throw IoError("write failed: " + path.string());
}

void ensure_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir))
        throw IoError("cannot create output directory " + dir.string());
}

std::string num(double v) {
    return format_double(v);
}

std::vector<std::size_t> counts_from(const std::vector<double>& values, const std::string& key) {
    std::vector<std::size_t> out;
    for (double v : values) {
        if (!(v >= 1.0) || v != std::floor(v))
            throw ParameterError(key + ": class counts must be positive integers");
        out.push_back(static_cast<std::size_t>(v));
    }
    return out;
}

FlowConfig flow_setup(const Config& cfg, const std::string& p, double velocity, double rate,
                      double shot, double read_sd) {
    FlowConfig f;
    f.velocity_um_s = cfg.get_double(p + "velocity_um_s", velocity);
    f.sample_rate_hz = cfg.get_double(p + "sample_rate_hz", rate);
    f.noise.shot_scale = cfg.get_double(p + "shot_scale", shot);
    f.noise.read_sd = cfg.get_double(p + "read_sd", read_sd);
    f.velocity_jitter_frac = cfg.get_double(p + "velocity_jitter", 0.0);
    f.validate();
    return f;
}

MorphClassSpec class_setup(const Config& cfg, const std::string& p, const MorphClassSpec& def) {
    MorphClassSpec s;
    s.label = cfg.get_string(p + "label", def.label);
    s.diameter_mean_um = cfg.get_double(p + "diameter_um", def.diameter_mean_um);
    s.diameter_sd_um = cfg.get_double(p + "diameter_sd_um", def.diameter_sd_um);
    s.intensity_mean = cfg.get_double(p + "intensity", def.intensity_mean);
    s.intensity_sd = cfg.get_double(p + "intensity_sd", def.intensity_sd);
    s.texture_granularity_px = cfg.get_double(p + "granularity_px", def.texture_granularity_px);
    s.eccentricity = cfg.get_double(p + "eccentricity", def.eccentricity);
    s.texture_contrast = cfg.get_double(p + "texture_contrast", def.texture_contrast);
    s.orientation_sd_deg = cfg.get_double(p + "orientation_sd_deg", def.orientation_sd_deg);
    s.validate();
    return s;
}

SolverConfig solver_setup(const Config& cfg, const std::string& p, std::size_t iters, double tol) {
    SolverConfig s;
    s.max_iters = cfg.get_count(p + "solver.max_iters", iters);
    s.tol = cfg.get_double(p + "solver.tol", tol);
    s.nonneg = cfg.get_bool(p + "solver.nonneg", true);
    s.monotone = cfg.get_bool(p + "solver.monotone", true);
    require(s.max_iters >= 1, p + "solver.max_iters must be >= 1");
    require(s.tol >= 0.0, p + "solver.tol must be >= 0");
    return s;
}

double lambda_fraction(const Config& cfg, const std::string& p, double def) {
    const double f = cfg.get_double(p + "solver.lambda_fraction", def);
    require(f >= 0.0, p + "solver.lambda_fraction must be >= 0");
    return f;
}

std::uint64_t base_seed(const Config& cfg) {
    return cfg.get_u64("seed", 1);
}

/// Seeds of the repeated classification runs.
std::vector<std::uint64_t> run_seeds(const Config& cfg, const std::string& p) {
    const std::size_t runs = cfg.get_count(p + "runs", 5);
    require(runs >= 1, p + "runs must be >= 1");
    const std::uint64_t seed = base_seed(cfg);
    std::vector<std::uint64_t> out;
    for (std::size_t r = 0; r < runs; ++r) out.push_back(derive_seed(seed, 1000 + r));
    return out;
}

std::string hardware_line() {
    std::string model = "unknown cpu";
    std::ifstream is("/proc/cpuinfo");
    for (std::string line; std::getline(is, line);) {
        if (line.rfind("model name", 0) == 0) {
            const auto colon = line.find(':');
            if (colon != std::string::npos) model = line.substr(colon + 2);
            break;
        }
    }
    return model + ", " + std::to_string(std::thread::hardware_concurrency()) + " hardware threads";
}

/// Text summary: results, then the resolved configuration.
std::string finish_summary(const std::string& id, const std::string& body, const Config& cfg) {
    std::ostringstream os;
    os << "experiment " << id << "\n\n" << body << "\n[resolved config]\n" << cfg.resolved_text();
    return os.str();
}

void write_outputs(const RunOptions& opt, const std::string& stem, const ExperimentReport& rep,
                   const std::vector<std::pair<std::string, std::string>>& files) {
    if (opt.out_dir.empty()) return;
    ensure_dir(opt.out_dir);
    for (const auto& [name, text] : files) write_file(opt.out_dir / name, text);
    write_file(opt.out_dir / (stem + "_summary.txt"), rep.summary);
    std::ostringstream t;
    t << "elapsed_s " << rep.elapsed_s << "\nthreads " << opt.threads << "\nhardware " << hardware_line()
      << "\n";
    write_file(opt.out_dir / (stem + "_timing.txt"), t.str());
}

std::string histogram_csv(const HistogramReport& h) {
    std::ostringstream os;
    write_histogram_csv(os, h);
    return os.str();
}

struct CellData {
    CellSplit train;
    CellSplit test;
};

CellData cell_data(const CellSetup& s, std::uint64_t run_seed, unsigned threads) {
    return CellData{make_cells(s, s.train_per_class, derive_seed(run_seed, 10), threads),
                    make_cells(s, s.test_per_class, derive_seed(run_seed, 11), threads)};
}

std::vector<Waveform> cell_waveforms(const std::vector<ObjectImage>& images, const IlluminationPattern& pat,
                                     const FlowConfig& flow, std::uint64_t seed, unsigned threads) {
    return simulate_batch(images, pat, flow, seed, threads);
}

struct AucPair {
    double test = 0.0;
    double train = 0.0;
};

AucPair fit_and_score(const LabeledDataset& train, const LabeledDataset& test, const SvmSetup& svm,
                      std::uint64_t seed) {
    const LinearModel model = train_svm(train, svm.lambda, svm.epochs, seed);
    const std::vector<double> st = decision_scores(model, test);
    const std::vector<double> sr = decision_scores(model, train);
    return AucPair{roc_auc(st, test.labels).auc, roc_auc(sr, train.labels).auc};
}

AucPair waveform_auc(const CellData& d, const IlluminationPattern& pat, const FlowConfig& flow,
                     const WaveformFeatureSetup& fs, const SvmSetup& svm, std::uint64_t run_seed,
                     unsigned threads) {
    const auto wtrain = cell_waveforms(d.train.images, pat, flow, derive_seed(run_seed, 12), threads);
    const auto wtest = cell_waveforms(d.test.images, pat, flow, derive_seed(run_seed, 13), threads);
    return fit_and_score(waveform_dataset(wtrain, d.train.labels, fs),
                         waveform_dataset(wtest, d.test.labels, fs), svm, derive_seed(run_seed, 14));
}

AucPair image_auc(const std::vector<ObjectImage>& train_images, const std::vector<int>& train_labels,
                  const std::vector<ObjectImage>& test_images, const std::vector<int>& test_labels,
                  const SvmSetup& svm, std::uint64_t run_seed) {
    LabeledDataset train = image_dataset(train_images, train_labels, derive_seed(run_seed, 15));
    LabeledDataset test = image_dataset(test_images, test_labels, derive_seed(run_seed, 16));
    const double scale = global_max(train);
    rescale(train, scale);
    rescale(test, scale);
    return fit_and_score(train, test, svm, derive_seed(run_seed, 17));
}

std::string upper(std::string s) {
    for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return s;
}

}  // namespace

// --- setups ------------------------------------------------------------------

BeadSetup bead_setup(const Config& cfg, const std::string& p, const std::vector<double>& default_counts,
                     double default_shot_scale) {
    BeadSetup s;
    s.pitch_um = cfg.get_double(p + "pitch_um", 0.5);
    s.canvas.rows = cfg.get_count(p + "canvas_rows", 32);
    s.canvas.cols = cfg.get_count(p + "canvas_cols", 32);
    s.pattern_cols = cfg.get_count(p + "pattern_cols", 4096);
    s.fill_fraction = cfg.get_double(p + "fill_fraction", 0.5);
    s.pattern_seed = cfg.get_u64(p + "pattern_seed", 1);
    s.flow = flow_setup(cfg, p, 5.0e6, 1.0e7, default_shot_scale, 0.0);
    s.subpixel_offsets = cfg.get_bool(p + "subpixel_offsets", true);

    const auto diam = cfg.get_doubles(p + "diameters_um", {7.4, 10.2});
    const auto peaks = cfg.get_doubles(p + "peak_intensities", {1.0, 1.5});
    const auto counts = counts_from(cfg.get_doubles(p + "counts", default_counts), p + "counts");
    const double dcv = cfg.get_double(p + "diameter_cv", 0.02);
    const double pcv = cfg.get_double(p + "peak_cv", 0.05);
    require(!diam.empty() && diam.size() == peaks.size() && diam.size() == counts.size(),
            p + "diameters_um, peak_intensities and counts must have equal, nonzero length");
    require(dcv >= 0.0 && pcv >= 0.0, p + "coefficients of variation must be >= 0");
    for (std::size_t i = 0; i < diam.size(); ++i) {
        require(diam[i] > 0.0 && peaks[i] > 0.0, p + "bead diameters and peaks must be positive");
        s.populations.push_back(BeadPopulation{diam[i], dcv, peaks[i], pcv, counts[i]});
    }
    require(s.canvas.rows >= 1 && s.canvas.cols >= 1 && s.pattern_cols >= 1,
            p + "canvas and pattern sizes must be >= 1");
    return s;
}

CellSetup cell_setup(const Config& cfg, const std::string& p, std::size_t default_train_per_class) {
    CellSetup s;
    s.pitch_um = cfg.get_double(p + "pitch_um", 1.0);
    s.canvas.rows = cfg.get_count(p + "canvas_rows", 28);
    s.canvas.cols = cfg.get_count(p + "canvas_cols", 28);
    s.pattern_cols = cfg.get_count(p + "pattern_cols", 256);
    s.fill_fraction = cfg.get_double(p + "fill_fraction", 0.5);
    s.pattern_seed = cfg.get_u64(p + "pattern_seed", 1);
    s.flow = flow_setup(cfg, p, 4.0e6, 4.0e6, 100.0, 0.0);

    MorphClassSpec neg;
    neg.label = "round-coarse";
    neg.diameter_mean_um = 14.0;
    neg.diameter_sd_um = 0.5;
    neg.intensity_mean = 1.0;
    neg.intensity_sd = 0.1;
    neg.texture_granularity_px = 4.0;
    neg.eccentricity = 0.0;
    neg.texture_contrast = 0.4;
    MorphClassSpec pos = neg;
    pos.label = "elongated-fine";
    pos.texture_granularity_px = 1.5;
    pos.eccentricity = 0.8;
    pos.orientation_sd_deg = 10.0;

    s.negative = class_setup(cfg, p + "class0.", neg);
    if (cfg.get_bool(p + "identical_classes", false)) {
        s.positive = s.negative;
        s.positive.label = s.negative.label + "-copy";
    } else {
        s.positive = class_setup(cfg, p + "class1.", pos);
    }
    s.train_per_class = cfg.get_count(p + "train_per_class", default_train_per_class);
    s.test_per_class = cfg.get_count(p + "test_per_class", 100);
    require(s.train_per_class >= 1 && s.test_per_class >= 1,
            p + "train_per_class and test_per_class must be >= 1");
    return s;
}

WaveformFeatureSetup waveform_feature_setup(const Config& cfg, const std::string& p) {
    WaveformFeatureSetup f;
    f.target_len = cfg.get_count(p + "features.target_len", 320);
    f.align = parse_align_mode(cfg.get_string(p + "features.align", "align-centroid"));
    f.norm = parse_amplitude_norm(cfg.get_string(p + "features.norm", "none"));
    require(f.target_len >= 8, p + "features.target_len must be >= 8");
    return f;
}

WaveformFeatureSetup feature_setup_from_id(const std::string& id) {
    std::vector<std::string> parts;
    std::istringstream is(id);
    for (std::string part; std::getline(is, part, '/');) parts.push_back(part);
    if (parts.size() != 4 || parts[0] != "waveform")
        throw ParameterError("not a waveform preprocessing id: " + id);
    WaveformFeatureSetup f;
    f.align = parse_align_mode(parts[1]);
    f.norm = parse_amplitude_norm(parts[2]);
    try {
        f.target_len = static_cast<std::size_t>(std::stoull(parts[3]));
    } catch (const std::exception&) {
        throw ParameterError("bad target length in preprocessing id: " + id);
    }
    return f;
}

SvmSetup svm_setup(const Config& cfg, const std::string& p) {
    SvmSetup s;
    s.lambda = cfg.get_double(p + "svm.lambda", 1e-3);
    s.epochs = cfg.get_count(p + "svm.epochs", 20);
    require(s.lambda > 0.0, p + "svm.lambda must be positive");
    require(s.epochs >= 1, p + "svm.epochs must be >= 1");
    return s;
}

IlluminationPattern make_setup_pattern(const BeadSetup& s) {
    return make_pattern(s.canvas.rows, s.pattern_cols, s.pitch_um, s.fill_fraction, s.pattern_seed);
}

IlluminationPattern make_setup_pattern(const CellSetup& s) {
    return make_pattern(s.canvas.rows, s.pattern_cols, s.pitch_um, s.fill_fraction, s.pattern_seed);
}

std::vector<BeadSample> make_beads(const BeadSetup& s, std::uint64_t seed) {
    std::vector<BeadSample> out;
    std::size_t index = 0;
    for (std::size_t label = 0; label < s.populations.size(); ++label) {
        const BeadPopulation& pop = s.populations[label];
        require(pop.count >= 1, "bead population " + std::to_string(label) + " is empty");
        for (std::size_t i = 0; i < pop.count; ++i, ++index) {
            Rng rng = make_rng(seed, index);
            std::normal_distribution<double> gauss(0.0, 1.0);
            std::uniform_real_distribution<double> shift(-0.5, 0.5);
            const double d = pop.diameter_um * std::max(1.0 + pop.diameter_cv * gauss(rng), 0.1);
            const double peak = pop.peak_intensity * std::max(1.0 + pop.peak_cv * gauss(rng), 0.1);
            PixelOffset off;
            if (s.subpixel_offsets) {
                off.rows = shift(rng);
                off.cols = shift(rng);
            }
            out.push_back(BeadSample{make_bead(d, peak, s.pitch_um, s.canvas, off),
                                     static_cast<std::uint32_t>(label), d});
        }
    }
    return out;
}

CellSplit make_cells(const CellSetup& s, std::size_t per_class, std::uint64_t seed, unsigned threads) {
    require(per_class >= 1, "each class needs at least one cell");
    const std::size_t n = 2 * per_class;
    std::vector<ObjectImage> images(n, ObjectImage(s.canvas.rows, s.canvas.cols, s.pitch_um));
    CellSplit out;
    out.labels.resize(n);
    parallel_for(n, threads, [&](std::size_t i) {
        const bool positive = i >= per_class;
        images[i] = make_cell(positive ? s.positive : s.negative, s.pitch_um, s.canvas, derive_seed(seed, i));
        out.labels[i] = positive ? 1 : -1;
    });
    out.images = std::move(images);
    return out;
}

LabeledDataset waveform_dataset(const std::vector<Waveform>& waves, const std::vector<int>& labels,
                                const WaveformFeatureSetup& fs) {
    require(waves.size() == labels.size(), "waveform and label counts differ");
    LabeledDataset data;
    for (std::size_t i = 0; i < waves.size(); ++i)
        data.add(preprocess_waveform(waves[i], fs.target_len, fs.align, fs.norm), labels[i]);
    return data;
}

LabeledDataset image_dataset(const std::vector<ObjectImage>& images, const std::vector<int>& labels,
                             std::uint64_t rotation_seed) {
    require(images.size() == labels.size(), "image and label counts differ");
    LabeledDataset data;
    for (std::size_t i = 0; i < images.size(); ++i)
        data.add(preprocess_image(images[i], derive_seed(rotation_seed, i)), labels[i]);
    return data;
}

// --- E1 ----------------------------------------------------------------------

ExperimentReport run_e1(const Config& cfg, const RunOptions& opt) {
    const auto t0 = Clock::now();
    const std::string p = "e1.";
    const BeadSetup s = bead_setup(cfg, p, {300, 300}, kE1ShotScale);
    const std::uint64_t seed = base_seed(cfg);
    const SolverConfig solver = solver_setup(cfg, p, 300, 1e-7);
    const double lam = lambda_fraction(cfg, p, 1e-3);
    const double sigma = cfg.get_double(p + "canny.sigma_px", 1.0);
    const double low = cfg.get_double(p + "canny.low", 0.1);
    const double high = cfg.get_double(p + "canny.high", 0.3);
    const std::size_t bins = cfg.get_count(p + "hist.bins", 24);
    const double prominence = cfg.get_double(p + "hist.min_prominence", 0.10);

    FlowConfig flow = s.flow;
    flow.noise.seed = derive_seed(seed, 2);
    const IlluminationPattern pat = make_setup_pattern(s);
    const std::vector<BeadSample> beads = make_beads(s, derive_seed(seed, 1));
    std::vector<ObjectImage> images;
    for (const auto& b : beads) images.push_back(b.image);
    const std::vector<Waveform> waves = simulate_batch(images, pat, flow, derive_seed(seed, 3), opt.threads);

    const Reconstructor rec(pat, make_geometry(images.front(), pat));
    const std::size_t n = beads.size();
    std::vector<double> diameter(n, std::numeric_limits<double>::quiet_NaN());
    std::vector<double> intensity(n), iters(n);
    parallel_for(n, opt.threads, [&](std::size_t i) {
        const Reconstruction r = rec.reconstruct(waves[i].samples, solver, lam);
        iters[i] = static_cast<double>(r.report.iterations);
        intensity[i] = total_intensity(r.image);
        try {
            diameter[i] = estimate_diameter(canny(r.image, sigma, low, high), s.pitch_um);
        } catch (const NoObjectError&) {
        }
    });

    std::vector<double> dvals;
    for (double d : diameter)
        if (std::isfinite(d)) dvals.push_back(d);
    require(!dvals.empty(), "E1: no bead produced a closed contour");
    const HistogramReport dh = histogram(dvals, bins, prominence);
    const HistogramReport ih = histogram(intensity, bins, prominence);

    ExperimentReport rep;
    rep.id = "E1";
    std::ostringstream beads_csv;
    beads_csv << "index,label,true_diameter_um,true_total_intensity,est_diameter_um,est_total_intensity,"
                 "iterations\n";
    for (std::size_t i = 0; i < n; ++i) {
        beads_csv << i << ',' << beads[i].label << ',' << num(beads[i].diameter_um) << ','
                  << num(total_intensity(beads[i].image)) << ','
                  << (std::isfinite(diameter[i]) ? num(diameter[i]) : "nan") << ',' << num(intensity[i]) << ','
                  << iters[i] << '\n';
        rep.rows.push_back({{"label", beads[i].label},
                            {"true_diameter_um", beads[i].diameter_um},
                            {"est_diameter_um", diameter[i]},
                            {"est_total_intensity", intensity[i]}});
    }

    rep.metrics["beads"] = static_cast<double>(n);
    rep.metrics["failed_contours"] = static_cast<double>(n - dvals.size());
    rep.metrics["diameter_bimodal"] = dh.bimodal ? 1.0 : 0.0;
    rep.metrics["diameter_peaks"] = static_cast<double>(dh.peaks.size());
    rep.metrics["intensity_bimodal"] = ih.bimodal ? 1.0 : 0.0;
    rep.metrics["intensity_peaks"] = static_cast<double>(ih.peaks.size());
    for (std::size_t k = 0; k < dh.peaks.size(); ++k)
        rep.metrics["diameter_peak_" + std::to_string(k)] = dh.peaks[k];
    for (std::size_t k = 0; k < ih.peaks.size(); ++k)
        rep.metrics["intensity_peak_" + std::to_string(k)] = ih.peaks[k];
    rep.elapsed_s = seconds_since(t0);

    std::ostringstream body;
    body << "beads " << n << " (failed contours " << n - dvals.size() << ")\n"
         << histogram_summary(dh, "diameter_um") << "\n"
         << histogram_summary(ih, "total_intensity") << "\n";
    rep.summary = finish_summary("E1", body.str(), cfg);
    write_outputs(opt, "e1", rep,
                  {{"e1_beads.csv", beads_csv.str()},
                   {"e1_diameter_hist.csv", histogram_csv(dh)},
                   {"e1_intensity_hist.csv", histogram_csv(ih)}});
    return rep;
}

// --- E2 ----------------------------------------------------------------------

ExperimentReport run_e2(const Config& cfg, const RunOptions& opt) {
    const auto t0 = Clock::now();
    const std::string p = "e2.";
    const BeadSetup s = bead_setup(cfg, p, {4, 4}, 0.0);
    const std::uint64_t seed = base_seed(cfg);
    const SolverConfig solver = solver_setup(cfg, p, 2000, 1e-12);
    const double lam = lambda_fraction(cfg, p, 1e-5);
    const double mismatch = cfg.get_double(p + "mismatch_fraction", 0.05);
    const std::size_t crop = cfg.get_count(p + "crop_px", 134);
    require(mismatch > 0.0 && mismatch <= 1.0, p + "mismatch_fraction must be in (0, 1]");
    require(!s.flow.noise.enabled(), "E2 is defined on noiseless waveforms");
    require(crop >= 1, p + "crop_px must be >= 1");

    const IlluminationPattern pat = make_setup_pattern(s);
    const IlluminationPattern wrong = perturb_pattern(pat, mismatch, derive_seed(seed, 4));
    const std::vector<BeadSample> beads = make_beads(s, derive_seed(seed, 1));
    std::vector<ObjectImage> images;
    for (const auto& b : beads) images.push_back(b.image);
    const std::vector<Waveform> waves = simulate_batch(images, pat, s.flow, derive_seed(seed, 3), opt.threads);
    const Geometry geom = make_geometry(images.front(), pat);
    const Reconstructor matched(pat, geom);
    const Reconstructor mismatched(wrong, geom);

    const std::size_t n = beads.size();
    struct Row {
        double m134, x134, mnat, xnat;
        bool monotone;
    };
    std::vector<Row> rows(n);
    parallel_for(2 * n, opt.threads, [&](std::size_t job) {
        const std::size_t i = job / 2;
        const bool is_matched = job % 2 == 0;
        const Reconstruction r = (is_matched ? matched : mismatched).reconstruct(waves[i].samples, solver, lam);
        const double p134 = psnr(crop_centered(images[i], crop, crop), crop_centered(r.image, crop, crop));
        const double pnat = psnr(images[i], r.image);
        if (is_matched) {
            rows[i].m134 = p134;
            rows[i].mnat = pnat;
        } else {
            rows[i].x134 = p134;
            rows[i].xnat = pnat;
        }
    });

    ExperimentReport rep;
    rep.id = "E2";
    std::ostringstream csv;
    csv << "index,label,diameter_um,psnr_matched_crop_db,psnr_mismatched_crop_db,psnr_matched_native_db,"
           "psnr_mismatched_native_db\n";
    double min_m = kPsnrCapDb, max_x = 0.0, mean_m = 0.0, mean_x = 0.0;
    bool all_lower = true;
    for (std::size_t i = 0; i < n; ++i) {
        const Row& r = rows[i];
        csv << i << ',' << beads[i].label << ',' << num(beads[i].diameter_um) << ',' << num(r.m134) << ','
            << num(r.x134) << ',' << num(r.mnat) << ',' << num(r.xnat) << '\n';
        rep.rows.push_back({{"label", beads[i].label},
                            {"psnr_matched_crop_db", r.m134},
                            {"psnr_mismatched_crop_db", r.x134},
                            {"psnr_matched_native_db", r.mnat},
                            {"psnr_mismatched_native_db", r.xnat}});
        min_m = std::min(min_m, r.m134);
        max_x = std::max(max_x, r.x134);
        mean_m += r.m134 / static_cast<double>(n);
        mean_x += r.x134 / static_cast<double>(n);
        all_lower = all_lower && r.x134 < r.m134;
    }
    rep.metrics["instances"] = static_cast<double>(n);
    rep.metrics["psnr_matched_min_db"] = min_m;
    rep.metrics["psnr_matched_mean_db"] = mean_m;
    rep.metrics["psnr_mismatched_max_db"] = max_x;
    rep.metrics["psnr_mismatched_mean_db"] = mean_x;
    rep.metrics["mismatch_lower_everywhere"] = all_lower ? 1.0 : 0.0;
    rep.elapsed_s = seconds_since(t0);

    std::ostringstream body;
    body << "instances " << n << "\ncrop " << crop << "x" << crop << "\n"
         << "psnr matched min " << num(min_m) << " dB, mean " << num(mean_m) << " dB\n"
         << "psnr mismatched (" << num(mismatch) << " of pixels flipped) max " << num(max_x) << " dB, mean "
         << num(mean_x) << " dB\n"
         << "mismatched lower on every instance: " << (all_lower ? "yes" : "no") << "\n";
    rep.summary = finish_summary("E2", body.str(), cfg);
    write_outputs(opt, "e2", rep, {{"e2_psnr.csv", csv.str()}});
    return rep;
}

// --- E3 ----------------------------------------------------------------------

ExperimentReport run_e3(const Config& cfg, const RunOptions& opt) {
    const auto t0 = Clock::now();
    const std::string p = "e3.";
    const CellSetup s = cell_setup(cfg, p);
    const WaveformFeatureSetup fs = waveform_feature_setup(cfg, p);
    const SvmSetup svm = svm_setup(cfg, p);
    const std::vector<std::uint64_t> seeds = run_seeds(cfg, p);
    const IlluminationPattern pat = make_setup_pattern(s);

    ExperimentReport rep;
    rep.id = "E3";
    std::ostringstream csv;
    csv << "run,seed,auc_test,auc_train\n";
    double min_auc = 1.0, mean_auc = 0.0;
    for (std::size_t r = 0; r < seeds.size(); ++r) {
        const CellData d = cell_data(s, seeds[r], opt.threads);
        const AucPair a = waveform_auc(d, pat, s.flow, fs, svm, seeds[r], opt.threads);
        csv << r << ',' << seeds[r] << ',' << num(a.test) << ',' << num(a.train) << '\n';
        rep.rows.push_back({{"run", static_cast<double>(r)}, {"auc_test", a.test}, {"auc_train", a.train}});
        min_auc = std::min(min_auc, a.test);
        mean_auc += a.test / static_cast<double>(seeds.size());
    }
    rep.metrics["runs"] = static_cast<double>(seeds.size());
    rep.metrics["auc_min"] = min_auc;
    rep.metrics["auc_mean"] = mean_auc;
    rep.elapsed_s = seconds_since(t0);

    std::ostringstream body;
    body << "classes " << s.negative.label << " (-1) vs " << s.positive.label << " (+1)\n"
         << "split " << s.train_per_class << "/class train, " << s.test_per_class << "/class test\n"
         << "features " << waveform_preprocessing_id(fs.target_len, fs.align, fs.norm) << "\n"
         << "waveform test AUC min " << num(min_auc) << ", mean " << num(mean_auc) << " over " << seeds.size()
         << " runs\n";
    rep.summary = finish_summary("E3", body.str(), cfg);
    write_outputs(opt, "e3", rep, {{"e3_auc.csv", csv.str()}});
    return rep;
}

// --- E4 ----------------------------------------------------------------------

ExperimentReport run_e4(const Config& cfg, const RunOptions& opt) {
    const auto t0 = Clock::now();
    // same classes, flow and seeds as E3 so the two paths are compared on identical cells
    const std::string p = "e3.";
    const CellSetup s = cell_setup(cfg, p);
    const WaveformFeatureSetup fs = waveform_feature_setup(cfg, p);
    const SvmSetup wsvm = svm_setup(cfg, p);
    const SvmSetup isvm = svm_setup(cfg, "e4.");
    const std::vector<std::uint64_t> seeds = run_seeds(cfg, p);
    require(s.canvas.rows >= kImageCrop && s.canvas.cols >= kImageCrop,
            "E4 needs a canvas of at least 28x28 pixels");
    const IlluminationPattern pat = make_setup_pattern(s);

    ExperimentReport rep;
    rep.id = "E4";
    std::ostringstream csv;
    csv << "run,seed,auc_waveform,auc_image,auc_difference\n";
    double min_img = 1.0, mean_img = 0.0, mean_wave = 0.0;
    for (std::size_t r = 0; r < seeds.size(); ++r) {
        const CellData d = cell_data(s, seeds[r], opt.threads);
        const AucPair w = waveform_auc(d, pat, s.flow, fs, wsvm, seeds[r], opt.threads);
        const AucPair im = image_auc(d.train.images, d.train.labels, d.test.images, d.test.labels, isvm, seeds[r]);
        csv << r << ',' << seeds[r] << ',' << num(w.test) << ',' << num(im.test) << ',' << num(w.test - im.test)
            << '\n';
        rep.rows.push_back({{"run", static_cast<double>(r)},
                            {"auc_waveform", w.test},
                            {"auc_image", im.test},
                            {"auc_difference", w.test - im.test}});
        min_img = std::min(min_img, im.test);
        mean_img += im.test / static_cast<double>(seeds.size());
        mean_wave += w.test / static_cast<double>(seeds.size());
    }
    rep.metrics["runs"] = static_cast<double>(seeds.size());
    rep.metrics["auc_image_min"] = min_img;
    rep.metrics["auc_image_mean"] = mean_img;
    rep.metrics["auc_waveform_mean"] = mean_wave;
    rep.metrics["auc_difference_mean"] = mean_wave - mean_img;
    rep.elapsed_s = seconds_since(t0);

    std::ostringstream body;
    body << "image path: " << kImageCrop << "x" << kImageCrop
         << " centroid crops, random quarter-turn rotations, train-set global max scaling\n"
         << "image AUC min " << num(min_img) << ", mean " << num(mean_img) << "\n"
         << "waveform AUC mean " << num(mean_wave) << "\n"
         << "mean AUC difference (waveform - image) " << num(mean_wave - mean_img) << "\n";
    rep.summary = finish_summary("E4", body.str(), cfg);
    write_outputs(opt, "e4", rep, {{"e4_auc.csv", csv.str()}});
    return rep;
}

// --- E5 ----------------------------------------------------------------------

ExperimentReport run_e5(const Config& cfg, const RunOptions& opt) {
    const auto t0 = Clock::now();
    const std::string p = "e5.";
    const CellSetup s = cell_setup(cfg, p, kE5TrainPerClass);
    const WaveformFeatureSetup fs = waveform_feature_setup(cfg, p);
    const SvmSetup wsvm = svm_setup(cfg, p);
    const SvmSetup isvm = svm_setup(cfg, p + "image.");
    const SolverConfig solver = solver_setup(cfg, p, 50, 1e-6);
    const double lam = lambda_fraction(cfg, p, 1e-3);
    const std::vector<double> levels = cfg.get_doubles(p + "jitter_levels", {0.0, 0.05, 0.1});
    const std::vector<std::uint64_t> seeds = run_seeds(cfg, p);
    require(!levels.empty(), p + "jitter_levels must not be empty");
    for (double j : levels) require(j >= 0.0 && j < 1.0, p + "jitter levels must be in [0, 1)");
    require(s.canvas.rows >= kImageCrop && s.canvas.cols >= kImageCrop,
            "E5 needs a canvas of at least 28x28 pixels");

    const IlluminationPattern pat = make_setup_pattern(s);
    const Reconstructor rec(pat, make_geometry(s.canvas.rows, s.canvas.cols, pat));
    auto reconstruct_all = [&](const std::vector<Waveform>& waves) {
        std::vector<ObjectImage> out(waves.size(), ObjectImage(s.canvas.rows, s.canvas.cols, s.pitch_um));
        parallel_for(waves.size(), opt.threads,
                     [&](std::size_t i) { out[i] = rec.reconstruct(waves[i].samples, solver, lam).image; });
        return out;
    };

    ExperimentReport rep;
    rep.id = "E5";
    std::ostringstream csv;
    csv << "jitter,run,seed,auc_waveform,auc_image\n";
    const double top = *std::max_element(levels.begin(), levels.end());
    bool ordering = true;
    for (double j : levels) {
        FlowConfig flow = s.flow;
        flow.velocity_jitter_frac = j;
        double mean_w = 0.0, mean_i = 0.0;
        for (std::size_t r = 0; r < seeds.size(); ++r) {
            const CellData d = cell_data(s, seeds[r], opt.threads);
            const auto wtrain = cell_waveforms(d.train.images, pat, flow, derive_seed(seeds[r], 12), opt.threads);
            const auto wtest = cell_waveforms(d.test.images, pat, flow, derive_seed(seeds[r], 13), opt.threads);
            const AucPair w = fit_and_score(waveform_dataset(wtrain, d.train.labels, fs),
                                            waveform_dataset(wtest, d.test.labels, fs), wsvm,
                                            derive_seed(seeds[r], 14));
            const AucPair im = image_auc(reconstruct_all(wtrain), d.train.labels, reconstruct_all(wtest),
                                         d.test.labels, isvm, seeds[r]);
            csv << num(j) << ',' << r << ',' << seeds[r] << ',' << num(w.test) << ',' << num(im.test) << '\n';
            rep.rows.push_back({{"jitter", j},
                                {"run", static_cast<double>(r)},
                                {"auc_waveform", w.test},
                                {"auc_image", im.test}});
            if (j == top) ordering = ordering && w.test >= im.test;
            mean_w += w.test / static_cast<double>(seeds.size());
            mean_i += im.test / static_cast<double>(seeds.size());
        }
        rep.metrics["auc_waveform_mean_j" + num(j)] = mean_w;
        rep.metrics["auc_image_mean_j" + num(j)] = mean_i;
    }
    rep.metrics["runs"] = static_cast<double>(seeds.size());
    rep.metrics["max_jitter"] = top;
    rep.metrics["waveform_not_below_image_at_max_jitter"] = ordering ? 1.0 : 0.0;
    rep.elapsed_s = seconds_since(t0);

    std::ostringstream body;
    body << "image path: nominal-velocity reconstruction, then the " << kImageCrop << "x" << kImageCrop
         << " pipeline\n";
    for (double j : levels)
        body << "jitter " << num(j) << ": waveform AUC mean " << num(rep.metrics["auc_waveform_mean_j" + num(j)])
             << ", image AUC mean " << num(rep.metrics["auc_image_mean_j" + num(j)]) << "\n";
    body << "waveform AUC >= image AUC on every run at jitter " << num(top) << ": " << (ordering ? "yes" : "no")
         << "\n";
    rep.summary = finish_summary("E5", body.str(), cfg);
    write_outputs(opt, "e5", rep, {{"e5_jitter.csv", csv.str()}});
    return rep;
}

ExperimentReport run_experiment(const std::string& id, const Config& cfg, const RunOptions& opt) {
    const std::string u = upper(id);
    if (u == "E1") return run_e1(cfg, opt);
    if (u == "E2") return run_e2(cfg, opt);
    if (u == "E3") return run_e3(cfg, opt);
    if (u == "E4") return run_e4(cfg, opt);
    if (u == "E5") return run_e5(cfg, opt);
    throw ParameterError("unknown experiment: " + id + " (expected E1..E5)");
}

// --- dataset generation ------------------------------------------------------

std::vector<std::filesystem::path> generate_datasets(const std::string& id, const Config& cfg,
                                                     const RunOptions& opt) {
    const std::string u = upper(id);
    require(!opt.out_dir.empty(), "gen needs an output directory");
    const std::uint64_t seed = base_seed(cfg);
    std::vector<std::filesystem::path> written;
    auto save_pattern = [&](const IlluminationPattern& pat) {
        ensure_dir(opt.out_dir);
        written.push_back(opt.out_dir / "pattern.gcim");
        save_grid(written.back(), pat);
    };

    if (u == "E1" || u == "E2") {
        const std::string p = u == "E1" ? "e1." : "e2.";
        const BeadSetup s = u == "E1" ? bead_setup(cfg, p, {300, 300}, kE1ShotScale) : bead_setup(cfg, p, {4, 4}, 0.0);
        FlowConfig flow = s.flow;
        flow.noise.seed = derive_seed(seed, 2);
        const IlluminationPattern pat = make_setup_pattern(s);
        const std::vector<BeadSample> beads = make_beads(s, derive_seed(seed, 1));
        std::vector<ObjectImage> images;
        for (const auto& b : beads) images.push_back(b.image);
        const auto waves = simulate_batch(images, pat, flow, derive_seed(seed, 3), opt.threads);
        save_pattern(pat);
        std::vector<WaveformRecord> recs;
        std::ostringstream truth;
        truth << "index,label,diameter_um,total_intensity,image\n";
        const std::filesystem::path objdir = opt.out_dir / "objects";
        ensure_dir(objdir);
        for (std::size_t i = 0; i < beads.size(); ++i) {
            recs.push_back(WaveformRecord{beads[i].label, waves[i]});
            char name[32];
            std::snprintf(name, sizeof name, "bead_%05zu.gcim", i);
            save_grid(objdir / name, beads[i].image);
            written.push_back(objdir / name);
            truth << i << ',' << beads[i].label << ',' << num(beads[i].diameter_um) << ','
                  << num(total_intensity(beads[i].image)) << ",objects/" << name << '\n';
        }
        written.push_back(opt.out_dir / "waveforms.gcwf");
        save_waveforms(written.back(), recs);
        written.push_back(opt.out_dir / "objects.csv");
        write_file(written.back(), truth.str());
    } else if (u == "E3" || u == "E4" || u == "E5") {
        const std::string p = u == "E5" ? "e5." : "e3.";
        const CellSetup s = cell_setup(cfg, p, u == "E5" ? kE5TrainPerClass : 1000);
        const std::uint64_t run_seed = run_seeds(cfg, p).front();
        const IlluminationPattern pat = make_setup_pattern(s);
        const CellData d = cell_data(s, run_seed, opt.threads);
        save_pattern(pat);
        auto to_label = [](int l) { return static_cast<std::uint32_t>(l > 0 ? 1 : 0); };
        if (u == "E4") {
            std::ostringstream manifest;
            manifest << "file,label,split\n";
            const std::filesystem::path imgdir = opt.out_dir / "images";
            ensure_dir(imgdir);
            auto dump = [&](const CellSplit& split, const char* tag) {
                for (std::size_t i = 0; i < split.images.size(); ++i) {
                    char name[48];
                    std::snprintf(name, sizeof name, "%s_%05zu.gcim", tag, i);
                    save_grid(imgdir / name, split.images[i]);
                    written.push_back(imgdir / name);
                    manifest << "images/" << name << ',' << to_label(split.labels[i]) << ',' << tag << '\n';
                }
            };
            dump(d.train, "train");
            dump(d.test, "test");
            written.push_back(opt.out_dir / "manifest.csv");
            write_file(written.back(), manifest.str());
        } else {
            const auto wtrain = cell_waveforms(d.train.images, pat, s.flow, derive_seed(run_seed, 12), opt.threads);
            const auto wtest = cell_waveforms(d.test.images, pat, s.flow, derive_seed(run_seed, 13), opt.threads);
            auto records = [&](const std::vector<Waveform>& w, const std::vector<int>& labels) {
                std::vector<WaveformRecord> out;
                for (std::size_t i = 0; i < w.size(); ++i) out.push_back(WaveformRecord{to_label(labels[i]), w[i]});
                return out;
            };
            written.push_back(opt.out_dir / "train.gcwf");
            save_waveforms(written.back(), records(wtrain, d.train.labels));
            written.push_back(opt.out_dir / "test.gcwf");
            save_waveforms(written.back(), records(wtest, d.test.labels));
        }
    } else {
        throw ParameterError("unknown experiment: " + id + " (expected E1..E5)");
    }
    written.push_back(opt.out_dir / "gen_config.txt");
    write_file(written.back(), "[resolved config]\n" + cfg.resolved_text());
    return written;
}

// --- image datasets on disk -------------------------------------------------

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open manifest " + path.string());
    std::vector<ManifestEntry> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || (lineno == 1 && line.rfind("file,", 0) == 0)) continue;
        std::vector<std::string> f;
        std::istringstream ls(line);
        for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
        if (f.size() < 2 || f.size() > 3 || (f[1] != "0" && f[1] != "1"))
            throw DegenerateDataError("manifest line " + std::to_string(lineno) + ": expected file,label[,split]");
        out.push_back(ManifestEntry{path.parent_path() / f[0], static_cast<std::uint32_t>(f[1] == "1"),
                                    f.size() == 3 ? f[2] : std::string()});
    }
    return out;
}

std::string image_preprocessing_id(std::size_t crop, double scale) {
    return "image/" + std::to_string(crop) + "/" + format_double(scale);
}

std::pair<std::size_t, double> parse_image_preprocessing_id(const std::string& id) {
    std::vector<std::string> parts;
    std::istringstream is(id);
    for (std::string part; std::getline(is, part, '/');) parts.push_back(part);
    if (parts.size() != 3 || parts[0] != "image") throw ParameterError("not an image preprocessing id: " + id);
    try {
        const double scale = std::stod(parts[2]);
        require(scale > 0.0, "image preprocessing scale must be positive");
        return {static_cast<std::size_t>(std::stoull(parts[1])), scale};
    } catch (const std::logic_error&) {
        throw ParameterError("bad image preprocessing id: " + id);
    }
}

// --- bench -------------------------------------------------------------------

BenchReport bench_scoring(const LinearModel& model, const std::vector<WaveformRecord>& records,
                          const WaveformFeatureSetup& fs, std::size_t repetitions) {
    require(!records.empty(), "bench: empty dataset");
    require(repetitions >= 1, "bench: repetitions must be >= 1");
    require(model.feature_len == fs.target_len && model.weights.size() == fs.target_len,
            "bench: model feature length " + std::to_string(model.feature_len) +
                " does not match preprocessing length " + std::to_string(fs.target_len));
    std::vector<double> lat(repetitions);
    double checksum = 0.0;
    const auto start = Clock::now();
    for (std::size_t i = 0; i < repetitions; ++i) {
        const Waveform& w = records[i % records.size()].waveform;
        const auto t0 = Clock::now();
        const FeatureVector f = preprocess_waveform(w, fs.target_len, fs.align, fs.norm);
        checksum += decision_score(model, f.values);
        lat[i] = std::chrono::duration<double, std::micro>(Clock::now() - t0).count();
    }
    const double total = seconds_since(start);
    BenchReport rep;
    rep.repetitions = repetitions;
    rep.checksum = checksum;
    rep.throughput_per_s = static_cast<double>(repetitions) / total;
    std::vector<double> sorted = lat;
    std::sort(sorted.begin(), sorted.end());
    const auto at = [&](double q) {
        const std::size_t k = std::min(sorted.size() - 1, static_cast<std::size_t>(std::ceil(q * sorted.size())) - 1);
        return sorted[k];
    };
    rep.median_us = at(0.5);
    rep.p99_us = at(0.99);
    return rep;
}

std::string hardware_description() {
    return hardware_line();
}

}  // namespace gcyt
