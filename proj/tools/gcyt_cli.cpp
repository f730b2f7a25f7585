// gcyt: generate datasets, run experiments E1..E5, reconstruct, train, score, bench.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "gcyt/analyze.hpp"
#include "gcyt/classify.hpp"
#include "gcyt/config.hpp"
#include "gcyt/error.hpp"
#include "gcyt/experiments.hpp"
#include "gcyt/io.hpp"
#include "gcyt/parallel.hpp"
#include "gcyt/reconstruct.hpp"
#include "gcyt/rng.hpp"

namespace fs = std::filesystem;
using namespace gcyt;

namespace {

struct Globals {
    std::string config_path;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
    unsigned threads = 1;
};

Config load_config(const Globals& g) {
    Config cfg = g.config_path.empty() ? Config() : Config::load(g.config_path);
    if (g.seed) cfg.set("seed", std::to_string(*g.seed));
    return cfg;
}

RunOptions run_options(const Globals& g) {
    RunOptions opt;
    opt.out_dir = g.out_dir;
    opt.threads = std::max(1u, g.threads);
    return opt;
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write " + path.string());
    os << text;
    if (!os) throw IoError("write failed: " + path.string());
}

int to_label(std::uint32_t l) {
    return l ? 1 : -1;
}

struct Inputs {
    std::string waveforms;
    std::string manifest;
};

/// Image-path dataset from a manifest; rotations are seeded per entry.
LabeledDataset manifest_dataset(const std::string& path, std::size_t crop, std::uint64_t seed,
                                const std::string& split) {
    LabeledDataset data;
    const auto entries = load_manifest(path);
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (!split.empty() && entries[i].split != split) continue;
        const ObjectImage img(load_grid(entries[i].file));
        data.add(preprocess_image(img, derive_seed(seed, i), crop), to_label(entries[i].label));
    }
    require(data.size() > 0, "no images selected from manifest " + path);
    return data;
}

void cmd_gen(const Globals& g, const std::string& id) {
    const Config cfg = load_config(g);
    const auto files = generate_datasets(id, cfg, run_options(g));
    std::cout << "wrote " << files.size() << " files to " << g.out_dir << "\n";
}

void cmd_run(const Globals& g, const std::string& id) {
    const Config cfg = load_config(g);
    const ExperimentReport rep = run_experiment(id, cfg, run_options(g));
    std::cout << rep.summary.substr(0, rep.summary.find("[resolved config]"));
    std::cout << "outputs in " << g.out_dir << " (" << rep.elapsed_s << " s)\n";
}

struct ReconArgs {
    std::string pattern;
    std::string waveforms;
    long index = -1;
    double lambda_fraction = 1e-2;
    std::size_t iters = 500;
    double tol = 1e-6;
    long lateral_offset = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;
};

void cmd_reconstruct(const Globals& g, const ReconArgs& a) {
    const IlluminationPattern pat(load_grid(a.pattern));
    const auto records = load_waveforms(a.waveforms);
    require(!records.empty(), "no waveforms in " + a.waveforms);
    const std::size_t rows = a.rows ? a.rows : pat.rows();
    const std::size_t cols = a.cols ? a.cols : pat.rows();
    const Geometry geom = make_geometry(rows, cols, pat, a.lateral_offset);
    const Reconstructor rec(pat, geom);
    SolverConfig solver;
    solver.max_iters = a.iters;
    solver.tol = a.tol;

    std::vector<std::size_t> picks;
    if (a.index >= 0) {
        require(static_cast<std::size_t>(a.index) < records.size(), "waveform index out of range");
        picks.push_back(static_cast<std::size_t>(a.index));
    } else {
        for (std::size_t i = 0; i < records.size(); ++i) picks.push_back(i);
    }
    std::vector<Reconstruction> out(picks.size(), Reconstruction{ObjectImage(rows, cols, pat.pitch_um()), {}});
    parallel_for(picks.size(), std::max(1u, g.threads), [&](std::size_t k) {
        out[k] = rec.reconstruct(records[picks[k]].waveform.samples, solver, a.lambda_fraction);
    });

    const fs::path dir = g.out_dir;
    fs::create_directories(dir);
    std::ostringstream csv;
    csv << "index,label,file,iterations,converged,objective,residual_norm,total_intensity\n";
    for (std::size_t k = 0; k < picks.size(); ++k) {
        char name[32];
        std::snprintf(name, sizeof name, "recon_%05zu.gcim", picks[k]);
        save_grid(dir / name, out[k].image);
        const ReconReport& r = out[k].report;
        const double objective = r.objective.empty() ? 0.0 : r.objective.back();
        csv << picks[k] << ',' << records[picks[k]].label << ',' << name << ',' << r.iterations << ','
            << (r.converged ? 1 : 0) << ',' << format_double(objective) << ',' << format_double(r.residual_norm)
            << ',' << format_double(total_intensity(out[k].image)) << '\n';
    }
    write_text(dir / "reconstruct.csv", csv.str());
    std::cout << "reconstructed " << picks.size() << " waveform(s) into " << dir.string() << "\n";
}

void cmd_train(const Globals& g, const Inputs& in, const std::string& model_path) {
    const Config cfg = load_config(g);
    const std::uint64_t seed = cfg.get_u64("seed", 1);
    const SvmSetup svm = svm_setup(cfg, "train.");
    LabeledDataset data;
    std::string prep;
    if (!in.manifest.empty()) {
        const std::size_t crop = cfg.get_count("train.image.crop_px", kImageCrop);
        data = manifest_dataset(in.manifest, crop, derive_seed(seed, 15), cfg.get_string("train.image.split", "train"));
        const double scale = global_max(data);
        rescale(data, scale);
        prep = image_preprocessing_id(crop, scale);
    } else {
        require(!in.waveforms.empty(), "train needs --waveforms or --manifest");
        const WaveformFeatureSetup f = waveform_feature_setup(cfg, "train.");
        for (const auto& r : load_waveforms(in.waveforms))
            data.add(preprocess_waveform(r.waveform, f.target_len, f.align, f.norm), to_label(r.label));
        prep = waveform_preprocessing_id(f.target_len, f.align, f.norm);
    }
    TrainReport report;
    LinearModel model = train_svm(data, svm.lambda, svm.epochs, derive_seed(seed, 14), &report);
    model.preprocessing = prep;
    const fs::path path = model_path.empty() ? fs::path(g.out_dir) / "model.txt" : fs::path(model_path);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    save_model(path, model);
    const auto scores = decision_scores(model, data);
    std::cout << "trained on " << data.size() << " records (" << prep << "), train AUC "
              << roc_auc(scores, data.labels).auc << ", final objective " << report.epoch_objective.back()
              << "\nmodel: " << path.string() << "\n";
}

void cmd_score(const Globals& g, const Inputs& in, const std::string& model_path) {
    const Config cfg = load_config(g);
    const std::uint64_t seed = cfg.get_u64("seed", 1);
    const LinearModel model = load_model(model_path);
    LabeledDataset data;
    if (model.preprocessing.rfind("image/", 0) == 0) {
        require(!in.manifest.empty(), "image model needs --manifest");
        const auto [crop, scale] = parse_image_preprocessing_id(model.preprocessing);
        data = manifest_dataset(in.manifest, crop, derive_seed(seed, 16), cfg.get_string("score.image.split", "test"));
        rescale(data, scale);
    } else {
        require(!in.waveforms.empty(), "waveform model needs --waveforms");
        const WaveformFeatureSetup f = feature_setup_from_id(model.preprocessing);
        for (const auto& r : load_waveforms(in.waveforms))
            data.add(preprocess_waveform(r.waveform, f.target_len, f.align, f.norm), to_label(r.label));
    }
    require(data.size() > 0, "score: empty dataset");
    require(data.feature_len() == model.feature_len, "score: model and data feature lengths differ");
    const auto scores = decision_scores(model, data);
    std::ostringstream csv;
    csv << "index,label,score\n";
    bool pos = false, neg = false;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        csv << i << ',' << (data.labels[i] > 0 ? 1 : 0) << ',' << format_double(scores[i]) << '\n';
        (data.labels[i] > 0 ? pos : neg) = true;
    }
    write_text(fs::path(g.out_dir) / "scores.csv", csv.str());
    std::cout << "scored " << scores.size() << " records";
    if (pos && neg) std::cout << ", AUC " << format_double(roc_auc(scores, data.labels).auc);
    std::cout << "\n";
}

void cmd_bench(const Globals& g, const std::string& waveforms, const std::string& model_path, std::size_t reps) {
    const LinearModel model = load_model(model_path);
    const WaveformFeatureSetup f = feature_setup_from_id(model.preprocessing);
    const auto records = load_waveforms(waveforms);
    const BenchReport b = bench_scoring(model, records, f, reps);
    std::ostringstream os;
    os << "repetitions " << b.repetitions << "\nmedian_us " << b.median_us << "\np99_us " << b.p99_us
       << "\nthroughput_per_s " << b.throughput_per_s << "\nlatency_target_us " << kLatencyTargetUs
       << "\np99_within_target " << (b.p99_us < kLatencyTargetUs ? "yes" : "no") << "\nhardware "
       << hardware_description() << "\n";
    write_text(fs::path(g.out_dir) / "bench.txt", os.str());
    std::cout << os.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gcyt: ghost cytometry simulation, reconstruction and classification"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config_path, "key = value configuration file")->check(CLI::ExistingFile);
    app.add_option("--out", g.out_dir, "output directory");
    app.add_option("--seed", g.seed, "override the base seed");
    app.add_option("--threads", g.threads, "worker threads for per-object work");
    app.fallthrough();

    std::string exp_id;
    auto* gen = app.add_subcommand("gen", "write the datasets of an experiment");
    gen->add_option("experiment", exp_id, "E1..E5")->required();
    auto* run = app.add_subcommand("run", "run an experiment end to end");
    run->add_option("experiment", exp_id, "E1..E5")->required();

    ReconArgs ra;
    auto* rec = app.add_subcommand("reconstruct", "reconstruct images from waveforms");
    rec->add_option("--pattern", ra.pattern, "pattern (GCYT-IMG)")->required()->check(CLI::ExistingFile);
    rec->add_option("--waveforms", ra.waveforms, "waveforms (GCYT-WFM)")->required()->check(CLI::ExistingFile);
    rec->add_option("--index", ra.index, "reconstruct only this record");
    rec->add_option("--lambda-fraction", ra.lambda_fraction, "L1 weight as a fraction of ||A^T s||_inf");
    rec->add_option("--iters", ra.iters, "maximum solver iterations");
    rec->add_option("--tol", ra.tol, "relative objective tolerance");
    rec->add_option("--rows", ra.rows, "object rows (default: pattern rows)");
    rec->add_option("--cols", ra.cols, "object columns (default: pattern rows)");
    rec->add_option("--lateral-offset", ra.lateral_offset, "row offset of the object in the pattern");

    Inputs in;
    std::string model_path;
    auto* train = app.add_subcommand("train", "train a linear SVM");
    train->add_option("--waveforms", in.waveforms, "labelled waveforms (GCYT-WFM)")->check(CLI::ExistingFile);
    train->add_option("--manifest", in.manifest, "image manifest CSV")->check(CLI::ExistingFile);
    train->add_option("--model", model_path, "model output path (default: OUT/model.txt)");

    auto* score = app.add_subcommand("score", "score a dataset with a trained model");
    score->add_option("--waveforms", in.waveforms, "labelled waveforms (GCYT-WFM)")->check(CLI::ExistingFile);
    score->add_option("--manifest", in.manifest, "image manifest CSV")->check(CLI::ExistingFile);
    score->add_option("--model", model_path, "model file")->required()->check(CLI::ExistingFile);

    std::size_t reps = 100000;
    auto* bench = app.add_subcommand("bench", "time per-waveform preprocess + score");
    bench->add_option("--waveforms", in.waveforms, "waveforms (GCYT-WFM)")->required()->check(CLI::ExistingFile);
    bench->add_option("--model", model_path, "waveform model file")->required()->check(CLI::ExistingFile);
    bench->add_option("--reps", reps, "scoring repetitions");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : static_cast<int>(ErrorCategory::parameter);
    }

    try {
        if (*gen) cmd_gen(g, exp_id);
        else if (*run) cmd_run(g, exp_id);
        else if (*rec) cmd_reconstruct(g, ra);
        else if (*train) cmd_train(g, in, model_path);
        else if (*score) cmd_score(g, in, model_path);
        else if (*bench) cmd_bench(g, in.waveforms, model_path, reps);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(ErrorCategory::io);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
