// fogremoval: synthesis, training, inference, evaluation and inspection.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "fog/checkpoint.hpp"
#include "fog/dataset.hpp"
#include "fog/fog_physics.hpp"
#include "fog/image_io.hpp"
#include "fog/metrics.hpp"
#include "fog/scene.hpp"
#include "fog/structure.hpp"
#include "fog/trainer.hpp"

namespace fs = std::filesystem;
using namespace fog;

namespace {

constexpr int kExitInternal = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::pair<double, double> parse_range(const std::string& text, const char* flag) {
    const auto colon = text.find(':');
    try {
        if (colon == std::string::npos) {
            const double v = std::stod(text);
            return {v, v};
        }
        return {std::stod(text.substr(0, colon)), std::stod(text.substr(colon + 1))};
    } catch (const std::exception&) {
        throw UsageError(std::string(flag) + ": expected lo:hi, got '" + text + "'");
    }
}

void make_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw UsageError("cannot create output directory " + dir.string());
    const fs::path probe = dir / ".write_probe";
    std::ofstream(probe) << "";
    if (!fs::exists(probe)) throw UsageError("output directory is not writable: " + dir.string());
    fs::remove(probe);
}

void write_echo(const CLI::App& cmd, const fs::path& path) {
    std::ofstream out(path);
    out << "# " << cmd.get_name() << "\n" << cmd.config_to_str(true, false);
    if (!out) throw UsageError("cannot write " + path.string());
}

// Worker count for per-file loops: DEFOG_THREADS, capped by the file count.
std::size_t worker_count(std::size_t jobs) {
    std::size_t n = 1;
    if (const char* env = std::getenv("DEFOG_THREADS")) {
        try {
            n = std::max<long>(1, std::stol(env));
        } catch (const std::exception&) {
            throw UsageError(std::string("DEFOG_THREADS: not a number: ") + env);
        }
    }
    return std::max<std::size_t>(1, std::min(n, jobs));
}

template <class F>
void parallel_for(std::size_t jobs, F&& f) {
    const std::size_t workers = worker_count(jobs);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto run = [&] {
        for (std::size_t i; (i = next++) < jobs;) {
            try {
                f(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
    run();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

bool is_image(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".png" || ext == ".ppm" || ext == ".pgm" || ext == ".pnm";
}

std::vector<fs::path> list_images(const fs::path& input) {
    if (!fs::exists(input)) throw UsageError("input not found: " + input.string());
    if (!fs::is_directory(input)) return {input};
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(input))
        if (e.is_regular_file() && is_image(e.path())) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw UsageError("no images in " + input.string());
    return files;
}

Checkpoint load_checkpoint(const fs::path& path) {
    if (!fs::exists(path)) throw UsageError("checkpoint not found: " + path.string());
    return Checkpoint::load(path);
}

// `sub --config FILE ...` becomes `sub --key=value ... ...`: file entries first,
// so the command line wins under the take-last policy.
std::vector<std::string> expand_config(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    if (args.size() < 2) return args;
    const std::string sub = args[1];
    std::string file;
    for (std::size_t i = 2; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) file = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0) file = args[i].substr(9);
    }
    if (file.empty()) return args;
    std::vector<std::string> injected;
    for (const auto& item : CLI::ConfigINI().from_file(file)) {
        if (item.name == "++" || item.name == "--" || item.name == "config") continue;
        if (!item.parents.empty() && !(item.parents.size() == 1 && item.parents[0] == sub)) continue;
        std::string value;
        for (std::size_t i = 0; i < item.inputs.size(); ++i) value += (i ? "," : "") + item.inputs[i];
        if (value.empty()) continue;
        injected.push_back("--" + item.name + "=" + value);
    }
    args.insert(args.begin() + 2, injected.begin(), injected.end());
    return args;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
    std::size_t count = 10;
    std::size_t size = 64;
    std::uint64_t seed = 0;
    std::string beta_mode = "nonuniform";
    std::string beta_range = "0.2:1.2";
    std::string airlight_range;
    std::string process = "paired";
    std::string kind = "paired";
    fs::path out;
};

int run_synth(const SynthArgs& a, const CLI::App& cmd) {
    const auto [blo, bhi] = parse_range(a.beta_range, "--beta-range");
    if (a.size == 0 || a.size % 16 != 0) throw UsageError("--size must be a positive multiple of 16");
    FogProcess proc = a.process == "held-out" ? held_out_process(a.size, blo, bhi) : paired_process(a.size, blo, bhi);
    proc.beta.uniform = a.beta_mode == "uniform";
    if (!a.airlight_range.empty()) std::tie(proc.airlight_lo, proc.airlight_hi) = parse_range(a.airlight_range, "--airlight-range");
    if (proc.airlight_lo <= 0 || proc.airlight_hi > 1 || proc.airlight_lo > proc.airlight_hi)
        throw UsageError("--airlight-range must lie in (0, 1] with lo <= hi");
    if (proc.beta.uniform) proc.tint = 0.0;

    make_dir(a.out);
    for (const char* sub : {"fog", "clear", "depth"}) make_dir(a.out / sub);
    DatasetManifest manifest;
    const bool paired = a.kind == "paired";
    for (std::size_t i = 0; i < a.count; ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "%05zu.png", i);
        FogSample s = synthesize(a.seed * 1000003ULL + i, proc);
        Image depth = s.depth;
        for (auto& v : depth.pixels) v /= proc.scene.max_depth;
        save_image(a.out / "fog" / name, s.fog);
        save_image(a.out / "clear" / name, s.clear);
        save_image(a.out / "depth" / name, depth);
        DatasetRecord r;
        r.fog = a.out / "fog" / name;
        r.kind = paired ? RecordKind::Paired : RecordKind::Unpaired;
        if (paired) r.clear = a.out / "clear" / name;
        r.depth = a.out / "depth" / name;
        manifest.records.push_back(r);
    }
    manifest.save(a.out / "manifest.tsv");
    write_echo(cmd, a.out / "run.cfg");
    std::cerr << "synth: wrote " << a.count << " records to " << (a.out / "manifest.tsv").string() << "\n";
    return 0;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
    std::string stage;
    fs::path paired, real, refs, gray_ckpt, out;
    long steps = 1000;
    std::uint64_t seed = 1;
    std::size_t batch = TrainConfig{}.batch_size, real_batch = TrainConfig{}.real_batch_size, crop = TrainConfig{}.crop_size;
    int feedback_iters = 2;
    double lambda_m = 1.0, lambda_s = 0.1, lambda_u = 1.0, lambda_d = 0.005;
    double lr = 2e-4;
    bool feedback_paired_losses = true;
    std::string adversarial = "lsgan";
    long log_every = 100;
};

TrainingData load_training_data(const TrainArgs& a) {
    TrainingData d;
    try {
        const DatasetManifest paired = DatasetManifest::load(a.paired);
        for (const auto& r : paired.records)
            if (r.kind != RecordKind::Paired) throw UsageError(a.paired.string() + ": --paired manifest has unpaired records");
        d.paired_fog = paired.fog_images();
        d.paired_clear = paired.clear_images();
        d.real_fog = DatasetManifest::load(a.real).fog_images();
        d.references = a.refs.empty() ? d.paired_clear : DatasetManifest::load(a.refs).clear_images();
    } catch (const ManifestError& e) {
        throw UsageError(e.what());
    }
    return d;
}

int run_train(const TrainArgs& a, const CLI::App& cmd) {
    if (a.stage == "rgb" && a.gray_ckpt.empty()) throw UsageError("--stage rgb requires --gray-ckpt");
    TrainConfig cfg;
    cfg.seed = a.seed;
    cfg.steps = a.steps;
    cfg.batch_size = a.batch;
    cfg.real_batch_size = a.real_batch;
    cfg.crop_size = a.crop;
    cfg.feedback_iters = a.feedback_iters;
    cfg.weights = {a.lambda_m, a.lambda_s, a.lambda_u, a.lambda_d};
    cfg.adam.lr = a.lr;
    cfg.feedback_paired_losses = a.feedback_paired_losses;
    cfg.objective = a.adversarial == "bce" ? AdversarialObjective::BinaryCrossEntropy : AdversarialObjective::LeastSquares;
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    TrainingData data = load_training_data(a);
    try {
        data.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    make_dir(a.out);
    write_echo(cmd, a.out / "run.cfg");
    std::ofstream log(a.out / "loss.log");
    auto sink = [&](const StepRecord& r) {
        log << format_record(r) << '\n';
        if (a.log_every > 0 && (r.step % a.log_every == 0 || r.step == cfg.steps))
            std::cerr << r.stage << " step " << r.step << "/" << cfg.steps << " total " << r.total << "\n";
    };
    Checkpoint ckpt;
    if (a.stage == "gray") {
        ckpt = train_grayscale(data, cfg, sink);
    } else {
        Checkpoint gray = load_checkpoint(a.gray_ckpt);
        try {
            ckpt = train_rgb(gray, data, cfg, sink);
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        } catch (const CheckpointError& e) {
            throw UsageError(e.what());
        }
    }
    ckpt.save(a.out / "checkpoint.bin");
    if (!log) throw std::runtime_error("failed writing loss log");
    return 0;
}

// ---------------------------------------------------------------- defog

struct DefogArgs {
    fs::path ckpt, input, out;
    int iters = 2;
    bool dump_uncertainty = false;
};

int run_defog(const DefogArgs& a, const CLI::App& cmd) {
    if (a.iters < 0 || a.iters > kMaxFeedbackIters)
        throw UsageError("--iters must be in [0, " + std::to_string(kMaxFeedbackIters) + "]");
    const RgbModel model = [&] {
        try {
            return RgbModel::from_checkpoint(load_checkpoint(a.ckpt));
        } catch (const CheckpointError& e) {
            throw UsageError(e.what());
        }
    }();
    const auto files = list_images(a.input);
    make_dir(a.out);
    write_echo(cmd, a.out / "run.cfg");
    std::vector<std::string> ranges(files.size());
    parallel_for(files.size(), [&](std::size_t i) {
        const Image input = load_image(files[i]);
        if (input.channels != 3) throw UsageError(files[i].string() + ": expected an RGB image");
        DefogResult r = defog(model, input, a.iters);
        const std::string stem = files[i].stem().string();
        save_image(a.out / (stem + ".png"), r.output);
        if (!a.dump_uncertainty) return;
        std::ostringstream line;
        for (std::size_t k = 0; k < r.uncertainty.size(); ++k) {
            double lo = 0, hi = 0;
            Image heat = normalize_for_display(r.uncertainty[k], &lo, &hi);
            const std::string name = stem + "_theta" + std::to_string(k) + ".png";
            save_image(a.out / name, heat);
            char buf[160];
            std::snprintf(buf, sizeof buf, "%s\ttheta%zu\tmin=%.17g\tmax=%.17g\n", stem.c_str(), k, lo, hi);
            line << buf;
        }
        ranges[i] = line.str();
    });
    for (const auto& r : ranges) std::cout << r;
    return 0;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
    fs::path pred, gt, out, plot_loss;
};

// Loss curves as a standalone SVG: one polyline per logged term.
void plot_loss(const fs::path& log_path, const fs::path& svg_path) {
    std::ifstream in(log_path);
    if (!in) throw UsageError("cannot read loss log " + log_path.string());
    std::vector<StepRecord> recs;
    for (std::string line; std::getline(in, line);)
        if (!line.empty()) recs.push_back(parse_record(line));
    if (recs.empty()) throw UsageError("loss log is empty: " + log_path.string());
    const std::vector<std::pair<const char*, double StepRecord::*>> series{
        {"total", &StepRecord::total},         {"mse", &StepRecord::w_mse},
        {"multiplier", &StepRecord::w_multiplier}, {"structure", &StepRecord::w_structure},
        {"uncertainty", &StepRecord::w_uncertainty}, {"adversarial", &StepRecord::w_adversarial},
        {"discriminator", &StepRecord::discriminator}};
    const char* colors[] = {"#000000", "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};
    const double W = 800, H = 480, pad = 50;
    double lo = 1e300, hi = -1e300;
    for (const auto& r : recs)
        for (const auto& [name, field] : series) {
            const double v = std::log10(std::max(r.*field, 1e-12));
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    if (hi <= lo) hi = lo + 1;
    std::ofstream svg(svg_path);
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << pad << "\" y=\"20\" font-size=\"12\">log10 weighted loss vs step (" << recs.size()
        << " steps)</text>\n";
    for (std::size_t s = 0; s < series.size(); ++s) {
        svg << "<polyline fill=\"none\" stroke-width=\"1\" stroke=\"" << colors[s] << "\" points=\"";
        for (std::size_t i = 0; i < recs.size(); ++i) {
            const double x = pad + (W - 2 * pad) * (recs.size() == 1 ? 0.0 : double(i) / double(recs.size() - 1));
            const double v = std::log10(std::max(recs[i].*(series[s].second), 1e-12));
            svg << x << "," << (H - pad - (H - 2 * pad) * (v - lo) / (hi - lo)) << " ";
        }
        svg << "\"/>\n<text x=\"" << W - pad - 90 << "\" y=\"" << pad + 14 * s << "\" font-size=\"11\" fill=\""
            << colors[s] << "\">" << series[s].first << "</text>\n";
    }
    svg << "</svg>\n";
    if (!svg) throw std::runtime_error("failed writing " + svg_path.string());
}

int run_eval(const EvalArgs& a, const CLI::App&) {
    if (!a.plot_loss.empty()) {
        plot_loss(a.plot_loss, a.out.empty() ? a.plot_loss.parent_path() / "loss.svg" : a.out);
        return 0;
    }
    if (a.pred.empty() || a.gt.empty() || a.out.empty()) throw UsageError("eval needs --pred, --gt and --out");
    // ground truth by file stem, from a directory or a paired manifest (keyed by the fog file's stem)
    std::map<std::string, fs::path> gt;
    if (fs::is_directory(a.gt)) {
        for (const auto& p : list_images(a.gt)) gt[p.stem().string()] = p;
    } else {
        try {
            for (const auto& r : DatasetManifest::load(a.gt).records)
                if (r.clear) gt[r.fog.stem().string()] = *r.clear;
        } catch (const ManifestError& e) {
            throw UsageError(e.what());
        }
    }
    std::vector<std::pair<std::string, fs::path>> matched;
    for (const auto& p : list_images(a.pred)) {
        auto it = gt.find(p.stem().string());
        if (it == gt.end()) std::cerr << "eval: no ground truth for " << p.string() << ", excluded\n";
        else matched.emplace_back(p.stem().string(), p);
    }
    if (matched.empty()) {
        std::cerr << "eval: no prediction matched a ground-truth file\n";
        return kExitUsage;
    }
    std::vector<EvalRow> rows(matched.size());
    parallel_for(matched.size(), [&](std::size_t i) {
        const Image p = load_image(matched[i].second), g = load_image(gt.at(matched[i].first));
        if (!p.same_shape(g)) throw UsageError("shape mismatch for " + matched[i].first);
        rows[i] = {matched[i].first, psnr(p, g), ssim(p, g)};
    });
    if (a.out.has_parent_path()) make_dir(a.out.parent_path());
    std::ofstream out(a.out);
    write_report(out, rows);
    if (!out) throw UsageError("cannot write report " + a.out.string());
    const EvalRow m = mean_row(rows);
    std::cout << "mean psnr " << m.psnr << " ssim " << m.ssim << " over " << rows.size() << " images\n";
    return 0;
}

// ---------------------------------------------------------------- inspect

struct InspectArgs {
    fs::path ckpt, input, out;
    bool keys = false, uncertainty = false;
    int iters = 0;
    std::size_t patch = 8, key_dim = 64;
    std::uint64_t seed = StructureEncoderConfig{}.seed;
};

int run_inspect(const InspectArgs& a, const CLI::App& cmd) {
    if (!a.keys && !a.uncertainty) throw UsageError("inspect needs --keys and/or --uncertainty");
    if (a.uncertainty && a.ckpt.empty()) throw UsageError("--uncertainty requires --ckpt");
    if (!fs::exists(a.input)) throw UsageError("input not found: " + a.input.string());
    const Image input = load_image(a.input);
    make_dir(a.out);
    write_echo(cmd, a.out / "run.cfg");
    const std::string stem = a.input.stem().string();
    if (a.keys) {
        StructureEncoderConfig cfg;
        cfg.patch_size = a.patch;
        cfg.key_dim = a.key_dim;
        cfg.seed = a.seed;
        StructureEncoder enc(cfg);
        KeyMatrix k;
        try {
            k = enc.extract_keys(input);
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
        save_image(a.out / (stem + "_keys_pca.png"), pca_keys_rgb(k));
    }
    if (a.uncertainty) {
        const RgbModel model = RgbModel::from_checkpoint(load_checkpoint(a.ckpt));
        if (input.channels != 3) throw UsageError("--uncertainty expects an RGB image");
        DefogResult r = defog(model, input, a.iters);
        double lo = 0, hi = 0;
        save_image(a.out / (stem + "_uncertainty.png"), normalize_for_display(r.uncertainty.back(), &lo, &hi));
        std::printf("%s\ttheta%d\tmin=%.17g\tmax=%.17g\n", stem.c_str(), a.iters, lo, hi);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fog synthesis and removal with grayscale guidance, structure and uncertainty feedback"};
    app.require_subcommand(1);
    std::string config_file;
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    SynthArgs sa;
    auto* synth = app.add_subcommand("synth", "render a paired fog dataset from procedural RGB-D scenes");
    synth->add_option("--config", config_file, "key = value file; command-line flags take precedence");
    synth->add_option("--count", sa.count, "number of scenes")->capture_default_str();
    synth->add_option("--size", sa.size, "image side in pixels (multiple of 16)")->capture_default_str();
    synth->add_option("--seed", sa.seed)->capture_default_str();
    synth->add_option("--beta-mode", sa.beta_mode)->check(CLI::IsMember({"uniform", "nonuniform"}))->capture_default_str();
    synth->add_option("--beta-range", sa.beta_range, "lo:hi (uniform mode uses lo)")->capture_default_str();
    synth->add_option("--airlight-range", sa.airlight_range, "lo:hi, default per process");
    synth->add_option("--process", sa.process, "paired or held-out fog statistics")
        ->check(CLI::IsMember({"paired", "held-out"}))
        ->capture_default_str();
    synth->add_option("--kind", sa.kind, "manifest record kind")->check(CLI::IsMember({"paired", "unpaired"}))->capture_default_str();
    synth->add_option("--out", sa.out)->required();

    TrainArgs ta;
    auto* train = app.add_subcommand("train", "train the grayscale or RGB stage");
    train->add_option("--config", config_file, "key = value file; command-line flags take precedence");
    train->add_option("--stage", ta.stage)->required()->check(CLI::IsMember({"gray", "rgb"}));
    train->add_option("--paired", ta.paired, "paired manifest")->required();
    train->add_option("--real", ta.real, "unpaired manifest")->required();
    train->add_option("--refs", ta.refs, "manifest of clear discriminator references (default: paired ground truths)");
    train->add_option("--gray-ckpt", ta.gray_ckpt, "frozen grayscale checkpoint (rgb stage)");
    train->add_option("--steps", ta.steps)->capture_default_str();
    train->add_option("--seed", ta.seed)->capture_default_str();
    train->add_option("--batch", ta.batch, "paired images per step")->capture_default_str();
    train->add_option("--real-batch", ta.real_batch, "unpaired images per step")->capture_default_str();
    train->add_option("--crop", ta.crop, "random crop side, 0 for full images")->capture_default_str();
    train->add_option("--feedback-iters", ta.feedback_iters)->capture_default_str();
    train->add_option("--lambda-m", ta.lambda_m)->capture_default_str();
    train->add_option("--lambda-s", ta.lambda_s)->capture_default_str();
    train->add_option("--lambda-u", ta.lambda_u)->capture_default_str();
    train->add_option("--lambda-d", ta.lambda_d)->capture_default_str();
    train->add_option("--lr", ta.lr)->capture_default_str();
    train->add_option("--feedback-paired-losses", ta.feedback_paired_losses)->capture_default_str();
    train->add_option("--adversarial", ta.adversarial)->check(CLI::IsMember({"lsgan", "bce"}))->capture_default_str();
    train->add_option("--log-every", ta.log_every, "progress line interval on stderr")->capture_default_str();
    train->add_option("--out", ta.out)->required();

    DefogArgs da;
    auto* defog_cmd = app.add_subcommand("defog", "remove fog from an image or a directory of images");
    defog_cmd->add_option("--config", config_file, "key = value file; command-line flags take precedence");
    defog_cmd->add_option("--ckpt", da.ckpt)->required();
    defog_cmd->add_option("--input", da.input)->required();
    defog_cmd->add_option("--iters", da.iters, "feedback iterations K")->capture_default_str();
    defog_cmd->add_option("--out", da.out)->required();
    defog_cmd->add_flag("--dump-uncertainty", da.dump_uncertainty, "write theta_0..theta_K heat maps");

    EvalArgs ea;
    auto* eval = app.add_subcommand("eval", "PSNR/SSIM report, or a loss plot");
    eval->add_option("--config", config_file, "key = value file; command-line flags take precedence");
    eval->add_option("--pred", ea.pred, "directory of predictions");
    eval->add_option("--gt", ea.gt, "ground-truth directory or paired manifest");
    eval->add_option("--out", ea.out, "report path (or SVG path with --plot-loss)");
    eval->add_option("--plot-loss", ea.plot_loss, "loss log to plot");

    InspectArgs ia;
    auto* inspect = app.add_subcommand("inspect", "key PCA and uncertainty visualizations");
    inspect->add_option("--config", config_file, "key = value file; command-line flags take precedence");
    inspect->add_option("--ckpt", ia.ckpt, "RGB checkpoint (needed for --uncertainty)");
    inspect->add_option("--input", ia.input)->required();
    inspect->add_flag("--keys", ia.keys, "PCA of structure keys over the patch grid");
    inspect->add_flag("--uncertainty", ia.uncertainty, "uncertainty heat map");
    inspect->add_option("--iters", ia.iters, "feedback iterations before reading theta")->capture_default_str();
    inspect->add_option("--patch", ia.patch)->capture_default_str();
    inspect->add_option("--key-dim", ia.key_dim)->capture_default_str();
    inspect->add_option("--encoder-seed", ia.seed)->capture_default_str();
    inspect->add_option("--out", ia.out)->required();

    try {
        std::vector<std::string> args = expand_config(argc, argv);
        std::vector<char*> ptrs;
        for (auto& a : args) ptrs.push_back(a.data());
        app.parse(static_cast<int>(ptrs.size()), ptrs.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (synth->parsed()) return run_synth(sa, *synth);
        if (train->parsed()) return run_train(ta, *train);
        if (defog_cmd->parsed()) return run_defog(da, *defog_cmd);
        if (eval->parsed()) return run_eval(ea, *eval);
        if (inspect->parsed()) return run_inspect(ia, *inspect);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ImageFormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
    return kExitUsage;
}
