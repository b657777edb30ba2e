// Python bindings: images are float64 numpy arrays of shape (H, W) or (H, W, C).

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "fog/checkpoint.hpp"
#include "fog/fog_physics.hpp"
#include "fog/image_io.hpp"
#include "fog/losses.hpp"
#include "fog/metrics.hpp"
#include "fog/scene.hpp"
#include "fog/structure.hpp"
#include "fog/trainer.hpp"

namespace py = pybind11;
using namespace fog;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Image to_image(const Array& a) {
    if (a.ndim() != 2 && a.ndim() != 3) throw std::invalid_argument("expected an (H, W) or (H, W, C) array");
    const auto h = static_cast<std::size_t>(a.shape(0)), w = static_cast<std::size_t>(a.shape(1));
    const std::size_t c = a.ndim() == 3 ? static_cast<std::size_t>(a.shape(2)) : 1;
    Image img(h, w, c);
    std::copy(a.data(), a.data() + img.size(), img.pixels.begin());
    return img;
}

Array to_array(const Image& img, bool squeeze = true) {
    std::vector<py::ssize_t> shape{static_cast<py::ssize_t>(img.height), static_cast<py::ssize_t>(img.width)};
    if (!(squeeze && img.channels == 1)) shape.push_back(static_cast<py::ssize_t>(img.channels));
    Array out(shape);
    std::copy(img.pixels.begin(), img.pixels.end(), out.mutable_data());
    return out;
}

FogField make_field(const Array& beta, const Array& depth, std::vector<double> airlight) {
    FogField f;
    f.beta = to_image(beta);
    f.depth = to_image(depth);
    f.airlight = std::move(airlight);
    return f;
}

std::vector<Image> to_images(const std::vector<Array>& arrays) {
    std::vector<Image> out;
    for (const auto& a : arrays) out.push_back(to_image(a));
    return out;
}

py::bytes checkpoint_bytes(const Checkpoint& c) { return py::bytes(c.serialize()); }
Checkpoint checkpoint_from(const py::bytes& b) { return Checkpoint::deserialize(std::string(b)); }

TrainConfig make_config(std::uint64_t seed, long steps, std::size_t batch_size, std::size_t real_batch_size,
                        std::size_t crop_size, int feedback_iters, double lambda_m, double lambda_s, double lambda_u, double lambda_d) {
    TrainConfig cfg;
    cfg.seed = seed;
    cfg.steps = steps;
    cfg.batch_size = batch_size;
    cfg.real_batch_size = real_batch_size;
    cfg.crop_size = crop_size;
    cfg.feedback_iters = feedback_iters;
    cfg.weights = {lambda_m, lambda_s, lambda_u, lambda_d};
    cfg.validate();
    return cfg;
}

TrainingData make_data(const std::vector<Array>& paired_fog, const std::vector<Array>& paired_clear,
                       const std::vector<Array>& real_fog, const std::optional<std::vector<Array>>& references) {
    TrainingData d{to_images(paired_fog), to_images(paired_clear), to_images(real_fog), {}};
    d.references = references ? to_images(*references) : d.paired_clear;
    d.validate();
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    const TrainConfig kDefaults;
    m.doc() = "Fog synthesis, grayscale-guided defogging and evaluation";

    py::register_exception<CheckpointError>(m, "CheckpointError", PyExc_ValueError);
    py::register_exception<ImageFormatError>(m, "ImageFormatError", PyExc_ValueError);

    m.def("transmission", [](const Array& beta, const Array& depth) {
        return to_array(transmission_from_depth(make_field(beta, depth, {1.0})));
    }, py::arg("beta"), py::arg("depth"));
    m.def("render_fog", [](const Array& clear, const Array& beta, const Array& depth, std::vector<double> airlight) {
        return to_array(render_fog(to_image(clear), make_field(beta, depth, std::move(airlight))));
    }, py::arg("clear"), py::arg("beta"), py::arg("depth"), py::arg("airlight"));
    m.def("invert_fog", [](const Array& foggy, const Array& beta, const Array& depth, std::vector<double> airlight) {
        return to_array(invert_fog(to_image(foggy), make_field(beta, depth, std::move(airlight))));
    }, py::arg("foggy"), py::arg("beta"), py::arg("depth"), py::arg("airlight"));
    m.def("feature_multiplier", [](const Array& foggy, const Array& beta, const Array& depth, std::vector<double> airlight) {
        MultiplierMap mm = feature_multiplier(to_image(foggy), make_field(beta, depth, std::move(airlight)));
        return py::make_tuple(to_array(mm.values), mm.floored);
    }, py::arg("foggy"), py::arg("beta"), py::arg("depth"), py::arg("airlight"),
       "Returns (M, number of floored intensities).");
    m.def("to_grayscale", [](const Array& rgb) { return to_array(to_grayscale(to_image(rgb))); }, py::arg("rgb"));

    m.def("psnr", [](const Array& a, const Array& b) { return psnr(to_image(a), to_image(b)); }, py::arg("a"), py::arg("b"));
    m.def("ssim", [](const Array& a, const Array& b) { return ssim(to_image(a), to_image(b)); }, py::arg("a"), py::arg("b"));

    m.def("synthesize", [](std::uint64_t seed, std::size_t size, const std::string& process, double beta_lo, double beta_hi,
                           bool uniform) {
        if (process != "paired" && process != "held-out") throw std::invalid_argument("process must be 'paired' or 'held-out'");
        FogProcess p = process == "paired" ? paired_process(size, beta_lo, beta_hi) : held_out_process(size, beta_lo, beta_hi);
        p.beta.uniform = uniform;
        FogSample s = synthesize(seed, p);
        py::dict out;
        out["clear"] = to_array(s.clear);
        out["fog"] = to_array(s.fog);
        out["depth"] = to_array(s.depth);
        out["beta"] = to_array(s.field.beta);
        out["airlight"] = s.field.airlight;
        return out;
    }, py::arg("seed"), py::arg("size") = 64, py::arg("process") = "paired", py::arg("beta_lo") = 0.2,
       py::arg("beta_hi") = 1.2, py::arg("uniform") = false);

    m.def("structure_keys", [](const Array& image, std::size_t patch_size, std::size_t key_dim, std::uint64_t seed) {
        StructureEncoderConfig cfg;
        cfg.patch_size = patch_size;
        cfg.key_dim = key_dim;
        cfg.seed = seed;
        KeyMatrix k = StructureEncoder(cfg).extract_keys(to_image(image));
        Array out({static_cast<py::ssize_t>(k.rows()), static_cast<py::ssize_t>(key_dim)});
        std::copy(k.keys.data().begin(), k.keys.data().end(), out.mutable_data());
        return py::make_tuple(out, py::make_tuple(k.grid_h, k.grid_w));
    }, py::arg("image"), py::arg("patch_size") = 8, py::arg("key_dim") = 64, py::arg("seed") = StructureEncoderConfig{}.seed,
       "Returns (keys n x d, (grid_h, grid_w)).");
    m.def("self_similarity", [](const Array& keys) {
        if (keys.ndim() != 2) throw std::invalid_argument("keys must be n x d");
        Tensor t({static_cast<std::size_t>(keys.shape(0)), static_cast<std::size_t>(keys.shape(1))},
                 std::vector<double>(keys.data(), keys.data() + keys.size()));
        const Tensor s = self_similarity(t).matrix;
        Array out({keys.shape(0), keys.shape(0)});
        std::copy(s.data().begin(), s.data().end(), out.mutable_data());
        return out;
    }, py::arg("keys"));
    m.def("structure_loss", [](const Array& a, const Array& b) {
        return structure_loss(to_tensor(to_image(a)), to_tensor(to_image(b)), StructureEncoder()).item();
    }, py::arg("rgb"), py::arg("gray"));
    m.def("pca_keys_rgb", [](const Array& image) {
        return to_array(pca_keys_rgb(StructureEncoder().extract_keys(to_image(image))));
    }, py::arg("image"), "PCA visualization of the structure keys of an image over its patch grid.");
    m.def("uncertainty_loss", [](const Array& pred, const Array& target, const Array& theta) {
        Image th = to_image(theta);
        return uncertainty_loss(to_tensor(to_image(pred)), to_tensor(to_image(target)), to_tensor(th)).item();
    }, py::arg("prediction"), py::arg("target"), py::arg("theta"));

    m.def("load_image", [](const std::filesystem::path& p) { return to_array(load_image(p)); }, py::arg("path"));
    m.def("save_image", [](const std::filesystem::path& p, const Array& img) { save_image(p, to_image(img)); },
          py::arg("path"), py::arg("image"));

    m.def("train_grayscale", [](const std::vector<Array>& paired_fog, const std::vector<Array>& paired_clear,
                                const std::vector<Array>& real_fog, const std::optional<std::vector<Array>>& references,
                                std::uint64_t seed, long steps, std::size_t batch_size, std::size_t real_batch_size,
                                std::size_t crop_size) {
        const TrainingData d = make_data(paired_fog, paired_clear, real_fog, references);
        const TrainConfig cfg = make_config(seed, steps, batch_size, real_batch_size, crop_size, 0, 1.0, 0.1, 1.0, 0.005);
        std::vector<std::string> log;
        Checkpoint c;
        {
            py::gil_scoped_release release;
            c = train_grayscale(d, cfg, [&](const StepRecord& r) { log.push_back(format_record(r)); });
        }
        return py::make_tuple(checkpoint_bytes(c), log);
    }, py::arg("paired_fog"), py::arg("paired_clear"), py::arg("real_fog"), py::arg("references") = py::none(),
       py::arg("seed") = 1, py::arg("steps") = 1000, py::arg("batch_size") = kDefaults.batch_size,
       py::arg("real_batch_size") = kDefaults.real_batch_size, py::arg("crop_size") = kDefaults.crop_size,
       "Returns (checkpoint bytes, per-step telemetry lines).");
    m.def("train_rgb", [](const py::bytes& gray, const std::vector<Array>& paired_fog, const std::vector<Array>& paired_clear,
                          const std::vector<Array>& real_fog, const std::optional<std::vector<Array>>& references,
                          std::uint64_t seed, long steps, std::size_t batch_size, std::size_t real_batch_size,
                          std::size_t crop_size, int feedback_iters, double lambda_m, double lambda_s, double lambda_u, double lambda_d) {
        const TrainingData d = make_data(paired_fog, paired_clear, real_fog, references);
        const TrainConfig cfg = make_config(seed, steps, batch_size, real_batch_size, crop_size, feedback_iters, lambda_m, lambda_s,
                                            lambda_u, lambda_d);
        const Checkpoint g = checkpoint_from(gray);
        std::vector<std::string> log;
        Checkpoint c;
        {
            py::gil_scoped_release release;
            c = train_rgb(g, d, cfg, [&](const StepRecord& r) { log.push_back(format_record(r)); });
        }
        return py::make_tuple(checkpoint_bytes(c), log);
    }, py::arg("gray_checkpoint"), py::arg("paired_fog"), py::arg("paired_clear"), py::arg("real_fog"),
       py::arg("references") = py::none(), py::arg("seed") = 1, py::arg("steps") = 2000, py::arg("batch_size") = kDefaults.batch_size,
       py::arg("real_batch_size") = kDefaults.real_batch_size, py::arg("crop_size") = kDefaults.crop_size, py::arg("feedback_iters") = 2, py::arg("lambda_m") = 1.0,
       py::arg("lambda_s") = 0.1, py::arg("lambda_u") = 1.0, py::arg("lambda_d") = 0.005);
    m.def("defog", [](const py::bytes& ckpt, const Array& image, int iterations) {
        const RgbModel model = RgbModel::from_checkpoint(checkpoint_from(ckpt));
        DefogResult r = defog(model, to_image(image), iterations);
        py::list theta;
        for (const auto& t : r.uncertainty) theta.append(to_array(t));
        return py::make_tuple(to_array(r.output), theta);
    }, py::arg("checkpoint"), py::arg("image"), py::arg("iterations") = 2,
       "Returns (defogged image, [theta_0 .. theta_K]).");
    m.def("load_checkpoint", [](const std::filesystem::path& p) { return checkpoint_bytes(Checkpoint::load(p)); },
          py::arg("path"));
    m.def("save_checkpoint", [](const std::filesystem::path& p, const py::bytes& b) { checkpoint_from(b).save(p); },
          py::arg("path"), py::arg("checkpoint"));
    m.def("checkpoint_config", [](const py::bytes& b) { return checkpoint_from(b).config; }, py::arg("checkpoint"));
    m.def("parse_record", [](const std::string& line) {
        const StepRecord r = parse_record(line);
        py::dict d;
        d["stage"] = r.stage;
        d["step"] = r.step;
        for (auto [k, v] : std::initializer_list<std::pair<const char*, double>>{
                 {"multiplier", r.multiplier}, {"structure", r.structure}, {"uncertainty", r.uncertainty}, {"mse", r.mse},
                 {"adversarial", r.adversarial}, {"total", r.total}, {"discriminator", r.discriminator}})
            d[k] = v;
        return d;
    }, py::arg("line"));
}
