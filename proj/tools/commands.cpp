#include "commands.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "faor/checkpoint.hpp"
#include "faor/erp_geometry.hpp"
#include "faor/errors.hpp"
#include "faor/image_io.hpp"
#include "faor/kv_config.hpp"
#include "faor/manifest.hpp"
#include "faor/metrics.hpp"
#include "faor/model.hpp"
#include "faor/resampling.hpp"
#include "faor/synthetic.hpp"
#include "faor/training.hpp"

namespace faor::cli {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::uint64_t resolve_seed(std::uint64_t fallback) {
  const char* env = std::getenv("FAOR_SEED");
  if (!env || !*env) return fallback;
  std::uint64_t v = 0;
  const char* end = env + std::char_traits<char>::length(env);
  const auto [ptr, ec] = std::from_chars(env, end, v);
  if (ec != std::errc() || ptr != end) {
    throw InputError(std::string("FAOR_SEED is not an unsigned integer: '") + env + "'");
  }
  return v;
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

fs::path instance_map_path(const fs::path& image) {
  return image.parent_path() / (image.stem().string() + ".ids.png");
}

bool is_instance_map(const fs::path& p) {
  return p.stem().extension() == ".ids";
}

std::vector<fs::path> list_images(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw InputError("not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const fs::path& p = entry.path();
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    if ((ext == ".png" || ext == ".ppm") && !is_instance_map(p)) out.push_back(p);
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw InputError("no .png or .ppm images in " + dir.string());
  return out;
}

std::vector<std::uint16_t> optional_instances(const fs::path& path, int height, int width) {
  if (path.empty() || !fs::exists(path)) return {};
  const InstanceMap map = load_instance_map(path);
  if (map.height != height || map.width != width) {
    throw InputError("instance map " + path.string() + " does not match its image size");
  }
  return map.ids;
}

// Loads a checkpoint, optionally replacing the latent resampler.
FaorModel<float> load_model_with(const fs::path& path, std::optional<ResamplerKind> resampler) {
  if (!resampler) return load_model<float>(path);
  const Checkpoint ckpt = read_checkpoint(path);
  ModelConfig config = ModelConfig::from_config(KeyValueConfig::parse(ckpt.config_text));
  config.resampler = *resampler;
  FaorModel<float> model(config, 0);
  load_parameters(ckpt, model.params());
  return model;
}

// -- gen-priors ---------------------------------------------------------------

struct GenPriorsArgs {
  std::string input;
  std::string out_dir;
  std::string segmentation;
  std::string manifest;
};

int gen_priors(const GenPriorsArgs& a) {
  const auto t0 = Clock::now();
  const RawImage raw = read_raw_image(a.input);
  const ErpGrid grid(raw.height, raw.width);
  fs::create_directories(a.out_dir);
  const fs::path dir(a.out_dir);

  const DistortionMap md = distortion_map(grid);
  RawImage png{grid.height(), grid.width(), 1, 8, {}};
  png.samples.reserve(md.values.size());
  for (double v : md.values) png.samples.push_back(static_cast<std::uint16_t>(std::floor(v + 0.5)));
  write_raw_image(dir / "md.png", png);
  write_float32(dir / "md.f32", md.values);

  InstanceMap ms{grid.height(), grid.width(), {}};
  if (a.segmentation.empty()) {
    std::cerr << "warning: no --segmentation given; writing an all-background instance map\n";
    ms.ids.assign(grid.pixel_count(), 0);
  } else {
    ms = load_instance_map(a.segmentation);
    if (ms.height != grid.height() || ms.width != grid.width()) {
      throw InputError("segmentation is " + std::to_string(ms.height) + "x" +
                       std::to_string(ms.width) + " but the image is " +
                       std::to_string(grid.height()) + "x" + std::to_string(grid.width()));
    }
  }
  save_instance_map(ms, dir / "ms.png");

  RunManifest m;
  m.command = "gen-priors";
  m.inputs = {a.input};
  if (!a.segmentation.empty()) m.inputs.push_back(a.segmentation);
  m.outputs = {(dir / "md.png").string(), (dir / "md.f32").string(), (dir / "ms.png").string()};
  m.details["height"] = std::to_string(grid.height());
  m.details["width"] = std::to_string(grid.width());
  m.details["segmentation"] = a.segmentation.empty() ? "absent" : "supplied";
  m.timings.total_ms = ms_since(t0);
  m.write(a.manifest.empty() ? dir / "manifest.json" : fs::path(a.manifest));
  std::cout << "wrote priors for " << grid.height() << "x" << grid.width() << " to " << a.out_dir
            << "\n";
  return kExitOk;
}

// -- upscale --------------------------------------------------------------------

struct UpscaleArgs {
  std::string input;
  double scale = 2.0;
  std::string checkpoint;
  std::string resampler;
  std::string segmentation;
  std::string out;
  int bit_depth = 8;
  std::string manifest;
};

int upscale(const UpscaleArgs& a) {
  const auto t0 = Clock::now();
  const ErpImage x = load_image(a.input);
  const ErpGrid grid = x.erp();
  std::optional<ResamplerKind> kind;
  if (!a.resampler.empty()) kind = parse_resampler(a.resampler);

  RunManifest m;
  m.command = "upscale";
  m.inputs = {a.input};
  m.outputs = {a.out};
  InferenceStats stats;
  ErpImage y;
  if (!a.checkpoint.empty()) {
    m.config_path = a.checkpoint;
    m.inputs.push_back(a.checkpoint);
    const FaorModel<float> model = load_model_with(a.checkpoint, kind);
    std::vector<std::uint16_t> ids;
    if (!a.segmentation.empty()) {
      ids = optional_instances(a.segmentation, grid.height(), grid.width());
      m.inputs.push_back(a.segmentation);
    }
    y = super_resolve(model, x, a.scale, PriorMaps::for_grid(grid, ids), &stats);
    m.details["mode"] = "model";
    m.details["resampler"] = std::string(resampler_name(model.config().resampler));
  } else {
    const ResamplerKind k = kind.value_or(ResamplerKind::kBicubic);
    const auto tr = Clock::now();
    y = resample(k, x, grid, hr_coordinate_grid(grid, a.scale));
    stats.resample_ms = ms_since(tr);
    m.details["mode"] = "baseline";
    m.details["resampler"] = std::string(resampler_name(k));
  }
  y.check_finite("upscaled image");
  save_image(y, a.out, a.bit_depth);

  m.timings = {stats.encode_ms, stats.resample_ms, stats.sgif_ms, ms_since(t0)};
  m.details["scale"] = format_double(a.scale);
  m.details["output_height"] = std::to_string(y.height());
  m.details["output_width"] = std::to_string(y.width());
  m.details["hr_pixels"] = std::to_string(y.pixel_count());
  m.details["sgif_evaluations"] = std::to_string(stats.sgif_evaluations);
  m.write(a.manifest.empty() ? fs::path(a.out + ".manifest.json") : fs::path(a.manifest));
  std::cout << a.input << " (" << x.height() << "x" << x.width() << ") -> " << a.out << " ("
            << y.height() << "x" << y.width() << ")\n";
  return kExitOk;
}

// -- train ----------------------------------------------------------------------

struct TrainArgs {
  std::string config;
  std::string data_dir;
  std::string out;
  std::string manifest;
  bool quiet = false;
};

std::vector<TrainImage> load_dataset(const fs::path& dir) {
  std::vector<TrainImage> set;
  for (const fs::path& p : list_images(dir)) {
    TrainImage img{load_image(p), {}};
    img.instances = optional_instances(instance_map_path(p), img.image.height(), img.image.width());
    set.push_back(std::move(img));
  }
  return set;
}

int train(const TrainArgs& a) {
  const auto t0 = Clock::now();
  const KeyValueConfig kv = KeyValueConfig::load(a.config);
  const ModelConfig model_config = ModelConfig::from_config(kv);
  TrainConfig config = TrainConfig::from_config(kv);
  if (const auto unused = kv.unused_keys(); !unused.empty()) {
    throw InputError("unknown config key '" + unused.front() + "' in " + a.config);
  }
  config.seed = resolve_seed(config.seed);

  const std::vector<TrainImage> data = load_dataset(a.data_dir);
  const fs::path out(a.out);
  fs::create_directories(out);
  const FaorModel<float> model(model_config, config.seed);

  TrainCallbacks callbacks;
  if (!a.quiet) {
    callbacks.on_log = [](const LossRecord& r) {
      std::cout << "iter " << r.iteration << "  lr " << r.lr << "  loss " << r.loss << "\n";
    };
  }
  std::vector<std::string> outputs;
  callbacks.on_checkpoint = [&](long long iter) {
    const fs::path p = out / ("ckpt_" + std::to_string(iter) + ".ckpt");
    save_model(model, p);
    outputs.push_back(p.string());
  };
  const TrainResult result = train_loop(data, model, config, callbacks);

  save_model(model, out / "model.ckpt");
  write_loss_csv(out / "loss.csv", result.history);
  {
    std::ofstream f(out / "train.cfg");
    f << model_config.to_text() << config.to_text();
  }
  outputs.insert(outputs.begin(),
                 {(out / "model.ckpt").string(), (out / "loss.csv").string(),
                  (out / "train.cfg").string()});

  RunManifest m;
  m.command = "train";
  m.config_path = a.config;
  m.inputs = {a.data_dir};
  m.outputs = outputs;
  m.seed = config.seed;
  m.timings.total_ms = ms_since(t0);
  m.details["images"] = std::to_string(data.size());
  m.details["iterations"] = std::to_string(result.history.size());
  if (!result.history.empty()) {
    m.details["first_loss"] = format_double(result.history.front().loss);
    m.details["final_loss"] = format_double(result.history.back().loss);
  }
  m.write(a.manifest.empty() ? out / "manifest.json" : fs::path(a.manifest));
  return kExitOk;
}

// -- eval -----------------------------------------------------------------------

struct EvalArgs {
  std::string pairs;
  std::string hr_dir;
  double scale = 0.0;
  std::string checkpoint;
  std::string resampler;
  std::string channel = "luma";
  std::string csv;
  std::string manifest;
};

int eval(const EvalArgs& a) {
  const auto t0 = Clock::now();
  if (a.pairs.empty() == a.hr_dir.empty()) {
    throw InputError("eval needs exactly one of --pairs or --hr-dir");
  }
  const MetricChannel channel = parse_metric_channel(a.channel);
  RunManifest m;
  m.command = "eval";
  std::vector<MetricRow> rows;
  InferenceStats stats;

  if (!a.pairs.empty()) {
    std::ifstream in(a.pairs);
    if (!in) throw InputError("cannot open " + a.pairs);
    m.inputs.push_back(a.pairs);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      const auto comma = line.find(',');
      if (comma == std::string::npos) throw InputError("pairs line needs 'sr,hr': " + line);
      const fs::path base = fs::path(a.pairs).parent_path();
      fs::path sr = line.substr(0, comma);
      fs::path hr = line.substr(comma + 1);
      if (sr.is_relative()) sr = base / sr;
      if (hr.is_relative()) hr = base / hr;
      rows.push_back({sr.filename().string(), evaluate(load_image(sr), load_image(hr), channel)});
    }
    if (rows.empty()) throw InputError("no pairs listed in " + a.pairs);
  } else {
    if (!(a.scale > 0.0)) throw InputError("--hr-dir needs a positive --scale");
    m.inputs.push_back(a.hr_dir);
    std::optional<ResamplerKind> kind;
    if (!a.resampler.empty()) kind = parse_resampler(a.resampler);
    std::optional<FaorModel<float>> model;
    if (!a.checkpoint.empty()) {
      model.emplace(load_model_with(a.checkpoint, kind));
      m.config_path = a.checkpoint;
    }
    for (const fs::path& p : list_images(a.hr_dir)) {
      const ErpImage hr = load_image(p);
      const ErpImage lr = degrade(hr, a.scale);
      ErpImage sr;
      if (model) {
        std::vector<std::uint16_t> ids =
            optional_instances(instance_map_path(p), hr.height(), hr.width());
        if (!ids.empty()) {
          ids = resize_instances(ids, hr.height(), hr.width(), lr.height(), lr.width());
        }
        sr = super_resolve(*model, lr, a.scale, PriorMaps::for_grid(lr.erp(), ids), &stats);
      } else {
        sr = resample(kind.value_or(ResamplerKind::kBicubic), lr, lr.erp(),
                      hr_coordinate_grid(lr.erp(), a.scale));
      }
      if (sr.height() != hr.height() || sr.width() != hr.width()) {
        throw InputError("scale " + format_double(a.scale) + " does not map " + p.string() +
                         " back onto its own size");
      }
      rows.push_back({p.filename().string(), evaluate(sr, hr, channel)});
    }
    m.details["scale"] = format_double(a.scale);
    m.details["mode"] = model ? "model" : "baseline";
  }

  std::cout << format_metric_table(rows);
  if (!a.csv.empty()) {
    std::ofstream out(a.csv);
    if (!out) throw InputError("cannot write " + a.csv);
    write_metric_csv(out, rows);
    m.outputs.push_back(a.csv);
  }
  const MetricReport mean = mean_report(rows);
  m.details["channel"] = a.channel;
  m.details["images"] = std::to_string(rows.size());
  m.details["mean_psnr"] = format_double(mean.psnr);
  m.details["mean_ws_psnr"] = format_double(mean.ws_psnr);
  m.details["mean_ws_ssim"] = format_double(mean.ws_ssim);
  m.timings = {stats.encode_ms, stats.resample_ms, stats.sgif_ms, ms_since(t0)};
  fs::path manifest = a.manifest;
  if (manifest.empty()) manifest = a.csv.empty() ? "eval.manifest.json" : a.csv + ".manifest.json";
  m.write(manifest);
  return kExitOk;
}

// -- bench ----------------------------------------------------------------------

struct BenchArgs {
  std::string input;
  double scale = 2.0;
  int repeat = 5;
  std::string checkpoint;
  std::string manifest;
};

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
  return s;
}

int bench(const BenchArgs& a) {
  if (a.repeat < 1) throw InputError("--repeat must be at least 1");
  const auto t0 = Clock::now();
  const ErpImage x = load_image(a.input);
  const std::uint64_t seed = resolve_seed(0);
  const FaorModel<float> model =
      a.checkpoint.empty() ? FaorModel<float>(ModelConfig{}, seed) : load_model<float>(a.checkpoint);
  const PriorMaps priors = PriorMaps::for_grid(x.erp());

  std::vector<double> enc, res, sg, tot;
  std::uint64_t pixels = 0;
  for (int i = 0; i < a.repeat; ++i) {
    InferenceStats stats;
    const auto ts = Clock::now();
    const ErpImage y = super_resolve(model, x, a.scale, priors, &stats);
    tot.push_back(ms_since(ts));
    enc.push_back(stats.encode_ms);
    res.push_back(stats.resample_ms);
    sg.push_back(stats.sgif_ms);
    pixels = y.pixel_count();
  }
  const double mp = static_cast<double>(pixels) / 1e6;
  const double total_median = median(tot);
  std::printf("stage      %s  median_ms\n", "samples");
  std::printf("encode     %zu  %.3f\n", enc.size(), median(enc));
  std::printf("resample   %zu  %.3f\n", res.size(), median(res));
  std::printf("sgif       %zu  %.3f\n", sg.size(), median(sg));
  std::printf("total      %zu  %.3f\n", tot.size(), total_median);
  std::printf("throughput %.4f HR megapixels/s (%.4f MP output)\n", mp / (total_median / 1000.0),
              mp);

  RunManifest m;
  m.command = "bench";
  m.config_path = a.checkpoint;
  m.inputs = {a.input};
  m.seed = seed;
  m.timings = {median(enc), median(res), median(sg), ms_since(t0)};
  m.details["repeat"] = std::to_string(a.repeat);
  m.details["scale"] = format_double(a.scale);
  m.details["encode_ms_samples"] = join(enc);
  m.details["resample_ms_samples"] = join(res);
  m.details["sgif_ms_samples"] = join(sg);
  m.details["total_ms_samples"] = join(tot);
  m.details["total_ms_median"] = format_double(total_median);
  m.details["hr_megapixels"] = format_double(mp);
  m.details["megapixels_per_second"] = format_double(mp / (total_median / 1000.0));
  m.write(a.manifest.empty() ? fs::path("bench.manifest.json") : fs::path(a.manifest));
  return kExitOk;
}

// -- synth ----------------------------------------------------------------------

struct SynthArgs {
  std::string out_dir;
  int count = 20;
  std::uint64_t seed = 0;
  int height = 256;
  int width = 512;
};

int synth(const SynthArgs& a) {
  const auto t0 = Clock::now();
  SyntheticOptions opts;
  opts.height = a.height;
  opts.width = a.width;
  const std::uint64_t seed = resolve_seed(a.seed);
  const fs::path dir(a.out_dir);
  fs::create_directories(dir);
  const auto set = make_synthetic_set(a.count, seed, opts);
  RunManifest m;
  m.command = "synth";
  m.seed = seed;
  for (std::size_t i = 0; i < set.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "odi_%03zu", i);
    const fs::path img = dir / (std::string(name) + ".png");
    save_image(set[i].image, img, 8);
    save_instance_map({a.height, a.width, set[i].instances}, instance_map_path(img));
    m.outputs.push_back(img.string());
  }
  m.timings.total_ms = ms_since(t0);
  m.write(dir / "manifest.json");
  std::cout << "wrote " << set.size() << " images to " << a.out_dir << "\n";
  return kExitOk;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Spherical (ERP) arbitrary-scale super-resolution toolkit"};
  app.set_version_flag("--version", version_string());
  app.require_subcommand(1);

  GenPriorsArgs gp;
  auto* c_gp = app.add_subcommand("gen-priors", "Write the stretching-ratio and instance priors");
  c_gp->add_option("--input", gp.input, "ERP image")->required();
  c_gp->add_option("--out-dir", gp.out_dir, "Output directory")->required();
  c_gp->add_option("--segmentation", gp.segmentation, "Instance-id PNG (0 = background)");
  c_gp->add_option("--manifest", gp.manifest, "Manifest path");

  UpscaleArgs up;
  auto* c_up = app.add_subcommand("upscale", "Upscale an ERP image by an arbitrary factor");
  c_up->add_option("--input", up.input, "ERP image")->required();
  c_up->add_option("--scale", up.scale, "Scale factor")->required()->check(CLI::PositiveNumber);
  c_up->add_option("--checkpoint", up.checkpoint, "Model checkpoint; omit for a pure resampler");
  c_up->add_option("--resampler", up.resampler, "geodesic | bilinear | bicubic");
  c_up->add_option("--segmentation", up.segmentation, "Instance-id PNG for the input");
  c_up->add_option("--out", up.out, "Output image (.png or .ppm)")->required();
  c_up->add_option("--bit-depth", up.bit_depth, "8 or 16")->check(CLI::IsMember({8, 16}));
  c_up->add_option("--manifest", up.manifest, "Manifest path");

  TrainArgs tr;
  auto* c_tr = app.add_subcommand("train", "Train a model on a directory of ERP images");
  c_tr->add_option("--config", tr.config, "Key-value config (model and training keys)")
      ->required();
  c_tr->add_option("--data-dir", tr.data_dir, "Training images; <name>.ids.png instance maps")
      ->required();
  c_tr->add_option("--out", tr.out, "Output directory")->required();
  c_tr->add_option("--manifest", tr.manifest, "Manifest path");
  c_tr->add_flag("--quiet", tr.quiet, "No per-iteration log");

  EvalArgs ev;
  auto* c_ev = app.add_subcommand("eval", "PSNR / WS-PSNR / WS-SSIM over a set of images");
  c_ev->add_option("--pairs", ev.pairs, "Text file of 'sr,hr' lines");
  c_ev->add_option("--hr-dir", ev.hr_dir, "Directory of HR images to degrade and restore");
  c_ev->add_option("--scale", ev.scale, "Scale factor for --hr-dir");
  c_ev->add_option("--checkpoint", ev.checkpoint, "Model checkpoint; omit for a pure resampler");
  c_ev->add_option("--resampler", ev.resampler, "geodesic | bilinear | bicubic");
  c_ev->add_option("--channel", ev.channel, "luma | rgb");
  c_ev->add_option("--csv", ev.csv, "CSV report path");
  c_ev->add_option("--manifest", ev.manifest, "Manifest path");

  BenchArgs bn;
  auto* c_bn = app.add_subcommand("bench", "Time the inference stages");
  c_bn->add_option("--input", bn.input, "ERP image")->required();
  c_bn->add_option("--scale", bn.scale, "Scale factor")->check(CLI::PositiveNumber);
  c_bn->add_option("--repeat", bn.repeat, "Number of timed runs");
  c_bn->add_option("--checkpoint", bn.checkpoint, "Model checkpoint; default model otherwise");
  c_bn->add_option("--manifest", bn.manifest, "Manifest path");

  SynthArgs sy;
  auto* c_sy = app.add_subcommand("synth", "Write procedural ERP images with instance maps");
  c_sy->add_option("--out-dir", sy.out_dir, "Output directory")->required();
  c_sy->add_option("--count", sy.count, "Number of images");
  c_sy->add_option("--seed", sy.seed, "Seed");
  c_sy->add_option("--height", sy.height, "Rows");
  c_sy->add_option("--width", sy.width, "Columns");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (c_gp->parsed()) return gen_priors(gp);
    if (c_up->parsed()) return upscale(up);
    if (c_tr->parsed()) return train(tr);
    if (c_ev->parsed()) return eval(ev);
    if (c_bn->parsed()) return bench(bn);
    if (c_sy->parsed()) return synth(sy);
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}

int run(const std::vector<std::string>& args) {
  std::vector<std::string> storage = args;
  storage.insert(storage.begin(), "faor");
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace faor::cli
