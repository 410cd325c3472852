#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "commands.hpp"
#include "faor/erp_geometry.hpp"
#include "faor/image_io.hpp"
#include "faor/manifest.hpp"
#include "faor/resampling.hpp"

namespace faor {
namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("faor_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  static std::string read_text(const std::string& p) {
    std::ifstream in(p);
    return {std::istreambuf_iterator<char>(in), {}};
  }
  static RunManifest manifest(const std::string& p) { return RunManifest::from_json(read_text(p)); }

  // Small synthetic set written through the CLI.
  void synth(int count, int height, int width) {
    ASSERT_EQ(cli::run({"synth", "--out-dir", path("data"), "--count", std::to_string(count),
                        "--seed", "5", "--height", std::to_string(height), "--width",
                        std::to_string(width)}),
              cli::kExitOk);
  }

  fs::path dir_;
};

TEST_F(CliTest, UsageErrorsExitWithTwo) {
  EXPECT_EQ(cli::run(std::vector<std::string>{}), cli::kExitInput);
  EXPECT_EQ(cli::run({"frobnicate"}), cli::kExitInput);
  EXPECT_EQ(cli::run({"upscale", "--input", "x.png"}), cli::kExitInput);
  EXPECT_EQ(cli::run({"upscale", "--input", path("missing.png"), "--scale", "2", "--out",
                      path("o.png")}),
            cli::kExitInput);
  EXPECT_EQ(cli::run({"upscale", "--input", "x.png", "--scale", "-1", "--out", "o.png"}),
            cli::kExitInput);
  EXPECT_EQ(cli::run({"--version"}), cli::kExitOk);
}

TEST_F(CliTest, SynthWritesImagesAndInstanceMaps) {
  synth(3, 16, 32);
  for (int i = 0; i < 3; ++i) {
    const std::string stem = path("data/odi_00" + std::to_string(i));
    const ErpImage img = load_image(stem + ".png");
    EXPECT_EQ(img.height(), 16);
    EXPECT_EQ(img.width(), 32);
    EXPECT_EQ(load_instance_map(stem + ".ids.png").ids.size(), 16u * 32u);
  }
  const RunManifest m = manifest(path("data/manifest.json"));
  EXPECT_EQ(m.command, "synth");
  EXPECT_EQ(m.seed, 5u);
  EXPECT_EQ(m.outputs.size(), 3u);
}

TEST_F(CliTest, GenPriorsWritesDistortionMap) {
  synth(1, 8, 16);
  ASSERT_EQ(cli::run({"gen-priors", "--input", path("data/odi_000.png"), "--out-dir",
                      path("priors")}),
            cli::kExitOk);
  const std::vector<float> md = read_float32(path("priors/md.f32"));
  const ErpGrid grid(8, 16);
  const DistortionMap expected = distortion_map(grid);
  ASSERT_EQ(md.size(), expected.values.size());
  for (std::size_t i = 0; i < md.size(); ++i) {
    EXPECT_EQ(md[i], static_cast<float>(expected.values[i]));
  }
  const RawImage png = read_raw_image(path("priors/md.png"));
  EXPECT_EQ(png.channels, 1);
  EXPECT_EQ(png.samples[0], static_cast<std::uint16_t>(std::floor(expected.values[0] + 0.5)));
  const InstanceMap ms = load_instance_map(path("priors/ms.png"));
  EXPECT_EQ(ms.ids, std::vector<std::uint16_t>(8 * 16, 0));
  EXPECT_EQ(manifest(path("priors/manifest.json")).details.at("segmentation"), "absent");

  EXPECT_EQ(cli::run({"gen-priors", "--input", path("data/odi_000.png"), "--out-dir",
                      path("p2"), "--segmentation", path("data/odi_000.ids.png")}),
            cli::kExitOk);
  EXPECT_EQ(load_instance_map(path("p2/ms.png")).ids,
            load_instance_map(path("data/odi_000.ids.png")).ids);

  save_instance_map({4, 4, std::vector<std::uint16_t>(16, 1)}, path("small.ids.png"));
  EXPECT_EQ(cli::run({"gen-priors", "--input", path("data/odi_000.png"), "--out-dir",
                      path("p3"), "--segmentation", path("small.ids.png")}),
            cli::kExitInput);
}

TEST_F(CliTest, BaselineUpscaleMatchesLibrary) {
  synth(1, 8, 16);
  const std::string in = path("data/odi_000.png");
  ASSERT_EQ(cli::run({"upscale", "--input", in, "--scale", "2.5", "--resampler", "bilinear",
                      "--out", path("up.png"), "--bit-depth", "16"}),
            cli::kExitOk);
  const ErpImage x = load_image(in);
  const ErpImage expected =
      resample(ResamplerKind::kBilinear, x, x.erp(), hr_coordinate_grid(x.erp(), 2.5));
  const RawImage got = read_raw_image(path("up.png"));
  EXPECT_EQ(got.height, 20);
  EXPECT_EQ(got.width, 40);
  EXPECT_EQ(got.bit_depth, 16);
  for (std::size_t i = 0; i < got.samples.size(); ++i) {
    EXPECT_EQ(got.samples[i], quantize(expected.values()[i], 16));
  }
  const RunManifest m = manifest(path("up.png.manifest.json"));
  EXPECT_EQ(m.details.at("mode"), "baseline");
  EXPECT_EQ(m.details.at("resampler"), "bilinear");
  EXPECT_EQ(m.details.at("output_height"), "20");
  EXPECT_EQ(cli::run({"upscale", "--input", in, "--scale", "2", "--resampler", "nearest",
                      "--out", path("bad.png")}),
            cli::kExitInput);
}

TEST_F(CliTest, TrainUpscaleEvalBench) {
  synth(2, 32, 64);
  {
    std::ofstream cfg(path("tiny.cfg"));
    cfg << "L = 1\nD = 4\nmlp_hidden = 8\nbase_patch = 8\npixels_per_patch = 32\n"
           "max_iters = 6\nlog_every = 2\ncheckpoint_every = 3\nlr0 = 1e-3\n"
           "lr_milestones = 4\nseed = 9\n";
  }
  ASSERT_EQ(cli::run({"train", "--config", path("tiny.cfg"), "--data-dir", path("data"), "--out",
                      path("run"), "--quiet"}),
            cli::kExitOk);
  EXPECT_TRUE(fs::exists(path("run/ckpt_3.ckpt")));
  EXPECT_TRUE(fs::exists(path("run/ckpt_6.ckpt")));
  const std::string csv = read_text(path("run/loss.csv"));
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "iteration,lr,loss,r");
  const RunManifest tm = manifest(path("run/manifest.json"));
  EXPECT_EQ(tm.seed, 9u);
  EXPECT_EQ(tm.details.at("iterations"), "6");

  const std::string ckpt = path("run/model.ckpt");
  ASSERT_EQ(cli::run({"upscale", "--input", path("data/odi_000.png"), "--scale", "3.7",
                      "--checkpoint", ckpt, "--out", path("sr.png")}),
            cli::kExitOk);
  const RunManifest um = manifest(path("sr.png.manifest.json"));
  EXPECT_EQ(um.details.at("mode"), "model");
  EXPECT_EQ(um.details.at("output_height"), "118");
  EXPECT_EQ(um.details.at("output_width"), "237");
  EXPECT_EQ(um.details.at("sgif_evaluations"), um.details.at("hr_pixels"));

  ASSERT_EQ(cli::run({"eval", "--hr-dir", path("data"), "--scale", "2", "--checkpoint", ckpt,
                      "--csv", path("eval.csv")}),
            cli::kExitOk);
  const std::string table = read_text(path("eval.csv"));
  EXPECT_NE(table.find("odi_000.png"), std::string::npos);
  EXPECT_NE(table.find("odi_001.png"), std::string::npos);
  EXPECT_EQ(manifest(path("eval.csv.manifest.json")).details.at("images"), "2");

  {
    std::ofstream pairs(path("pairs.txt"));
    pairs << "# sr,hr\ndata/odi_000.png,data/odi_000.png\n";
  }
  ASSERT_EQ(cli::run({"eval", "--pairs", path("pairs.txt"), "--manifest", path("pairs.json")}),
            cli::kExitOk);
  EXPECT_EQ(manifest(path("pairs.json")).details.at("mean_ws_psnr"), "99");
  EXPECT_EQ(cli::run({"eval", "--pairs", path("pairs.txt"), "--hr-dir", path("data")}),
            cli::kExitInput);
  EXPECT_EQ(cli::run({"eval", "--hr-dir", path("data"), "--scale", "3"}), cli::kExitInput);

  ASSERT_EQ(cli::run({"bench", "--input", path("data/odi_000.png"), "--scale", "2", "--repeat",
                      "3", "--checkpoint", ckpt, "--manifest", path("bench.json")}),
            cli::kExitOk);
  const RunManifest bm = manifest(path("bench.json"));
  EXPECT_EQ(bm.details.at("repeat"), "3");
  EXPECT_GT(bm.timings.total_ms, 0.0);
}

TEST_F(CliTest, UnknownConfigKeysAreRejected) {
  synth(1, 32, 64);
  {
    std::ofstream cfg(path("bad.cfg"));
    cfg << "L = 1\nD = 4\nmax_iter = 5\n";
  }
  EXPECT_EQ(cli::run({"train", "--config", path("bad.cfg"), "--data-dir", path("data"), "--out",
                      path("run")}),
            cli::kExitInput);
}

TEST_F(CliTest, SeedEnvironmentOverride) {
  synth(1, 32, 64);
  {
    std::ofstream cfg(path("tiny.cfg"));
    cfg << "L = 1\nD = 4\nmlp_hidden = 8\nbase_patch = 8\npixels_per_patch = 16\n"
           "max_iters = 2\nseed = 1\n";
  }
  ::setenv("FAOR_SEED", "77", 1);
  const int ok = cli::run({"train", "--config", path("tiny.cfg"), "--data-dir", path("data"),
                           "--out", path("run"), "--quiet"});
  ::setenv("FAOR_SEED", "seven", 1);
  const int bad = cli::run({"train", "--config", path("tiny.cfg"), "--data-dir", path("data"),
                            "--out", path("run2"), "--quiet"});
  ::unsetenv("FAOR_SEED");
  EXPECT_EQ(ok, cli::kExitOk);
  EXPECT_EQ(manifest(path("run/manifest.json")).seed, 77u);
  EXPECT_EQ(bad, cli::kExitInput);
}

TEST_F(CliTest, NonFiniteWeightsExitWithThree) {
  synth(1, 16, 32);
  {
    std::ofstream cfg(path("nan.cfg"));
    cfg << "L = 1\nD = 4\nmlp_hidden = 8\nbase_patch = 8\npixels_per_patch = 16\n"
           "max_iters = 3\nlr0 = 1e300\nr_max = 1.5\n";
  }
  EXPECT_EQ(cli::run({"train", "--config", path("nan.cfg"), "--data-dir", path("data"), "--out",
                      path("run"), "--quiet"}),
            cli::kExitNumeric);
}

}  // namespace
}  // namespace faor
