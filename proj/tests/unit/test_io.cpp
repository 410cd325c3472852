#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include "json.hpp"
#include <random>
#include <string>
#include <vector>

#include "faor/checkpoint.hpp"
#include "faor/errors.hpp"
#include "faor/image_io.hpp"
#include "faor/kv_config.hpp"
#include "faor/manifest.hpp"
#include "faor/model_config.hpp"

namespace faor {
namespace {

namespace fs = std::filesystem;

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("faor_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path path(const std::string& name) const { return dir_ / name; }

  static std::vector<char> bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
  }
  static void write_bytes(const fs::path& p, const std::vector<char>& b) {
    std::ofstream out(p, std::ios::binary);
    out.write(b.data(), static_cast<std::streamsize>(b.size()));
  }

  fs::path dir_;
};

RawImage random_raw(int h, int w, int channels, int depth, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> u(0, depth == 8 ? 255 : 65535);
  RawImage img{h, w, channels, depth, {}};
  img.samples.resize(static_cast<std::size_t>(h) * w * channels);
  for (auto& s : img.samples) s = static_cast<std::uint16_t>(u(rng));
  return img;
}

using ImageIo = TempDir;

TEST_F(ImageIo, RawRoundTripAllFormats) {
  for (const char* ext : {".png", ".ppm"}) {
    for (int ch : {1, 3}) {
      for (int depth : {8, 16}) {
        const RawImage img = random_raw(7, 13, ch, depth, ch * 100 + depth);
        const fs::path p = path(std::string("img") + std::to_string(ch) + "_" +
                                std::to_string(depth) + ext);
        write_raw_image(p, img);
        const RawImage back = read_raw_image(p);
        EXPECT_EQ(back.height, 7);
        EXPECT_EQ(back.width, 13);
        EXPECT_EQ(back.channels, ch);
        EXPECT_EQ(back.bit_depth, depth);
        EXPECT_EQ(back.samples, img.samples) << p;
      }
    }
  }
}

TEST_F(ImageIo, PpmHeaderIsStandard) {
  RawImage img{1, 2, 3, 8, {1, 2, 3, 4, 5, 6}};
  write_raw_image(path("a.ppm"), img);
  const auto b = bytes(path("a.ppm"));
  const std::string text(b.begin(), b.end());
  EXPECT_EQ(text.substr(0, 11), "P6\n2 1\n255\n");
  EXPECT_EQ(b.size(), 17u);

  RawImage gray{1, 1, 1, 16, {0x1234}};
  write_raw_image(path("g.pgm"), gray);
  const auto g = bytes(path("g.pgm"));
  ASSERT_EQ(g.size(), 15u);
  EXPECT_EQ(static_cast<unsigned char>(g[13]), 0x12);  // big-endian samples
  EXPECT_EQ(static_cast<unsigned char>(g[14]), 0x34);
}

TEST_F(ImageIo, PngSignature) {
  write_raw_image(path("a.png"), random_raw(3, 3, 3, 8, 1));
  const auto b = bytes(path("a.png"));
  ASSERT_GE(b.size(), 8u);
  const unsigned char sig[8] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
  for (int i = 0; i < 8; ++i) EXPECT_EQ(static_cast<unsigned char>(b[i]), sig[i]);
}

TEST_F(ImageIo, NormalizedImagesAndQuantization) {
  ErpImage img(4, 6, 3);
  for (std::size_t i = 0; i < img.values().size(); ++i) img.values()[i] = (i % 256) / 255.0;
  save_image(img, path("x.png"));
  EXPECT_EQ(load_image(path("x.png")), img);
  save_image(img, path("x16.png"), 16);
  const ErpImage back16 = load_image(path("x16.png"));
  for (std::size_t i = 0; i < img.values().size(); ++i) {
    EXPECT_NEAR(back16.values()[i], img.values()[i], 0.5 / 65535.0);
  }
  EXPECT_EQ(quantize(0.5, 8), 128);
  EXPECT_EQ(quantize(127.4 / 255.0, 8), 127);
  EXPECT_EQ(quantize(-1.0, 8), 0);
  EXPECT_EQ(quantize(2.0, 16), 65535);
  EXPECT_THROW(quantize(std::nan(""), 8), NumericError);
  EXPECT_THROW(save_image(img, path("x.png"), 12), InputError);
  EXPECT_THROW(save_image(img, path("x.bmp")), InputError);
}

TEST_F(ImageIo, GrayInputsAreReplicated) {
  write_raw_image(path("g.png"), RawImage{1, 2, 1, 8, {0, 255}});
  const ErpImage img = load_image(path("g.png"));
  EXPECT_EQ(img.channels(), 3);
  EXPECT_EQ(img.values(), (std::vector<double>{0, 0, 0, 1, 1, 1}));
}

TEST_F(ImageIo, CorruptFilesAreInputErrors) {
  write_raw_image(path("a.png"), random_raw(32, 32, 3, 8, 2));
  auto b = bytes(path("a.png"));
  b.resize(b.size() / 2);
  write_bytes(path("trunc.png"), b);
  EXPECT_THROW(read_raw_image(path("trunc.png")), InputError);

  write_bytes(path("junk.png"), {'n', 'o', 't', ' ', 'p', 'n', 'g'});
  EXPECT_THROW(read_raw_image(path("junk.png")), InputError);

  write_raw_image(path("a.ppm"), random_raw(4, 4, 3, 8, 3));
  auto p = bytes(path("a.ppm"));
  p.pop_back();
  write_bytes(path("trunc.ppm"), p);
  EXPECT_THROW(read_raw_image(path("trunc.ppm")), InputError);

  const std::string bad_max = "P6\n1 1\n100\n\x01\x02\x03";
  write_bytes(path("max.ppm"), {bad_max.begin(), bad_max.end()});
  EXPECT_THROW(read_raw_image(path("max.ppm")), InputError);

  EXPECT_THROW(read_raw_image(path("missing.png")), InputError);
  EXPECT_THROW(read_raw_image(path("a.tiff")), InputError);
}

TEST_F(ImageIo, InstanceMapsAndFloatFiles) {
  InstanceMap m{2, 3, {0, 1, 2, 300, 65535, 7}};
  save_instance_map(m, path("ids.png"));
  const InstanceMap back = load_instance_map(path("ids.png"));
  EXPECT_EQ(back.height, 2);
  EXPECT_EQ(back.width, 3);
  EXPECT_EQ(back.ids, m.ids);
  write_raw_image(path("rgb.png"), random_raw(2, 2, 3, 8, 4));
  EXPECT_THROW(load_instance_map(path("rgb.png")), InputError);

  const std::vector<double> v{1.0, -2.5, 180.3125};
  write_float32(path("v.f32"), v);
  const auto b = bytes(path("v.f32"));
  ASSERT_EQ(b.size(), 12u);
  EXPECT_EQ(static_cast<unsigned char>(b[3]), 0x3F);  // 1.0f little-endian: 00 00 80 3F
  EXPECT_EQ(static_cast<unsigned char>(b[2]), 0x80);
  EXPECT_EQ(read_float32(path("v.f32")), (std::vector<float>{1.0f, -2.5f, 180.3125f}));
  write_bytes(path("bad.f32"), {1, 2, 3});
  EXPECT_THROW(read_float32(path("bad.f32")), InputError);
}

using CheckpointIo = TempDir;

Checkpoint sample_checkpoint() {
  ad::ParameterSet<double> ps;
  ps.add("a.weight", {2, 3}, {1, 2, 3, 4, 5, 6});
  ps.add("a.bias", {3}, {-1, 0.5, 0.25});
  return make_checkpoint("L = 2\nD = 3\n", ps);
}

TEST_F(CheckpointIo, RoundTripAndLayout) {
  const Checkpoint c = sample_checkpoint();
  write_checkpoint(path("m.ckpt"), c);
  const auto b = bytes(path("m.ckpt"));
  EXPECT_EQ(std::string(b.begin(), b.begin() + 12), "faor-ckpt-v1");
  const Checkpoint back = read_checkpoint(path("m.ckpt"));
  EXPECT_EQ(back.config_text, c.config_text);
  ASSERT_EQ(back.entries.size(), 2u);
  EXPECT_EQ(back.entries[0].name, "a.weight");
  EXPECT_EQ(back.entries[0].shape, (ad::Shape{2, 3}));
  EXPECT_EQ(back.entries[1].values, (std::vector<float>{-1.0f, 0.5f, 0.25f}));
  ASSERT_NE(back.find("a.bias"), nullptr);
  EXPECT_EQ(back.find("nope"), nullptr);

  ad::ParameterSet<float> target;
  target.add("a.weight", {2, 3}, std::vector<float>(6, 0.0f));
  target.add("a.bias", {3}, std::vector<float>(3, 0.0f));
  load_parameters(back, target);
  EXPECT_EQ(target[0].tensor.data()[5], 6.0f);
}

TEST_F(CheckpointIo, RejectsDamagedOrMismatchedFiles) {
  write_checkpoint(path("m.ckpt"), sample_checkpoint());
  auto b = bytes(path("m.ckpt"));
  auto cut = b;
  cut.resize(b.size() - 3);
  write_bytes(path("cut.ckpt"), cut);
  EXPECT_THROW(read_checkpoint(path("cut.ckpt")), InputError);
  auto tag = b;
  tag[0] = 'x';
  write_bytes(path("tag.ckpt"), tag);
  EXPECT_THROW(read_checkpoint(path("tag.ckpt")), InputError);
  auto extra = b;
  extra.push_back(0);
  write_bytes(path("extra.ckpt"), extra);
  EXPECT_THROW(read_checkpoint(path("extra.ckpt")), InputError);

  const Checkpoint c = read_checkpoint(path("m.ckpt"));
  ad::ParameterSet<double> wrong_shape;
  wrong_shape.add("a.weight", {3, 2}, std::vector<double>(6, 0.0));
  wrong_shape.add("a.bias", {3}, std::vector<double>(3, 0.0));
  EXPECT_THROW(load_parameters(c, wrong_shape), InputError);
  ad::ParameterSet<double> missing;
  missing.add("b.weight", {1}, {0.0});
  EXPECT_THROW(load_parameters(c, missing), InputError);
}

TEST(KeyValueConfigTest, ParsesTypedValues) {
  const auto kv = KeyValueConfig::parse(
      "# comment\n"
      "L = 4   # trailing comment\n"
      "  D=32\n"
      "\n"
      "lr0 = 1e-3\n"
      "priors = off\n"
      "name = hello world\n"
      "lr_milestones = 10, 20,30\n"
      "L = 5\n");
  EXPECT_EQ(kv.get_int("L", 0), 5);
  EXPECT_EQ(kv.get_int("D", 0), 32);
  EXPECT_EQ(kv.get_double("lr0", 0.0), 1e-3);
  EXPECT_FALSE(kv.get_bool("priors", true));
  EXPECT_EQ(kv.get_string("name", ""), "hello world");
  EXPECT_EQ(kv.get_int_list("lr_milestones", {}), (std::vector<long long>{10, 20, 30}));
  EXPECT_EQ(kv.get_int("absent", 7), 7);
  EXPECT_TRUE(kv.unused_keys().empty());
}

TEST(KeyValueConfigTest, ReportsErrors) {
  EXPECT_THROW(KeyValueConfig::parse("no equals sign"), InputError);
  EXPECT_THROW(KeyValueConfig::parse(" = 3"), InputError);
  const auto kv = KeyValueConfig::parse("a = 3x\nb = maybe\nc = 1\n");
  EXPECT_THROW(kv.get_int("a", 0), InputError);
  EXPECT_THROW(kv.get_double("a", 0), InputError);
  EXPECT_THROW(kv.get_bool("b", false), InputError);
  EXPECT_EQ(kv.unused_keys(), (std::vector<std::string>{"c"}));
  EXPECT_THROW(KeyValueConfig::load("/nonexistent/faor.cfg"), InputError);
}

TEST(ModelConfigTest, TextRoundTripAndValidation) {
  ModelConfig c;
  c.num_blocks = 3;
  c.channels = 16;
  c.attention_scale = 8;
  c.coord_encoding = CoordEncoding::kSinCos;
  c.coord_frequencies = 6;
  c.lift_kernel = 3;
  c.use_priors = false;
  c.resampler = ResamplerKind::kBilinear;
  const ModelConfig back = ModelConfig::from_config(KeyValueConfig::parse(c.to_text()));
  EXPECT_EQ(back.to_text(), c.to_text());
  EXPECT_EQ(back.coord_features(), 24);
  EXPECT_EQ(back.d_k(), 8.0);
  EXPECT_THROW(ModelConfig::from_config(KeyValueConfig::parse("L = 0")), InputError);
  EXPECT_THROW(ModelConfig::from_config(KeyValueConfig::parse("D = 1")), InputError);
  EXPECT_THROW(ModelConfig::from_config(KeyValueConfig::parse("lift_kernel = 5")), InputError);
  EXPECT_THROW(ModelConfig::from_config(KeyValueConfig::parse("coord_encoding = fourier")),
               InputError);
  EXPECT_EQ(ModelConfig().d_k(), 32.0);
}

using ManifestIo = TempDir;

TEST_F(ManifestIo, JsonRoundTrip) {
  RunManifest m;
  m.command = "upscale";
  m.config_path = "cfg.txt";
  m.inputs = {"in.png"};
  m.outputs = {"out.png"};
  m.seed = 42;
  m.timings = {1.5, 2.0, 3.25, 7.0};
  m.details["sgif_evaluations"] = "512";
  m.write(path("m.json"));
  std::ifstream in(path("m.json"));
  const std::string text{std::istreambuf_iterator<char>(in), {}};
  const auto j = nlohmann::json::parse(text);
  EXPECT_EQ(j["command"], "upscale");
  EXPECT_EQ(j["seed"], 42);
  EXPECT_EQ(j["timings_ms"]["sgif"], 3.25);
  const RunManifest back = RunManifest::from_json(text);
  EXPECT_EQ(back.inputs, m.inputs);
  EXPECT_EQ(back.details, m.details);
  EXPECT_EQ(back.version, version_string());
  EXPECT_EQ(back.timings.total_ms, 7.0);
  EXPECT_FALSE(version_string().empty());
}

TEST_F(ManifestIo, RejectsInvalidContent) {
  RunManifest m;
  m.timings.encode_ms = -1.0;
  EXPECT_THROW(m.to_json(), InputError);
  EXPECT_THROW(RunManifest::from_json("{not json"), InputError);
}

}  // namespace
}  // namespace faor
