#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "sclc/model.hpp"
#include "sclc/rng.hpp"

using namespace sclc;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  static fs::path dir = [] {
    fs::path p = fs::temp_directory_path() / "sclc-model-tests";
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

bool params_equal(const Network& a, const Network& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.layer(i).weight.values() != b.layer(i).weight.values()) return false;
    if (a.layer(i).bias.values() != b.layer(i).bias.values()) return false;
  }
  return true;
}

Tensor random_batch(const ModelSpec& spec, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Tensor t({n, spec.input_channels, spec.input_height, spec.input_width});
  for (auto& v : t.values()) v = rng.uniform();
  return t;
}

}  // namespace

TEST(ModelSpec, DefaultsValidate) {
  ModelSpec spec;
  EXPECT_NO_THROW(spec.validate());
  EXPECT_EQ(spec.embedding_dim(), 64u);
  EXPECT_EQ(spec.conv_layer_ids(), (std::vector<std::size_t>{0, 3, 6}));
}

TEST(ModelSpec, RejectsIndivisibleResolution) {
  ModelSpec spec;
  spec.input_height = 30;  // three pool halvings need a multiple of 8
  EXPECT_THROW(spec.validate(), std::invalid_argument);
}

TEST(ModelSpec, RejectsSingleClass) {
  ModelSpec spec;
  spec.classes = 1;
  EXPECT_THROW(spec.validate(), std::invalid_argument);
}

TEST(ModelInit, DeterministicPerSeed) {
  ModelSpec spec;
  Model a = init(spec, 7), b = init(spec, 7), c = init(spec, 8);
  EXPECT_TRUE(params_equal(a.encoder, b.encoder));
  EXPECT_TRUE(params_equal(a.projection, b.projection));
  EXPECT_TRUE(params_equal(a.classifier, b.classifier));
  EXPECT_FALSE(params_equal(a.encoder, c.encoder));
}

TEST(ModelInit, GlorotBoundsAndZeroBiases) {
  ModelSpec spec;
  Model m = init(spec, 3);

  auto check = [&](const Network& net) {
    net.for_each_param([&](const std::string& name, std::size_t layer, bool is_weight,
                           const Tensor& t) {
      if (!is_weight) {
        for (double v : t.values()) EXPECT_EQ(v, 0.0) << name;
        return;
      }
      const LayerSpec& s = net.layer(layer).spec;
      double fan_in, fan_out;
      if (s.kind == LayerKind::Conv2d) {
        fan_in = static_cast<double>(s.in_channels * 9);
        fan_out = static_cast<double>(s.out_channels * 9);
      } else {
        fan_in = static_cast<double>(s.in_dim);
        fan_out = static_cast<double>(s.out_dim);
      }
      const double bound = std::sqrt(6.0 / (fan_in + fan_out));
      double widest = 0.0;
      for (double v : t.values()) {
        ASSERT_LT(std::fabs(v), bound) << name;
        widest = std::max(widest, std::fabs(v));
      }
      EXPECT_GT(widest, 0.5 * bound) << name << ": draws suspiciously narrow";
    });
  };
  check(m.encoder);
  check(m.projection);
  check(m.classifier);
}

TEST(Embed, ShapeAndDeterminism) {
  ModelSpec spec;
  Model m = init(spec, 5);
  Tensor batch = random_batch(spec, 3, 11);
  Tensor e = embed(m, batch);
  ASSERT_EQ(e.shape(), (std::vector<std::size_t>{3, 64}));

  // duplicate image rows give duplicate embedding rows
  Tensor two({2, 3, 32, 32});
  for (std::size_t i = 0; i < 3 * 32 * 32; ++i) two[i] = two[i + 3 * 32 * 32] = batch[i];
  Tensor e2 = embed(m, two);
  for (std::size_t j = 0; j < 64; ++j) EXPECT_EQ(e2.at(0, j), e2.at(1, j));
}

TEST(Embed, RejectsWrongResolution) {
  ModelSpec spec;
  Model m = init(spec, 5);
  Tensor batch({2, 3, 16, 16}, 0.1);
  EXPECT_THROW(embed(m, batch), std::invalid_argument);
}

TEST(NormalizeRows, HandValuesAndUnitNorms) {
  Tensor x = Tensor::from_data({2, 2}, {3.0, 4.0, -1.0, 0.0});
  RowNormalized r = normalize_rows(x);
  EXPECT_DOUBLE_EQ(r.output.at(0, 0), 0.6);
  EXPECT_DOUBLE_EQ(r.output.at(0, 1), 0.8);
  EXPECT_DOUBLE_EQ(r.output.at(1, 0), -1.0);
  EXPECT_DOUBLE_EQ(r.norms[0], 5.0);
  EXPECT_TRUE(r.zero_rows.empty());

  Rng rng(13);
  Tensor big({5, 32});
  for (auto& v : big.values()) v = rng.uniform(-2.0, 2.0);
  RowNormalized rb = normalize_rows(big);
  for (std::size_t i = 0; i < 5; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < 32; ++j) s += rb.output.at(i, j) * rb.output.at(i, j);
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(NormalizeRows, ZeroRowFallsBackToBasisVector) {
  Tensor x({2, 3});
  x.at(1, 0) = 2.0;
  RowNormalized r = normalize_rows(x);
  ASSERT_EQ(r.zero_rows, (std::vector<std::size_t>{0}));
  EXPECT_EQ(r.output.at(0, 0), 1.0);
  EXPECT_EQ(r.output.at(0, 1), 0.0);
  EXPECT_EQ(r.output.at(0, 2), 0.0);
  EXPECT_EQ(r.output.at(1, 0), 1.0);

  // gradient through a replaced row is defined as zero
  Tensor g({2, 3}, 1.0);
  Tensor din = normalize_rows_backward(r, g);
  EXPECT_EQ(din.at(0, 0), 0.0);
  EXPECT_EQ(din.at(0, 2), 0.0);
  EXPECT_NE(din.at(1, 1), 0.0);
}

TEST(NormalizeRows, BackwardMatchesFiniteDifferences) {
  Rng rng(17);
  Tensor x({3, 6});
  for (auto& v : x.values()) v = rng.uniform(-1.0, 1.0);
  Tensor coeffs({3, 6});
  for (auto& v : coeffs.values()) v = rng.uniform(-1.0, 1.0);

  RowNormalized fwd = normalize_rows(x);
  Tensor analytic = normalize_rows_backward(fwd, coeffs);

  const double h = 1e-5;
  auto probe = [&](const Tensor& t) {
    RowNormalized r = normalize_rows(t);
    double s = 0.0;
    for (std::size_t i = 0; i < r.output.size(); ++i) s += coeffs[i] * r.output[i];
    return s;
  };
  for (std::size_t i = 0; i < x.size(); ++i) {
    Tensor xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    const double numeric = (probe(xp) - probe(xm)) / (2.0 * h);
    EXPECT_NEAR(analytic[i], numeric, 1e-6 * std::max(1.0, std::fabs(numeric)));
  }
}

TEST(Project, UnitRowsAtProjectionDim) {
  ModelSpec spec;
  Model m = init(spec, 21);
  Tensor batch = random_batch(spec, 4, 23);
  Tensor z = project(m, embed(m, batch));
  ASSERT_EQ(z.shape(), (std::vector<std::size_t>{4, 32}));
  for (std::size_t i = 0; i < 4; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < 32; ++j) s += z.at(i, j) * z.at(i, j);
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(Project, ReportsCollapsedRows) {
  ModelSpec spec;
  Model m = init(spec, 21);
  // zero projection weights force a zero pre-normalization output
  for (std::size_t i = 0; i < m.projection.size(); ++i) {
    m.projection.layer(i).weight.fill(0.0);
    m.projection.layer(i).bias.fill(0.0);
  }
  Tensor batch = random_batch(spec, 2, 25);
  std::vector<std::size_t> zero_rows;
  Tensor z = project(m, embed(m, batch), &zero_rows);
  EXPECT_EQ(zero_rows, (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(z.at(0, 0), 1.0);
  EXPECT_EQ(z.at(1, 0), 1.0);
}

TEST(Classify, RowsAreDistributions) {
  ModelSpec spec;
  Model m = init(spec, 29);
  Tensor p = classify(m, embed(m, random_batch(spec, 3, 31)));
  ASSERT_EQ(p.shape(), (std::vector<std::size_t>{3, spec.classes}));
  for (std::size_t i = 0; i < 3; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < spec.classes; ++j) {
      EXPECT_GT(p.at(i, j), 0.0);
      s += p.at(i, j);
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(Freeze, ContrastiveStepBecomesNoOp) {
  ModelSpec spec;
  Model m = init(spec, 33);
  freeze_encoder(m);
  EXPECT_TRUE(m.encoder_frozen);

  Model before = m;
  ModelOptimizer opt;
  Gradients eg, pg;
  eg.weight_grads.resize(m.encoder.size());
  eg.bias_grads.resize(m.encoder.size());
  pg.weight_grads.resize(m.projection.size());
  pg.bias_grads.resize(m.projection.size());
  for (std::size_t i = 0; i < m.encoder.size(); ++i) {
    if (!m.encoder.layer(i).spec.has_params()) continue;
    eg.weight_grads[i] = Tensor(m.encoder.layer(i).weight.shape(), 1.0);
    eg.bias_grads[i] = Tensor(m.encoder.layer(i).bias.shape(), 1.0);
  }
  for (std::size_t i = 0; i < m.projection.size(); ++i) {
    if (!m.projection.layer(i).spec.has_params()) continue;
    pg.weight_grads[i] = Tensor(m.projection.layer(i).weight.shape(), 1.0);
    pg.bias_grads[i] = Tensor(m.projection.layer(i).bias.shape(), 1.0);
  }
  opt.step_contrastive(m, eg, pg);
  EXPECT_TRUE(params_equal(m.encoder, before.encoder));
  EXPECT_TRUE(params_equal(m.projection, before.projection));
}

TEST(Checkpoint, RoundTripPreservesEverything) {
  ModelSpec spec;
  Model m = init(spec, 41);
  m.stage = Stage::Finetuned;
  const fs::path path = temp_dir() / "roundtrip.ckpt";
  save_checkpoint(m, path.string());

  Model loaded = load_checkpoint(path.string());
  EXPECT_EQ(loaded.spec, m.spec);
  EXPECT_EQ(loaded.stage, Stage::Finetuned);
  EXPECT_TRUE(params_equal(loaded.encoder, m.encoder));
  EXPECT_TRUE(params_equal(loaded.projection, m.projection));
  EXPECT_TRUE(params_equal(loaded.classifier, m.classifier));

  // save-load-save is byte identical
  const fs::path again = temp_dir() / "roundtrip2.ckpt";
  save_checkpoint(loaded, again.string());
  EXPECT_EQ(slurp(path), slurp(again));
}

TEST(Checkpoint, FileStartsWithMagic) {
  ModelSpec spec;
  Model m = init(spec, 43);
  const fs::path path = temp_dir() / "magic.ckpt";
  save_checkpoint(m, path.string());
  EXPECT_EQ(slurp(path).substr(0, 4), "SCLC");
}

TEST(Checkpoint, WideClassifierSurvives) {
  ModelSpec spec;
  spec.classes = 23;
  Model m = init(spec, 47);
  const fs::path path = temp_dir() / "wide.ckpt";
  save_checkpoint(m, path.string());
  Model loaded = load_checkpoint(path.string());
  EXPECT_EQ(loaded.spec.classes, 23u);
  EXPECT_EQ(loaded.classifier.layer(0).weight.dim(0), 23u);
}

TEST(Checkpoint, MissingFileNamesPath) {
  try {
    load_checkpoint("/nonexistent/nowhere.ckpt");
    FAIL() << "expected throw";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/nowhere.ckpt"), std::string::npos);
  }
}

TEST(Checkpoint, RejectsBadMagic) {
  const fs::path path = temp_dir() / "bad-magic.ckpt";
  std::ofstream(path, std::ios::binary) << "NOPE this is not a checkpoint";
  try {
    load_checkpoint(path.string());
    FAIL() << "expected throw";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("magic"), std::string::npos);
  }
}

TEST(Checkpoint, RejectsTruncation) {
  ModelSpec spec;
  Model m = init(spec, 53);
  const fs::path path = temp_dir() / "full.ckpt";
  save_checkpoint(m, path.string());
  std::string bytes = slurp(path);

  const fs::path cut = temp_dir() / "cut.ckpt";
  std::ofstream(cut, std::ios::binary) << bytes.substr(0, bytes.size() / 2);
  try {
    load_checkpoint(cut.string());
    FAIL() << "expected throw";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("truncated"), std::string::npos);
  }
}

TEST(Checkpoint, RejectsTrailingBytes) {
  ModelSpec spec;
  Model m = init(spec, 59);
  const fs::path path = temp_dir() / "trail.ckpt";
  save_checkpoint(m, path.string());
  std::ofstream(path, std::ios::binary | std::ios::app) << "junk";
  try {
    load_checkpoint(path.string());
    FAIL() << "expected throw";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("trailing"), std::string::npos);
  }
}

TEST(Checkpoint, RejectsUnsupportedVersion) {
  ModelSpec spec;
  Model m = init(spec, 61);
  const fs::path path = temp_dir() / "version.ckpt";
  save_checkpoint(m, path.string());
  std::string bytes = slurp(path);
  bytes[4] = 9;  // version field follows the 4-byte magic
  std::ofstream(path, std::ios::binary | std::ios::trunc) << bytes;
  try {
    load_checkpoint(path.string());
    FAIL() << "expected throw";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("version"), std::string::npos);
  }
}
