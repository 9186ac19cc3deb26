#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "sclc/engine.hpp"
#include "sclc/optimizer.hpp"
#include "sclc/rng.hpp"

using namespace sclc;

namespace {

Tensor random_tensor(const std::vector<std::size_t>& shape, Rng& rng, double lo = -1.0,
                     double hi = 1.0) {
  Tensor t(shape);
  for (auto& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

void randomize_params(Network& net, Rng& rng) {
  net.for_each_param([&](const std::string&, std::size_t, bool, Tensor& t) {
    for (auto& v : t.values()) v = rng.uniform(-0.5, 0.5);
  });
  net.bump_version();
}

// Reference convolution written as the direct definition: explicit loops over
// batch, channels and taps with virtual zero padding.
Tensor conv_reference(const Tensor& in, const Tensor& weight, const Tensor& bias) {
  const std::size_t b = in.dim(0), ic = in.dim(1), h = in.dim(2), w = in.dim(3);
  const std::size_t oc = weight.dim(0);
  Tensor out({b, oc, h, w});
  for (std::size_t n = 0; n < b; ++n)
    for (std::size_t o = 0; o < oc; ++o)
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
          double acc = bias[o];
          for (std::size_t c = 0; c < ic; ++c)
            for (int dy = -1; dy <= 1; ++dy)
              for (int dx = -1; dx <= 1; ++dx) {
                const long sy = static_cast<long>(y) + dy;
                const long sx = static_cast<long>(x) + dx;
                if (sy < 0 || sx < 0 || sy >= static_cast<long>(h) ||
                    sx >= static_cast<long>(w))
                  continue;
                acc += weight.at(o, c, static_cast<std::size_t>(dy + 1),
                                 static_cast<std::size_t>(dx + 1)) *
                       in.at(n, c, static_cast<std::size_t>(sy), static_cast<std::size_t>(sx));
              }
          out.at(n, o, y, x) = acc;
        }
  return out;
}

double dot_all(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

TEST(Conv2d, MatchesDirectDefinition) {
  Rng rng(101);
  for (int trial = 0; trial < 5; ++trial) {
    Tensor in = random_tensor({2, 3, 6, 5}, rng);
    Tensor w = random_tensor({4, 3, 3, 3}, rng);
    Tensor b = random_tensor({4}, rng);
    Tensor got = detail::conv2d_forward(detail::pad1(in), w, b, 6, 5);
    Tensor want = conv_reference(in, w, b);
    ASSERT_EQ(got.shape(), want.shape());
    for (std::size_t i = 0; i < got.size(); ++i) ASSERT_NEAR(got[i], want[i], 1e-12);
  }
}

TEST(Conv2d, CenterTapIsIdentity) {
  Rng rng(103);
  Tensor in = random_tensor({1, 1, 4, 4}, rng);
  Tensor w({1, 1, 3, 3});
  w.at(0, 0, 1, 1) = 1.0;
  Tensor b({1});
  Tensor out = detail::conv2d_forward(detail::pad1(in), w, b, 4, 4);
  for (std::size_t i = 0; i < in.size(); ++i) EXPECT_DOUBLE_EQ(out[i], in[i]);
}

TEST(Conv2d, OffsetTapShiftsImage) {
  // a single impulse at (0,0) with only the (0,0) tap set lands at (1,1);
  // with only the (2,2) tap set it falls off the padded border entirely
  Tensor in({1, 1, 3, 3});
  in.at(0, 0, 0, 0) = 1.0;
  Tensor b({1});

  Tensor w({1, 1, 3, 3});
  w.at(0, 0, 2, 2) = 1.0;
  Tensor out = detail::conv2d_forward(detail::pad1(in), w, b, 3, 3);
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_DOUBLE_EQ(out[i], 0.0);

  Tensor w2({1, 1, 3, 3});
  w2.at(0, 0, 0, 0) = 1.0;
  Tensor out2 = detail::conv2d_forward(detail::pad1(in), w2, b, 3, 3);
  EXPECT_DOUBLE_EQ(out2.at(0, 0, 1, 1), 1.0);
  EXPECT_DOUBLE_EQ(out2.at(0, 0, 0, 0), 0.0);
}

TEST(Relu, StrictlyPositiveGate) {
  Tensor in = Tensor::from_data({5}, {-1.0, -0.0, 0.0, 1e-300, 2.0});
  Tensor out = detail::relu_forward(in);
  EXPECT_EQ(out[0], 0.0);
  EXPECT_EQ(out[1], 0.0);
  EXPECT_EQ(out[2], 0.0);
  EXPECT_EQ(out[3], 1e-300);
  EXPECT_EQ(out[4], 2.0);

  Tensor g = Tensor::from_data({5}, {1, 1, 1, 1, 1});
  Tensor din = detail::relu_backward(in, g);
  EXPECT_EQ(din[0], 0.0);
  EXPECT_EQ(din[2], 0.0);
  EXPECT_EQ(din[3], 1.0);
}

TEST(MaxPool2, FirstMaxWinsOnTies) {
  // window values all equal: argmax must point at the top-left entry
  Tensor in({1, 1, 2, 2}, 5.0);
  std::vector<std::uint32_t> argmax;
  Tensor out = detail::maxpool2_forward(in, argmax);
  EXPECT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0], 5.0);
  ASSERT_EQ(argmax.size(), 1u);
  EXPECT_EQ(argmax[0], 0u);

  Tensor g({1, 1, 1, 1}, 3.0);
  Tensor din = detail::maxpool2_backward(in, g, argmax);
  EXPECT_EQ(din.at(0, 0, 0, 0), 3.0);
  EXPECT_EQ(din.at(0, 0, 0, 1), 0.0);
  EXPECT_EQ(din.at(0, 0, 1, 0), 0.0);
  EXPECT_EQ(din.at(0, 0, 1, 1), 0.0);
}

TEST(MaxPool2, SelectsWindowMaxima) {
  Tensor in = Tensor::from_data({1, 1, 4, 4}, {1, 2, 5, 4,    //
                                               3, 0, 1, 9,    //
                                               7, 1, 2, 2,    //
                                               1, 8, 3, 3});
  std::vector<std::uint32_t> argmax;
  Tensor out = detail::maxpool2_forward(in, argmax);
  EXPECT_EQ(out.at(0, 0, 0, 0), 3.0);
  EXPECT_EQ(out.at(0, 0, 0, 1), 9.0);
  EXPECT_EQ(out.at(0, 0, 1, 0), 8.0);
  EXPECT_EQ(out.at(0, 0, 1, 1), 3.0);
}

TEST(Gap, AveragesSpatially) {
  Tensor in = Tensor::from_data({1, 2, 2, 2}, {1, 2, 3, 4, 10, 20, 30, 40});
  Tensor out = detail::gap_forward(in);
  ASSERT_EQ(out.shape(), (std::vector<std::size_t>{1, 2}));
  EXPECT_DOUBLE_EQ(out.at(0, 0), 2.5);
  EXPECT_DOUBLE_EQ(out.at(0, 1), 25.0);

  Tensor g = Tensor::from_data({1, 2}, {4.0, 8.0});
  Tensor din = detail::gap_backward(in, g);
  EXPECT_DOUBLE_EQ(din.at(0, 0, 0, 0), 1.0);
  EXPECT_DOUBLE_EQ(din.at(0, 1, 1, 1), 2.0);
}

TEST(Dense, MatrixVectorFixture) {
  Tensor in = Tensor::from_data({1, 2}, {1.0, 2.0});
  Tensor w = Tensor::from_data({3, 2}, {1, 0, 0, 1, 1, 1});
  Tensor b = Tensor::from_data({3}, {0.5, -0.5, 0.0});
  Tensor out = detail::dense_forward(in, w, b);
  EXPECT_DOUBLE_EQ(out.at(0, 0), 1.5);
  EXPECT_DOUBLE_EQ(out.at(0, 1), 1.5);
  EXPECT_DOUBLE_EQ(out.at(0, 2), 3.0);
}

TEST(Softmax, KnownValuesAndStability) {
  Tensor in = Tensor::from_data({1, 2}, {0.0, std::log(2.0)});
  Tensor out = detail::softmax_forward(in);
  EXPECT_NEAR(out.at(0, 0), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(out.at(0, 1), 2.0 / 3.0, 1e-15);

  Tensor big = Tensor::from_data({1, 2}, {1000.0, 1000.0});
  Tensor sout = detail::softmax_forward(big);
  EXPECT_TRUE(sout.all_finite());
  EXPECT_NEAR(sout.at(0, 0), 0.5, 1e-15);

  Rng rng(107);
  Tensor r = random_tensor({4, 7}, rng, -5.0, 5.0);
  Tensor sr = detail::softmax_forward(r);
  for (std::size_t i = 0; i < 4; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < 7; ++j) row += sr.at(i, j);
    EXPECT_NEAR(row, 1.0, 1e-12);
  }
}

TEST(Network, ShapeChainingAndErrors) {
  Network net("enc", {LayerSpec::conv2d(3, 16), LayerSpec::relu(), LayerSpec::maxpool2(),
                      LayerSpec::conv2d(16, 32), LayerSpec::relu(), LayerSpec::maxpool2(),
                      LayerSpec::conv2d(32, 64), LayerSpec::relu(), LayerSpec::maxpool2(),
                      LayerSpec::gap()});
  auto out = net.output_shape({4, 3, 32, 32});
  EXPECT_EQ(out, (std::vector<std::size_t>{4, 64}));

  try {
    net.output_shape({4, 5, 32, 32});
    FAIL() << "expected throw";
  } catch (const std::invalid_argument& e) {
    std::string msg = e.what();
    EXPECT_NE(msg.find("layer 0"), std::string::npos);
    EXPECT_NE(msg.find("conv2d"), std::string::npos);
  }

  Network dense_net("clf", {LayerSpec::dense(8, 4), LayerSpec::softmax()});
  EXPECT_THROW(dense_net.output_shape({2, 7}), std::invalid_argument);
  EXPECT_EQ(dense_net.output_shape({2, 8}), (std::vector<std::size_t>{2, 4}));
}

TEST(Forward, TailRunMatchesFullRun) {
  Rng rng(109);
  Network net("n", {LayerSpec::conv2d(2, 3), LayerSpec::relu(), LayerSpec::maxpool2(),
                    LayerSpec::gap(), LayerSpec::dense(3, 4), LayerSpec::softmax()});
  randomize_params(net, rng);
  Tensor in = random_tensor({2, 2, 6, 6}, rng);
  auto full = forward(net, in, {0, 2});
  for (std::size_t start_layer : {1u, 3u}) {
    Tensor tail = forward_from(net, start_layer, full.activations.at(start_layer - 1));
    ASSERT_EQ(tail.shape(), full.output.shape());
    for (std::size_t i = 0; i < tail.size(); ++i) ASSERT_DOUBLE_EQ(tail[i], full.output[i]);
  }
  // start == size is the empty tail
  Tensor same = forward_from(net, net.size(), full.output);
  for (std::size_t i = 0; i < same.size(); ++i) EXPECT_DOUBLE_EQ(same[i], full.output[i]);
}

TEST(Forward, ForwardOnlyMatchesTapedForward) {
  Rng rng(111);
  Network net("n", {LayerSpec::conv2d(1, 2), LayerSpec::relu(), LayerSpec::gap(),
                    LayerSpec::dense(2, 3)});
  randomize_params(net, rng);
  Tensor in = random_tensor({3, 1, 4, 4}, rng);
  auto taped = forward(net, in);
  Tensor plain = forward_only(net, in);
  for (std::size_t i = 0; i < plain.size(); ++i) EXPECT_DOUBLE_EQ(plain[i], taped.output[i]);
}

TEST(Forward, CaptureOutOfRangeThrows) {
  Network net("n", {LayerSpec::dense(2, 2)});
  Tensor in({1, 2}, 0.5);
  EXPECT_THROW(forward(net, in, {5}), std::invalid_argument);
}

TEST(Backward, StaleTapeDetected) {
  Rng rng(113);
  Network net("n", {LayerSpec::dense(3, 2), LayerSpec::softmax()});
  randomize_params(net, rng);
  Tensor in = random_tensor({2, 3}, rng);
  auto fr = forward(net, in);
  net.bump_version();
  Tensor seed({2, 2}, 1.0);
  try {
    backward(fr.tape, seed);
    FAIL() << "expected throw";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("stale"), std::string::npos);
  }
}

TEST(Backward, OutputGradShapeChecked) {
  Network net("n", {LayerSpec::dense(3, 2)});
  Tensor in({2, 3}, 0.1);
  auto fr = forward(net, in);
  Tensor bad({2, 3}, 1.0);
  EXPECT_THROW(backward(fr.tape, bad), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Finite-difference oracle. For a scalar probe f = sum(c * output), every
// parameter gradient, the input gradient, and every captured conv activation
// gradient must match central differences with step 1e-5 to a relative error
// below 1e-6 (relative to max(1, |analytic|, |numeric|)).
// ---------------------------------------------------------------------------
namespace {

constexpr double kFdStep = 1e-5;
constexpr double kFdTol = 1e-6;
constexpr double kKinkMargin = 1e-3;

double rel_err(double a, double n) {
  return std::fabs(a - n) / std::max({1.0, std::fabs(a), std::fabs(n)});
}

// Reject draws where a relu input or a pool-window runner-up sits close enough
// to the decision boundary that a finite-difference probe could cross it.
bool tape_is_smooth(const Network& net, const Tape& tape) {
  for (std::size_t i = 0; i < net.size(); ++i) {
    const LayerSpec& s = net.layer(i).spec;
    const TapeEntry& e = tape.entries[i];
    if (s.kind == LayerKind::Relu) {
      for (double v : e.input.values())
        if (std::fabs(v) < kKinkMargin) return false;
    } else if (s.kind == LayerKind::MaxPool2) {
      const Tensor& in = e.input;
      const std::size_t b = in.dim(0), c = in.dim(1), h = in.dim(2) / 2, w = in.dim(3) / 2;
      for (std::size_t n = 0; n < b; ++n)
        for (std::size_t ch = 0; ch < c; ++ch)
          for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x) {
              double vals[4] = {in.at(n, ch, 2 * y, 2 * x), in.at(n, ch, 2 * y, 2 * x + 1),
                                in.at(n, ch, 2 * y + 1, 2 * x),
                                in.at(n, ch, 2 * y + 1, 2 * x + 1)};
              std::sort(vals, vals + 4);
              if (vals[3] - vals[2] < kKinkMargin) return false;
            }
    }
  }
  return true;
}

struct FdReport {
  double max_rel = 0.0;
  std::string worst;
};

void fd_check_params(Network& net, const Tensor& input, const Tensor& coeffs,
                     const Gradients& grads, FdReport& rep) {
  net.for_each_param([&](const std::string& name, std::size_t layer, bool is_weight, Tensor& p) {
    const Tensor& g = is_weight ? grads.weight_grads[layer] : grads.bias_grads[layer];
    ASSERT_EQ(g.shape(), p.shape()) << name;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double keep = p[i];
      p[i] = keep + kFdStep;
      const double fp = dot_all(forward_only(net, input), coeffs);
      p[i] = keep - kFdStep;
      const double fm = dot_all(forward_only(net, input), coeffs);
      p[i] = keep;
      const double numeric = (fp - fm) / (2.0 * kFdStep);
      const double r = rel_err(g[i], numeric);
      if (r > rep.max_rel) {
        rep.max_rel = r;
        rep.worst = name + "[" + std::to_string(i) + "]";
      }
    }
  });
}

void fd_check_input(const Network& net, Tensor input, const Tensor& coeffs,
                    const Gradients& grads, FdReport& rep) {
  for (std::size_t i = 0; i < input.size(); ++i) {
    const double keep = input[i];
    input[i] = keep + kFdStep;
    const double fp = dot_all(forward_only(net, input), coeffs);
    input[i] = keep - kFdStep;
    const double fm = dot_all(forward_only(net, input), coeffs);
    input[i] = keep;
    const double numeric = (fp - fm) / (2.0 * kFdStep);
    const double r = rel_err(grads.input_grad[i], numeric);
    if (r > rep.max_rel) {
      rep.max_rel = r;
      rep.worst = "input[" + std::to_string(i) + "]";
    }
  }
}

void fd_check_activation(const Network& net, std::size_t layer, Tensor act, const Tensor& coeffs,
                         const Tensor& act_grad, FdReport& rep) {
  for (std::size_t i = 0; i < act.size(); ++i) {
    const double keep = act[i];
    act[i] = keep + kFdStep;
    const double fp = dot_all(forward_from(net, layer + 1, act), coeffs);
    act[i] = keep - kFdStep;
    const double fm = dot_all(forward_from(net, layer + 1, act), coeffs);
    act[i] = keep;
    const double numeric = (fp - fm) / (2.0 * kFdStep);
    const double r = rel_err(act_grad[i], numeric);
    if (r > rep.max_rel) {
      rep.max_rel = r;
      rep.worst = "act" + std::to_string(layer) + "[" + std::to_string(i) + "]";
    }
  }
}

// One full oracle round: draw a smooth configuration, compare analytic and
// numeric gradients everywhere. Returns the observed maximum relative error.
double fd_oracle_round(const std::vector<LayerSpec>& specs,
                       const std::vector<std::size_t>& input_shape,
                       const std::set<std::size_t>& capture, std::uint64_t seed) {
  Network net("fd", specs);
  Tensor input;
  ForwardResult fr;
  bool ok = false;
  for (std::uint64_t attempt = 0; attempt < 200 && !ok; ++attempt) {
    Rng rng(derive_seed(seed, attempt));
    randomize_params(net, rng);
    input = random_tensor(input_shape, rng);
    fr = forward(net, input, capture);
    ok = tape_is_smooth(net, fr.tape);
  }
  EXPECT_TRUE(ok) << "no smooth draw found";

  Rng crng(derive_seed(seed, 999));
  Tensor coeffs = random_tensor(fr.output.shape(), crng);
  Gradients grads = backward(fr.tape, coeffs, capture);

  FdReport rep;
  fd_check_params(net, input, coeffs, grads, rep);
  fd_check_input(net, input, coeffs, grads, rep);
  for (std::size_t layer : capture)
    fd_check_activation(net, layer, fr.activations.at(layer), coeffs,
                        grads.activation_grads.at(layer), rep);
  EXPECT_LT(rep.max_rel, kFdTol) << "worst entry: " << rep.worst;
  return rep.max_rel;
}

}  // namespace

TEST(GradOracle, FullStack) {
  std::vector<LayerSpec> specs = {LayerSpec::conv2d(2, 3), LayerSpec::relu(),
                                  LayerSpec::maxpool2(),   LayerSpec::conv2d(3, 4),
                                  LayerSpec::relu(),       LayerSpec::gap(),
                                  LayerSpec::dense(4, 5),  LayerSpec::softmax()};
  fd_oracle_round(specs, {2, 2, 8, 8}, {0, 3}, 1);
  fd_oracle_round(specs, {2, 2, 8, 8}, {0, 3}, 2);
}

TEST(GradOracle, PoolBeforeRelu) {
  std::vector<LayerSpec> specs = {LayerSpec::conv2d(3, 4), LayerSpec::maxpool2(),
                                  LayerSpec::relu(),       LayerSpec::conv2d(4, 4),
                                  LayerSpec::gap(),        LayerSpec::dense(4, 4)};
  fd_oracle_round(specs, {2, 3, 6, 6}, {0, 3}, 3);
}

TEST(GradOracle, DenseStack) {
  std::vector<LayerSpec> specs = {LayerSpec::dense(6, 8), LayerSpec::relu(),
                                  LayerSpec::dense(8, 3), LayerSpec::softmax()};
  fd_oracle_round(specs, {4, 6}, {}, 4);
}

TEST(GradOracle, SingleConvWithSoftmaxHead) {
  std::vector<LayerSpec> specs = {LayerSpec::conv2d(1, 2), LayerSpec::relu(), LayerSpec::gap(),
                                  LayerSpec::dense(2, 3), LayerSpec::softmax()};
  fd_oracle_round(specs, {3, 1, 4, 4}, {0}, 5);
}

TEST(BackwardFrom, SeedBelowSoftmaxSkipsIt) {
  // Seeding at layer 0 of a dense+softmax net must differentiate only the
  // dense layer: gradient of sum(c * logits), not of softmax outputs.
  Rng rng(117);
  Network net("clf", {LayerSpec::dense(3, 2), LayerSpec::softmax()});
  randomize_params(net, rng);
  Tensor in = random_tensor({2, 3}, rng);
  auto fr = forward(net, in);
  Tensor seed = random_tensor({2, 2}, rng);
  Gradients g = backward_from(fr.tape, seed, 0);

  // reference: logits = in * W^T + b; d(sum c.logits)/dW[o][k] = sum_b c[b][o] in[b][k]
  for (std::size_t o = 0; o < 2; ++o) {
    for (std::size_t k = 0; k < 3; ++k) {
      double want = 0.0;
      for (std::size_t b = 0; b < 2; ++b) want += seed.at(b, o) * in.at(b, k);
      EXPECT_NEAR(g.weight_grads[0].at(o, k), want, 1e-12);
    }
    double want_b = seed.at(0, o) + seed.at(1, o);
    EXPECT_NEAR(g.bias_grads[0][o], want_b, 1e-12);
  }
}

TEST(AdamW, MatchesHandSteppedReference) {
  Network net("p", {LayerSpec::dense(2, 1)});
  net.layer(0).weight = Tensor::from_data({1, 2}, {0.5, -0.3});
  net.layer(0).bias = Tensor::from_data({1}, {0.1});

  AdamWOptions opts;
  opts.lr = 0.01;
  opts.weight_decay = 0.1;
  AdamWState state;

  // reference trajectory computed independently
  std::vector<double> theta = {0.5, -0.3, 0.1};
  std::vector<double> m(3, 0.0), v(3, 0.0);
  std::vector<std::vector<double>> step_grads = {{0.2, -0.4, 0.6}, {-0.1, 0.3, 0.5}};
  for (std::size_t t = 1; t <= 2; ++t) {
    for (std::size_t i = 0; i < 3; ++i) {
      const double g = step_grads[t - 1][i];
      m[i] = 0.9 * m[i] + 0.1 * g;
      v[i] = 0.999 * v[i] + 0.001 * g * g;
      const double mhat = m[i] / (1.0 - std::pow(0.9, static_cast<double>(t)));
      const double vhat = v[i] / (1.0 - std::pow(0.999, static_cast<double>(t)));
      theta[i] -= opts.lr * (mhat / (std::sqrt(vhat) + opts.eps) + opts.weight_decay * theta[i]);
    }
  }

  for (std::size_t t = 0; t < 2; ++t) {
    Gradients grads;
    grads.weight_grads.resize(1);
    grads.bias_grads.resize(1);
    grads.weight_grads[0] = Tensor::from_data({1, 2}, {step_grads[t][0], step_grads[t][1]});
    grads.bias_grads[0] = Tensor::from_data({1}, {step_grads[t][2]});
    adamw_step(net, grads, state, opts);
  }
  EXPECT_NEAR(net.layer(0).weight[0], theta[0], 1e-15);
  EXPECT_NEAR(net.layer(0).weight[1], theta[1], 1e-15);
  EXPECT_NEAR(net.layer(0).bias[0], theta[2], 1e-15);
  EXPECT_EQ(state.step, 2u);
}

TEST(AdamW, DecayIsDecoupledFromGradient) {
  // zero gradient: the update must still shrink weights by lr*wd*theta exactly
  Network net("p", {LayerSpec::dense(1, 1)});
  net.layer(0).weight = Tensor::from_data({1, 1}, {2.0});
  net.layer(0).bias = Tensor::from_data({1}, {0.0});
  AdamWOptions opts;
  opts.lr = 0.1;
  opts.weight_decay = 0.5;
  AdamWState state;
  Gradients grads;
  grads.weight_grads = {Tensor({1, 1}, 0.0)};
  grads.bias_grads = {Tensor({1}, 0.0)};
  adamw_step(net, grads, state, opts);
  EXPECT_NEAR(net.layer(0).weight[0], 2.0 - 0.1 * 0.5 * 2.0, 1e-15);
}

TEST(AdamW, RejectsNonFiniteGradientNamingParameter) {
  Network net("p", {LayerSpec::dense(1, 1)});
  AdamWState state;
  Gradients grads;
  grads.weight_grads = {Tensor({1, 1}, std::numeric_limits<double>::quiet_NaN())};
  grads.bias_grads = {Tensor({1}, 0.0)};
  try {
    adamw_step(net, grads, state, AdamWOptions{});
    FAIL() << "expected throw";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("p.0.weight"), std::string::npos);
  }
}

TEST(AdamW, StepBumpsNetworkVersion) {
  Network net("p", {LayerSpec::dense(1, 1)});
  const auto v0 = net.version();
  AdamWState state;
  Gradients grads;
  grads.weight_grads = {Tensor({1, 1}, 0.1)};
  grads.bias_grads = {Tensor({1}, 0.1)};
  adamw_step(net, grads, state, AdamWOptions{});
  EXPECT_EQ(net.version(), v0 + 1);
}
