#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "resunet/loss.hpp"
#include "resunet/network.hpp"
#include "resunet/rng.hpp"

using namespace resunet;

namespace {

template <class T>
Tensor<T> random_input(Rng& rng, int b, int c, int h, int w) {
  Tensor<T> x({b, c, h, w});
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<T>(rng.uniform(-1.0, 1.0));
  return x;
}

Tensor<std::uint8_t> random_classes(Rng& rng, int b, int h, int w, int n_classes) {
  Tensor<std::uint8_t> t({b, h, w});
  for (std::size_t i = 0; i < t.size(); ++i)
    t[i] = static_cast<std::uint8_t>(rng.uniform_int(0, n_classes - 1));
  return t;
}

}  // namespace

TEST_CASE("parameter counts match the closed-form tally", "[network]") {
  ResUNet<float> toy;
  toy.build({4, 4, 1, 1});
  REQUIRE(toy.parameter_count() == 212);

  ResUNet<float> full;
  full.build({4, 4, 32, 3});
  REQUIRE(full.parameter_count() == 2626852);
}

TEST_CASE("forward pass keeps spatial shape and softmax normalization", "[network]") {
  NetworkConfig cfg{4, 4, 4, 2};
  ResUNet<float> net;
  net.build(cfg);
  Rng rng(1);
  net.init(rng);
  REQUIRE(net.bottleneck_channels() == 16);

  Rng xr(2);
  const Tensor<float> x = random_input<float>(xr, 2, 4, 32, 32);
  const Tensor<float> p = net.forward(x, false);
  REQUIRE(p.rank() == 4);
  REQUIRE(p.dim(0) == 2);
  REQUIRE(p.dim(1) == 4);
  REQUIRE(p.dim(2) == 32);
  REQUIRE(p.dim(3) == 32);
  const auto bshape = net.last_bottleneck_shape();
  REQUIRE(bshape == std::array<int, 3>{16, 8, 8});

  for (int b = 0; b < 2; ++b)
    for (int y = 0; y < 32; ++y)
      for (int x2 = 0; x2 < 32; ++x2) {
        double s = 0;
        for (int c = 0; c < 4; ++c) {
          const float v = p.at(b, c, y, x2);
          REQUIRE(v > 0.0f);
          REQUIRE(v < 1.0f);
          s += v;
        }
        REQUIRE(s == Catch::Approx(1.0).margin(1e-5));
      }
}

TEST_CASE("forward rejects malformed input", "[network]") {
  ResUNet<float> net;
  net.build({4, 4, 2, 2});
  Rng rng(1);
  net.init(rng);
  Rng xr(2);
  Tensor<float> wrong_channels = random_input<float>(xr, 1, 3, 16, 16);
  REQUIRE_THROWS_AS(net.forward(wrong_channels, false), Error);
  Tensor<float> indivisible = random_input<float>(xr, 1, 4, 18, 18);
  REQUIRE_THROWS_AS(net.forward(indivisible, false), Error);
  Tensor<float> flat({4, 16, 16});
  REQUIRE_THROWS_AS(net.forward(flat, false), Error);
}

TEST_CASE("initialization is a pure function of the seed", "[network]") {
  ResUNet<float> a, b, c;
  for (auto* net : {&a, &b}) {
    net->build({4, 4, 2, 1});
    Rng rng(9);
    net->init(rng);
  }
  c.build({4, 4, 2, 1});
  Rng other(10);
  c.init(other);

  const auto pa = a.parameters(), pb = b.parameters(), pc = c.parameters();
  bool all_equal_ab = true, any_diff_ac = false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    for (std::size_t k = 0; k < pa[i].value->size(); ++k) {
      all_equal_ab = all_equal_ab && (*pa[i].value)[k] == (*pb[i].value)[k];
      any_diff_ac = any_diff_ac || (*pa[i].value)[k] != (*pc[i].value)[k];
    }
  }
  REQUIRE(all_equal_ab);
  REQUIRE(any_diff_ac);
}

TEST_CASE("analytic gradients match finite differences", "[network]") {
  // double precision end to end; biases of convolutions that feed a batch
  // norm have structurally zero gradients (the mean subtraction cancels any
  // constant shift), so coordinates with negligible scale are skipped
  ResUNet<double> net;
  net.build({4, 3, 2, 1});
  Rng rng(17);
  net.init(rng);

  Rng xr(18);
  const Tensor<double> x = random_input<double>(xr, 1, 4, 8, 8);
  const Tensor<std::uint8_t> cls = random_classes(xr, 1, 8, 8, 3);
  const Tensor<double> target = one_hot<double>(cls, 3);

  auto loss_of = [&] {
    const Tensor<double> p = net.forward(x, true);
    return weighted_dice_loss(p, target).loss;
  };

  net.zero_grad();
  const Tensor<double> probs = net.forward(x, true);
  const auto res = weighted_dice_loss(probs, target);
  net.backward(res.grad);

  const double h = 1e-5;
  double worst = 0;
  std::size_t checked = 0;
  for (const auto& pr : net.parameters()) {
    if (!pr.grad) continue;  // running statistics are not trained
    Tensor<double>& w = *pr.value;
    // probe a deterministic subset of each tensor to keep runtime sane
    const std::size_t stride = std::max<std::size_t>(1, w.size() / 7);
    for (std::size_t i = 0; i < w.size(); i += stride) {
      const double keep = w[i];
      w[i] = keep + h;
      const double fp = loss_of();
      w[i] = keep - h;
      const double fm = loss_of();
      w[i] = keep;
      const double fd = (fp - fm) / (2 * h);
      const double an = (*pr.grad)[i];
      const double scale = std::max(std::abs(fd), std::abs(an));
      if (scale < 1e-7) continue;
      worst = std::max(worst, std::abs(fd - an) / scale);
      ++checked;
    }
  }
  INFO("coordinates checked: " << checked << ", worst relative error: " << worst);
  REQUIRE(checked > 50);
  REQUIRE(worst < 1e-5);
}

TEST_CASE("batch norm switches between batch and running statistics", "[network]") {
  ResUNet<double> net;
  net.build({4, 4, 2, 1});
  Rng rng(5);
  net.init(rng);

  Rng xr(6);
  const Tensor<double> x = random_input<double>(xr, 2, 4, 8, 8);
  const Tensor<double> train_out = net.forward(x, true);
  const Tensor<double> eval_out = net.forward(x, false);
  // fresh running stats differ from batch stats, so the outputs must too
  double diff = 0;
  for (std::size_t i = 0; i < train_out.size(); ++i)
    diff = std::max(diff, std::abs(train_out[i] - eval_out[i]));
  REQUIRE(diff > 1e-6);

  // running statistics are exposed but not trainable
  bool saw_running = false;
  for (const auto& pr : net.parameters()) {
    if (pr.name.find("running_") != std::string::npos) {
      saw_running = true;
      REQUIRE(pr.grad == nullptr);
    }
  }
  REQUIRE(saw_running);
}
