#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "oracles.hpp"
#include "resunet/loss.hpp"
#include "resunet/rng.hpp"

using namespace resunet;

namespace {

// random probabilities normalized across channels, random one-hot targets
void random_instance(Rng& rng, int b, int c, int h, int w, Tensor<double>& probs,
                     Tensor<double>& target) {
  probs = Tensor<double>({b, c, h, w});
  Tensor<std::uint8_t> cls({b, h, w});
  for (std::size_t i = 0; i < cls.size(); ++i)
    cls[i] = static_cast<std::uint8_t>(rng.uniform_int(0, c - 1));
  target = one_hot<double>(cls, c);
  for (int bb = 0; bb < b; ++bb)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double s = 0;
        for (int cc = 0; cc < c; ++cc) {
          const double v = rng.uniform(0.05, 1.0);
          probs.at(bb, cc, y, x) = v;
          s += v;
        }
        for (int cc = 0; cc < c; ++cc) probs.at(bb, cc, y, x) /= s;
      }
}

}  // namespace

TEST_CASE("hand-worked two-pixel example", "[loss]") {
  // two pixels, two classes; g = [(1,0),(0,1)], p = [(0.8,0.2),(0.4,0.6)]
  // both class weights are 1, numerator 2*1.4, denominator 3.2 -> loss 1/8
  Tensor<double> probs({1, 2, 1, 2});
  Tensor<double> target({1, 2, 1, 2});
  probs.at(0, 0, 0, 0) = 0.8;
  probs.at(0, 0, 0, 1) = 0.4;
  probs.at(0, 1, 0, 0) = 0.2;
  probs.at(0, 1, 0, 1) = 0.6;
  target.at(0, 0, 0, 0) = 1.0;
  target.at(0, 0, 0, 1) = 0.0;
  target.at(0, 1, 0, 0) = 0.0;
  target.at(0, 1, 0, 1) = 1.0;
  const auto res = weighted_dice_loss(probs, target, 0.0, 0.0);
  REQUIRE(res.loss == Catch::Approx(0.125).margin(1e-15));
}

TEST_CASE("loss agrees with an independent implementation", "[loss]") {
  Rng rng(100);
  for (int trial = 0; trial < 100; ++trial) {
    Tensor<double> probs, target;
    const int b = trial % 3 + 1;
    random_instance(rng, b, 4, 5, 6, probs, target);
    const auto res = weighted_dice_loss(probs, target);
    const double ref = oracle::dice_loss(probs, target, 1e-5, 1e-6);
    REQUIRE(res.loss == Catch::Approx(ref).margin(1e-9));
  }
}

TEST_CASE("loss gradient matches finite differences", "[loss]") {
  Rng rng(200);
  const double h = 1e-6;
  for (int trial = 0; trial < 20; ++trial) {
    Tensor<double> probs, target;
    random_instance(rng, 2, 4, 4, 4, probs, target);
    const auto res = weighted_dice_loss(probs, target);
    double worst = 0;
    for (std::size_t i = 0; i < probs.size(); i += 7) {
      const double keep = probs[i];
      probs[i] = keep + h;
      const double fp = weighted_dice_loss(probs, target).loss;
      probs[i] = keep - h;
      const double fm = weighted_dice_loss(probs, target).loss;
      probs[i] = keep;
      const double fd = (fp - fm) / (2 * h);
      const double an = res.grad[i];
      const double scale = std::max({std::abs(fd), std::abs(an), 1e-12});
      worst = std::max(worst, std::abs(fd - an) / scale);
    }
    REQUIRE(worst < 1e-4);
  }
}

TEST_CASE("perfect prediction scores near zero, disjoint scores near one", "[loss]") {
  Rng rng(300);
  Tensor<double> probs, target;
  random_instance(rng, 1, 4, 8, 8, probs, target);
  const auto perfect = weighted_dice_loss(target, target);
  REQUIRE(perfect.loss < 1e-4);

  // shift every prediction to the wrong class
  Tensor<double> wrong({1, 4, 8, 8});
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x)
      for (int c = 0; c < 4; ++c) {
        const double g = target.at(0, c, y, x);
        wrong.at(0, (c + 1) % 4, y, x) = g;
      }
  const auto worst = weighted_dice_loss(wrong, target);
  REQUIRE(worst.loss > 0.99);
}

TEST_CASE("rare classes carry more weight than common ones", "[loss]") {
  // 15 of 16 pixels are class 0; one pixel is class 1. The same amount of
  // probability mass withheld from the rare pixel must cost more than from a
  // common pixel.
  Tensor<std::uint8_t> cls({1, 4, 4});
  cls.fill(0);
  cls[5] = 1;
  const Tensor<double> target = one_hot<double>(cls, 2);

  auto prediction = [&](std::size_t damaged) {
    Tensor<double> p = target;
    const std::size_t n = 16;
    // move 0.4 of the mass at the damaged pixel to the other class
    const double moved = 0.4;
    for (std::size_t i = 0; i < n; ++i) {
      if (i != damaged) continue;
      const double g0 = p[i];
      p[i] = g0 == 1.0 ? 1.0 - moved : moved;
      p[n + i] = 1.0 - p[i];
    }
    return p;
  };

  const double hurt_rare = weighted_dice_loss(prediction(5), target).loss;
  const double hurt_common = weighted_dice_loss(prediction(6), target).loss;
  REQUIRE(hurt_rare > hurt_common);
}

TEST_CASE("one_hot validates class indices", "[loss]") {
  Tensor<std::uint8_t> cls({1, 2, 2});
  cls.fill(0);
  cls[3] = 3;
  const Tensor<double> t = one_hot<double>(cls, 4);
  REQUIRE(t.dim(1) == 4);
  REQUIRE(t.at(0, 3, 1, 1) == 1.0);
  REQUIRE(t.at(0, 0, 1, 1) == 0.0);
  REQUIRE(t.at(0, 0, 0, 0) == 1.0);
  REQUIRE_THROWS_AS(one_hot<double>(cls, 3), Error);
}
