#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "resunet/augment.hpp"
#include "resunet/optimizer.hpp"
#include "resunet/phantom.hpp"
#include "resunet/preprocess.hpp"
#include "resunet/train.hpp"

using namespace resunet;

namespace {

// Picks training patches richest in tumor core first. A class that is absent
// from every patch gets the maximal inverse-volume weight and pins the loss
// near one, which is correct but useless for a learning smoke test.
TrainData phantom_train_data(int n_cases, int patch, int max_train, int max_val) {
  PhantomSpec spec;
  spec.dims = {patch, patch, patch};
  TrainData data;
  data.patch_size = patch;
  data.channels = kNumModalities;
  for (int i = 0; i < n_cases; ++i) {
    MultiModalCase cse = generate_phantom(spec, i);
    normalize_case(cse);
    for (auto& p : extract_patches(cse, View::Axial, patch)) {
      data.images.push_back(std::move(p.image));
      data.masks.push_back(std::move(p.mask));
    }
  }
  std::vector<std::size_t> order(data.images.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  auto core_voxels = [&](std::size_t j) {
    int n = 0;
    for (std::size_t k = 0; k < data.masks[j].size(); ++k)
      if (data.masks[j][k] == kLabelNcrNet || data.masks[j][k] == kLabelEnhancing) ++n;
    return n;
  };
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return core_voxels(a) > core_voxels(b); });
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (data.train_idx.size() < static_cast<std::size_t>(max_train))
      data.train_idx.push_back(order[i]);
    else if (data.val_idx.size() < static_cast<std::size_t>(max_val))
      data.val_idx.push_back(order[i]);
  }
  return data;
}

}  // namespace

TEST_CASE("adam takes the textbook first step", "[training]") {
  Tensor<double> w({2});
  Tensor<double> g({2});
  w[0] = 1.0;
  w[1] = -2.0;
  std::vector<ParamRef<double>> params{{"w", &w, &g, false}};
  Adam<double> opt(params, 0.1);
  g[0] = 0.5;
  g[1] = -3.0;
  opt.step();
  // bias-corrected first step moves by lr * g / (|g| + eps), i.e. lr * sign(g)
  REQUIRE(w[0] == Catch::Approx(1.0 - 0.1).epsilon(1e-6));
  REQUIRE(w[1] == Catch::Approx(-2.0 + 0.1).epsilon(1e-6));
}

TEST_CASE("weight decay touches conv kernels only", "[training]") {
  Tensor<double> kernel({1});
  Tensor<double> gk({1});
  Tensor<double> bias({1});
  Tensor<double> gb({1});
  kernel[0] = 10.0;
  bias[0] = 10.0;
  std::vector<ParamRef<double>> params{{"k", &kernel, &gk, true}, {"b", &bias, &gb, false}};
  Adam<double> opt(params, 0.01, 0.5);
  // zero raw gradients: the only signal is the decay term 2 * l2 * w
  opt.step();
  REQUIRE(kernel[0] < 10.0);
  REQUIRE(bias[0] == 10.0);
}

TEST_CASE("rotation by zero degrees is the identity, flips are involutions", "[training]") {
  Rng rng(4);
  Tensor<float> img({2, 6, 6});
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = static_cast<float>(rng.uniform(-1, 1));
  Tensor<std::uint8_t> msk({6, 6});
  for (std::size_t i = 0; i < msk.size(); ++i)
    msk[i] = ClassIndexMap::kLabels[static_cast<std::size_t>(rng.uniform_int(0, 3))];
  const Tensor<float> img0 = img;
  const Tensor<std::uint8_t> msk0 = msk;

  rotate_patch(img, msk, 0.0);
  REQUIRE(std::equal(img.data(), img.data() + img.size(), img0.data()));
  REQUIRE(std::equal(msk.data(), msk.data() + msk.size(), msk0.data()));

  flip_horizontal(img, msk);
  flip_horizontal(img, msk);
  flip_vertical(img, msk);
  flip_vertical(img, msk);
  REQUIRE(std::equal(img.data(), img.data() + img.size(), img0.data()));
  REQUIRE(std::equal(msk.data(), msk.data() + msk.size(), msk0.data()));
}

TEST_CASE("rotation by 180 degrees flips both axes", "[training]") {
  Tensor<float> img({1, 4, 4});
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = static_cast<float>(i);
  Tensor<std::uint8_t> msk({4, 4});
  for (std::size_t i = 0; i < msk.size(); ++i) msk[i] = static_cast<std::uint8_t>(i % 2);
  Tensor<float> ref_img = img;
  Tensor<std::uint8_t> ref_msk = msk;
  flip_horizontal(ref_img, ref_msk);
  flip_vertical(ref_img, ref_msk);

  rotate_patch(img, msk, 180.0);
  for (std::size_t i = 0; i < img.size(); ++i)
    REQUIRE(img[i] == Catch::Approx(ref_img[i]).margin(1e-4));
  REQUIRE(std::equal(msk.data(), msk.data() + msk.size(), ref_msk.data()));
}

TEST_CASE("augmentation is reproducible and consumes a fixed draw count", "[training]") {
  Rng base(42);
  Tensor<float> img({1, 8, 8});
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = static_cast<float>(i);
  Tensor<std::uint8_t> msk({8, 8});
  msk.fill(0);

  Tensor<float> a = img;
  Tensor<std::uint8_t> am = msk;
  Rng r1 = Rng::derive(42, {streams::kAugment, 0, 0});
  augment_patch(a, am, r1);

  Tensor<float> b = img;
  Tensor<std::uint8_t> bm = msk;
  Rng r2 = Rng::derive(42, {streams::kAugment, 0, 0});
  augment_patch(b, bm, r2);
  REQUIRE(std::equal(a.data(), a.data() + a.size(), b.data()));

  // exactly three draws regardless of which transforms fired, so later
  // patches in the stream are unaffected by earlier outcomes
  Rng probe = Rng::derive(42, {streams::kAugment, 0, 0});
  probe.uniform();
  probe.uniform();
  probe.uniform();
  REQUIRE(r1.next_u64() == probe.next_u64());
}

TEST_CASE("a short run drives the training loss down", "[training]") {
  TrainData data = phantom_train_data(2, 32, 4, 2);
  REQUIRE(data.train_idx.size() == 4);

  TrainConfig cfg;
  cfg.net = {4, 4, 8, 2};
  cfg.epochs = 100;
  cfg.batch_size = 4;
  cfg.learning_rate = 1e-3;
  cfg.augment = false;
  cfg.seed = 7;

  ResUNet<float> net;
  const TrainHistory hist = train_model(net, data, cfg);
  REQUIRE(hist.epochs.size() == 100);
  REQUIRE(hist.epochs.front().val_loss.has_value());
  const double first = hist.epochs.front().train_loss;
  const double last = hist.epochs.back().train_loss;
  REQUIRE(last < 0.5 * first);
  REQUIRE(last < 0.1);
  for (const auto& e : hist.epochs) {
    REQUIRE(std::isfinite(e.train_loss));
    REQUIRE(std::isfinite(*e.val_loss));
  }
}

TEST_CASE("training is bit-reproducible for a fixed seed", "[training]") {
  TrainData data = phantom_train_data(1, 32, 3, 1);
  TrainConfig cfg;
  cfg.net = {4, 4, 2, 1};
  cfg.epochs = 3;
  cfg.batch_size = 2;
  cfg.learning_rate = 1e-3;
  cfg.seed = 11;

  ResUNet<float> a, b;
  const TrainHistory ha = train_model(a, data, cfg);
  const TrainHistory hb = train_model(b, data, cfg);
  for (std::size_t e = 0; e < ha.epochs.size(); ++e) {
    REQUIRE(ha.epochs[e].train_loss == hb.epochs[e].train_loss);
    REQUIRE(*ha.epochs[e].val_loss == *hb.epochs[e].val_loss);
  }
  const auto pa = a.parameters(), pb = b.parameters();
  for (std::size_t i = 0; i < pa.size(); ++i)
    REQUIRE(std::equal(pa[i].value->data(), pa[i].value->data() + pa[i].value->size(),
                       pb[i].value->data()));
}

TEST_CASE("history serializes with nulls for missing validation", "[training]") {
  TrainHistory h;
  h.epochs.push_back({0, 0.5, 0.6});
  h.epochs.push_back({1, 0.4, std::nullopt});
  const auto j = history_to_json(h);
  REQUIRE(j.size() == 2);
  REQUIRE(j[0]["val_loss"].get<double>() == Catch::Approx(0.6));
  REQUIRE(j[1]["val_loss"].is_null());
  REQUIRE(j[1]["train_loss"].get<double>() == Catch::Approx(0.4));
}
