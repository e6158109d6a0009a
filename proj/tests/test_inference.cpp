#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "resunet/checkpoint.hpp"
#include "resunet/inference.hpp"
#include "resunet/phantom.hpp"
#include "resunet/preprocess.hpp"
#include "resunet/rng.hpp"

using namespace resunet;
namespace fs = std::filesystem;

namespace {

MultiModalCase small_case(int d, int index = 0) {
  PhantomSpec spec;
  spec.dims = {d, d, d};
  MultiModalCase cse = generate_phantom(spec, index);
  normalize_case(cse);
  return cse;
}

ResUNet<float> small_net(std::uint64_t seed) {
  ResUNet<float> net;
  net.build({4, 4, 2, 2});
  Rng rng(seed);
  net.init(rng);
  return net;
}

fs::path fresh_dir(const char* tag) {
  const fs::path p = fs::temp_directory_path() / (std::string("resunet_inf_") + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("padding to a multiple and cropping back is lossless", "[inference]") {
  Rng rng(3);
  Tensor<float> slice({4, 23, 17});
  for (std::size_t i = 0; i < slice.size(); ++i)
    slice[i] = static_cast<float>(rng.uniform(-2, 2));
  PadInfo info;
  const Tensor<float> padded = pad_to_multiple(slice, 8, info);
  REQUIRE(padded.dim(1) == 24);
  REQUIRE(padded.dim(2) == 24);
  const Tensor<float> back = crop_from_pad(padded, info);
  REQUIRE(back.same_shape(slice));
  REQUIRE(std::equal(back.data(), back.data() + back.size(), slice.data()));

  // everything outside the copied window must be zero; the smaller pad half
  // sits on the top/left, so 23 -> 24 pads only the bottom row
  REQUIRE(info.top == 0);
  REQUIRE(info.left == 3);
  for (int c = 0; c < 4; ++c)
    for (int r = 0; r < 24; ++r)
      for (int x = 0; x < 24; ++x) {
        const bool inside = r >= info.top && r < info.top + 23 && x >= info.left &&
                            x < info.left + 17;
        if (!inside)
          REQUIRE(padded[(static_cast<std::size_t>(c) * 24 + r) * 24 + x] == 0.0f);
      }

  // an exact multiple passes through untouched
  Tensor<float> exact({4, 16, 16});
  exact.fill(1.5f);
  PadInfo none;
  const Tensor<float> same = pad_to_multiple(exact, 8, none);
  REQUIRE(same.same_shape(exact));
  REQUIRE(none.top == 0);
  REQUIRE(none.left == 0);
}

TEST_CASE("probability averaging is an exact mean", "[inference]") {
  ProbabilityVolume a({1, 1, 2}, 3);
  ProbabilityVolume b({1, 1, 2}, 3);
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    a.data[i] = static_cast<float>(i) * 0.1f;
    b.data[i] = 1.0f - static_cast<float>(i) * 0.1f;
  }
  const ProbabilityVolume m = average_probabilities({a, b});
  for (std::size_t i = 0; i < m.data.size(); ++i)
    REQUIRE(m.data[i] == Catch::Approx(0.5 * (a.data[i] + b.data[i])).margin(1e-7));
  REQUIRE_THROWS_AS(average_probabilities({}), Error);
}

TEST_CASE("argmax breaks ties toward the lower class index", "[inference]") {
  ProbabilityVolume p({1, 1, 2}, 3);
  float* v0 = p.voxel(0, 0, 0);
  v0[0] = 0.2f;
  v0[1] = 0.5f;
  v0[2] = 0.3f;
  float* v1 = p.voxel(0, 0, 1);
  v1[0] = 0.4f;
  v1[1] = 0.2f;
  v1[2] = 0.4f;
  const ClassIndexVolume idx = argmax_classes(p);
  REQUIRE(idx.at(0, 0, 0) == 1);
  REQUIRE(idx.at(0, 0, 1) == 0);
}

TEST_CASE("predicted volumes cover the case grid with valid labels", "[inference]") {
  const MultiModalCase cse = small_case(20);
  ResUNet<float> net = small_net(21);
  for (const View view : kAllViews) {
    const ProbabilityVolume probs = predict_volume(net, cse, view, 4);
    REQUIRE(probs.dims == cse.dims());
    REQUIRE(probs.n_classes == 4);
    const LabelVolume labels = map_labels_backward(argmax_classes(probs));
    REQUIRE(labels.dims == cse.dims());
    REQUIRE_NOTHROW(validate_labels(labels));
    // probabilities stay normalized after reassembly
    const float* v = probs.voxel(3, 5, 7);
    double s = 0;
    for (int c = 0; c < 4; ++c) s += v[c];
    REQUIRE(s == Catch::Approx(1.0).margin(1e-4));
  }
}

TEST_CASE("prediction is exactly batch-size invariant", "[inference]") {
  const MultiModalCase cse = small_case(16);
  ResUNet<float> net = small_net(5);
  const ProbabilityVolume a = predict_volume(net, cse, View::Axial, 1);
  const ProbabilityVolume b = predict_volume(net, cse, View::Axial, 7);
  REQUIRE(a.data == b.data);
}

TEST_CASE("an ensemble of identical models reproduces the single model", "[inference]") {
  const fs::path dir = fresh_dir("ident");
  ResUNet<float> net = small_net(33);
  for (const char* name : {"a.ckpt", "b.ckpt", "c.ckpt"})
    save_checkpoint((dir / name).string(), net, "axial");

  const MultiModalCase cse = small_case(16);
  ResUNet<float> single;
  load_checkpoint((dir / "a.ckpt").string(), single);
  const LabelVolume one = map_labels_backward(argmax_classes(predict_volume(single, cse, View::Axial, 4)));

  ModelSet set = ModelSet::load_files({(dir / "a.ckpt").string(), (dir / "b.ckpt").string(),
                                       (dir / "c.ckpt").string()});
  const LabelVolume fused = predict_ensemble(set, cse, 4);
  REQUIRE(fused == one);
}

TEST_CASE("model sets enforce the view regime", "[inference]") {
  const fs::path dir = fresh_dir("regime");
  ResUNet<float> net = small_net(1);
  save_checkpoint((dir / "axial.ckpt").string(), net, "axial");
  save_checkpoint((dir / "axial2.ckpt").string(), net, "axial");
  save_checkpoint((dir / "sagittal.ckpt").string(), net, "sagittal");
  save_checkpoint((dir / "coronal.ckpt").string(), net, "coronal");
  save_checkpoint((dir / "mixed.ckpt").string(), net, "mixed");

  // three per-view models are fine
  REQUIRE_NOTHROW(ModelSet::load_files({(dir / "axial.ckpt").string(),
                                        (dir / "sagittal.ckpt").string(),
                                        (dir / "coronal.ckpt").string()}));
  // so are several models of the same view (a seed ensemble)
  REQUIRE_NOTHROW(ModelSet::load_files({(dir / "axial.ckpt").string(),
                                        (dir / "axial2.ckpt").string()}));
  // a single mixed model is fine, but it cannot be combined
  REQUIRE_NOTHROW(ModelSet::load_files({(dir / "mixed.ckpt").string()}));
  REQUIRE_THROWS_AS(ModelSet::load_files({(dir / "axial.ckpt").string(),
                                          (dir / "mixed.ckpt").string()}),
                    Error);
}

TEST_CASE("a mixed model predicts along all three axes", "[inference]") {
  const fs::path dir = fresh_dir("mixed");
  ResUNet<float> net = small_net(9);
  save_checkpoint((dir / "mixed.ckpt").string(), net, "mixed");
  ModelSet set = ModelSet::load_dir(dir.string());
  REQUIRE(set.models.size() == 1);

  const MultiModalCase cse = small_case(16);
  ProbabilityVolume fused_probs({0, 0, 0}, 0);
  const LabelVolume fused = predict_ensemble(set, cse, 4, &fused_probs);
  REQUIRE(fused.dims == cse.dims());

  // reference: mean of the three per-view predictions of the same weights
  std::vector<ProbabilityVolume> per_view;
  for (const View v : kAllViews) per_view.push_back(predict_volume(net, cse, v, 4));
  const ProbabilityVolume mean = average_probabilities(per_view);
  REQUIRE(fused_probs.data == mean.data);
}
