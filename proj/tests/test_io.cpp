#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "resunet/case_io.hpp"
#include "resunet/checkpoint.hpp"
#include "resunet/fixture.hpp"
#include "resunet/nifti.hpp"
#include "resunet/rng.hpp"

using namespace resunet;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const char* tag) {
  const fs::path p = fs::temp_directory_path() / (std::string("resunet_io_") + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

ScalarVolume random_volume(std::array<int, 3> dims, std::uint64_t seed) {
  Rng rng(seed);
  ScalarVolume v(dims);
  for (auto& x : v.data) x = static_cast<float>(rng.uniform(-3.0, 3.0));
  return v;
}

}  // namespace

TEST_CASE("nifti float volumes round-trip, plain and gzipped", "[io]") {
  const fs::path dir = temp_dir("nifti");
  const ScalarVolume v = random_volume({5, 6, 7}, 42);
  for (const char* name : {"vol.nii", "vol.nii.gz"}) {
    const std::string path = (dir / name).string();
    write_nifti_volume(path, v, {2.0f, 1.5f, 1.0f});
    NiftiInfo info;
    const ScalarVolume back = read_nifti_volume(path, &info);
    REQUIRE(back == v);
    REQUIRE(info.dims == v.dims);
    REQUIRE(info.spacing[0] == Catch::Approx(2.0));
    REQUIRE(info.spacing[1] == Catch::Approx(1.5));
    REQUIRE(info.spacing[2] == Catch::Approx(1.0));
  }
}

TEST_CASE("nifti labels round-trip and inherit a reference header", "[io]") {
  const fs::path dir = temp_dir("labels");
  const ScalarVolume anat = random_volume({4, 5, 6}, 1);
  const std::string anat_path = (dir / "anat.nii.gz").string();
  write_nifti_volume(anat_path, anat, {0.5f, 2.0f, 3.0f});
  NiftiInfo ref;
  read_nifti_volume(anat_path, &ref);

  LabelVolume lab({4, 5, 6}, 0);
  Rng rng(7);
  for (auto& x : lab.data) x = ClassIndexMap::kLabels[static_cast<std::size_t>(rng.uniform_int(0, 3))];
  const std::string lab_path = (dir / "seg.nii.gz").string();
  write_nifti_labels(lab_path, lab, &ref);

  NiftiInfo info;
  const LabelVolume back = read_nifti_labels(lab_path, &info);
  REQUIRE(back == lab);
  REQUIRE(info.spacing[0] == Catch::Approx(0.5));
  REQUIRE(info.spacing[1] == Catch::Approx(2.0));
  REQUIRE(info.spacing[2] == Catch::Approx(3.0));
}

TEST_CASE("nifti reader rejects junk", "[io]") {
  const fs::path dir = temp_dir("junk");
  const std::string path = (dir / "bad.nii").string();
  {
    std::ofstream os(path, std::ios::binary);
    os << "this is not a nifti file, not even close, but it is long enough "
          "to cover a full 348-byte header if padded a little more........."
          "................................................................"
          "................................................................"
          "................................................................"
          "................................................................";
  }
  REQUIRE_THROWS_AS(read_nifti_volume(path), Error);
  REQUIRE_THROWS_AS(read_nifti_volume((dir / "missing.nii").string()), Error);

  // non-integral data cannot be labels
  ScalarVolume v({2, 2, 2}, 0.5f);
  const std::string vp = (dir / "frac.nii").string();
  write_nifti_volume(vp, v);
  REQUIRE_THROWS_AS(read_nifti_labels(vp), Error);
}

TEST_CASE("fixtures round-trip float and uint8 grids", "[io]") {
  const fs::path dir = temp_dir("fixture");
  const ScalarVolume v = random_volume({3, 4, 5}, 5);
  write_fixture((dir / "vol").string(), v, {1.0, 2.0, 4.0});
  std::array<double, 3> spacing{};
  const ScalarVolume back = read_fixture<float>((dir / "vol").string(), &spacing);
  REQUIRE(back == v);
  REQUIRE(spacing == std::array<double, 3>{1.0, 2.0, 4.0});

  LabelVolume lab({2, 2, 2}, 4);
  write_fixture((dir / "lab").string(), lab);
  REQUIRE(read_fixture<std::uint8_t>((dir / "lab").string()) == lab);
}

TEST_CASE("patch stores preserve images, masks and metadata", "[io]") {
  const fs::path dir = temp_dir("patches");
  const int P = 8;
  Rng rng(11);
  std::vector<Tensor<float>> images;
  std::vector<Tensor<std::uint8_t>> masks;
  {
    PatchStoreWriter writer(dir.string(), P, 4);
    for (int i = 0; i < 5; ++i) {
      Tensor<float> img({4, P, P});
      for (std::size_t k = 0; k < img.size(); ++k) img[k] = static_cast<float>(rng.uniform(-1, 1));
      Tensor<std::uint8_t> msk({P, P});
      for (std::size_t k = 0; k < msk.size(); ++k)
        msk[k] = ClassIndexMap::kLabels[static_cast<std::size_t>(rng.uniform_int(0, 3))];
      writer.add(img, msk, {"case_" + std::to_string(i), View::Axial, i, i % 2 ? "val" : "train"});
      images.push_back(std::move(img));
      masks.push_back(std::move(msk));
    }
    writer.finalize();
  }
  PatchStore store(dir.string());
  REQUIRE(store.size() == 5);
  REQUIRE(store.patch_size() == P);
  REQUIRE(store.channels() == 4);
  for (std::size_t i = 0; i < store.size(); ++i) {
    Tensor<float> img;
    Tensor<std::uint8_t> msk;
    store.read(i, img, msk);
    REQUIRE(img.same_shape(images[i]));
    REQUIRE(std::equal(img.data(), img.data() + img.size(), images[i].data()));
    REQUIRE(std::equal(msk.data(), msk.data() + msk.size(), masks[i].data()));
    REQUIRE(store.meta(i).case_id == "case_" + std::to_string(i));
    REQUIRE(store.meta(i).split == (i % 2 ? "val" : "train"));
  }
}

TEST_CASE("checkpoints restore weights bit for bit", "[io]") {
  const fs::path dir = temp_dir("ckpt");
  NetworkConfig cfg;
  cfg.base_filters = 4;
  cfg.depth = 2;
  ResUNet<float> net;
  net.build(cfg);
  Rng rng(3);
  net.init(rng);
  const std::string path = (dir / "m.ckpt").string();
  save_checkpoint(path, net, "axial");

  ResUNet<float> other;
  const CheckpointMeta meta = load_checkpoint(path, other);
  REQUIRE(meta.view_tag == "axial");
  REQUIRE(meta.config == cfg);

  auto a = net.parameters();
  auto b = other.parameters();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    REQUIRE(a[i].name == b[i].name);
    REQUIRE(a[i].value->size() == b[i].value->size());
    REQUIRE(std::equal(a[i].value->data(), a[i].value->data() + a[i].value->size(),
                       b[i].value->data()));
  }

  const CheckpointMeta peeked = peek_checkpoint(path);
  REQUIRE(peeked.view_tag == "axial");
  REQUIRE(peeked.config == cfg);

  // flipping a magic byte must be caught
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.put('X');
  }
  ResUNet<float> victim;
  REQUIRE_THROWS_AS(load_checkpoint(path, victim), Error);
}

TEST_CASE("case io writes and rediscovers a cohort", "[io]") {
  const fs::path dir = temp_dir("cohort");
  MultiModalCase cse;
  cse.case_id = "case_a";
  cse.spacing = {1.0, 1.0, 1.0};
  for (auto& m : cse.modalities) m = random_volume({4, 4, 4}, 21);
  LabelVolume lab({4, 4, 4}, 0);
  lab.at(2, 2, 2) = 4;
  lab.at(2, 2, 1) = 1;
  lab.at(2, 1, 1) = 2;
  cse.labels = lab;
  write_case(dir.string(), cse);

  const auto found = discover_cases(dir.string());
  REQUIRE(found.size() == 1);
  REQUIRE(found[0].case_id == "case_a");
  const MultiModalCase back = read_case(found[0]);
  REQUIRE(back.case_id == cse.case_id);
  for (int m = 0; m < kNumModalities; ++m)
    REQUIRE(back.modalities[static_cast<std::size_t>(m)] ==
            cse.modalities[static_cast<std::size_t>(m)]);
  REQUIRE(back.labels.has_value());
  REQUIRE(*back.labels == lab);

  // a cohort with a missing modality is rejected
  fs::remove(dir / "case_a" / "case_a_t2.nii.gz");
  REQUIRE_THROWS_AS(discover_cases(dir.string()), Error);
  REQUIRE_THROWS_AS(discover_cases((dir / "empty").string()), Error);
}
