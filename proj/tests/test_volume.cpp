#include <catch2/catch_amalgamated.hpp>

#include "resunet/reslice.hpp"
#include "resunet/rng.hpp"
#include "resunet/volume.hpp"

using namespace resunet;

TEST_CASE("grid indexing is row-major with x fastest", "[volume]") {
  Grid3<int> g({2, 3, 4});
  REQUIRE(g.size() == 24);
  REQUIRE(g.index(0, 0, 1) == 1);
  REQUIRE(g.index(0, 1, 0) == 4);
  REQUIRE(g.index(1, 0, 0) == 12);
  g.at(1, 2, 3) = 7;
  REQUIRE(g.data[23] == 7);
}

TEST_CASE("label and class index maps invert each other", "[volume]") {
  for (int i = 0; i < 4; ++i) REQUIRE(ClassIndexMap::index_of(ClassIndexMap::label_of(i)) == i);
  REQUIRE(ClassIndexMap::index_of(4) == 3);
  REQUIRE(ClassIndexMap::label_of(3) == 4);
  REQUIRE_THROWS_AS(ClassIndexMap::index_of(3), Error);
  REQUIRE_THROWS_AS(ClassIndexMap::label_of(4), Error);
  REQUIRE(is_valid_label(0));
  REQUIRE(is_valid_label(4));
  REQUIRE_FALSE(is_valid_label(3));
  REQUIRE_FALSE(is_valid_label(5));
}

TEST_CASE("validate_labels reports the offending voxel", "[volume]") {
  LabelVolume v({2, 2, 2}, 0);
  REQUIRE_NOTHROW(validate_labels(v));
  v.at(1, 0, 1) = 3;
  try {
    validate_labels(v);
    FAIL("expected InvalidLabel");
  } catch (const Error& e) {
    REQUIRE(e.kind() == ErrorKind::InvalidLabel);
    REQUIRE(std::string(e.what()).find("(1,0,1)") != std::string::npos);
  }
}

TEST_CASE("region masks nest: et within tc within wt", "[volume]") {
  LabelVolume v({1, 2, 4}, 0);
  v.data = {0, 1, 2, 4, 4, 2, 1, 0};
  const RegionMasks m = derive_region_masks(v);
  const std::vector<std::uint8_t> wt = {0, 1, 1, 1, 1, 1, 1, 0};
  const std::vector<std::uint8_t> tc = {0, 1, 0, 1, 1, 0, 1, 0};
  const std::vector<std::uint8_t> et = {0, 0, 0, 1, 1, 0, 0, 0};
  REQUIRE(m.wt.data == wt);
  REQUIRE(m.tc.data == tc);
  REQUIRE(m.et.data == et);
  for (std::size_t i = 0; i < v.size(); ++i) {
    REQUIRE(m.et.data[i] <= m.tc.data[i]);
    REQUIRE(m.tc.data[i] <= m.wt.data[i]);
  }
}

TEST_CASE("label mapping round-trips through class indices", "[volume]") {
  LabelVolume v({1, 1, 4});
  v.data = {0, 1, 2, 4};
  const ClassIndexVolume idx = map_labels_forward(v);
  const std::vector<std::uint8_t> expect = {0, 1, 2, 3};
  REQUIRE(idx.data == expect);
  REQUIRE(map_labels_backward(idx) == v);
}

TEST_CASE("case invariants reject inconsistent modalities", "[volume]") {
  MultiModalCase cse;
  cse.case_id = "c0";
  for (auto& m : cse.modalities) m = ScalarVolume({2, 2, 2}, 1.0f);
  REQUIRE_NOTHROW(cse.check_invariants());
  cse.labels = LabelVolume({2, 2, 3}, 0);
  REQUIRE_THROWS_AS(cse.check_invariants(), Error);
  cse.labels = LabelVolume({2, 2, 2}, 0);
  REQUIRE_NOTHROW(cse.check_invariants());
  cse.modalities[2] = ScalarVolume({2, 3, 2}, 0.0f);
  REQUIRE_THROWS_AS(cse.check_invariants(), Error);
}

TEST_CASE("views map voxels onto the expected slice planes", "[volume]") {
  REQUIRE(view_axis(View::Axial) == 0);
  REQUIRE(view_axis(View::Sagittal) == 1);
  REQUIRE(view_axis(View::Coronal) == 2);
  REQUIRE(view_from_string("axial") == View::Axial);
  REQUIRE_THROWS_AS(view_from_string("oblique"), Error);

  ScalarVolume v({3, 4, 5});
  for (std::size_t i = 0; i < v.size(); ++i) v.data[i] = static_cast<float>(i);
  for (const View view : kAllViews) {
    const auto [rows, cols] = slice_shape(v.dims, view);
    const int n = slice_count(v.dims, view);
    REQUIRE(static_cast<std::size_t>(rows) * cols * n == v.size());
  }
  // sagittal slice k fixes axis 1
  const auto s = reslice(v, View::Sagittal);
  REQUIRE(s.size() == 4);
  REQUIRE(s[2].dim(0) == 3);
  REQUIRE(s[2].dim(1) == 5);
  REQUIRE(s[2][1 * 5 + 3] == v.at(1, 2, 3));
}

TEST_CASE("reslice and reassemble are exact inverses on all views", "[volume]") {
  Rng rng(99);
  ScalarVolume v({6, 5, 4});
  for (auto& x : v.data) x = static_cast<float>(rng.uniform(-2.0, 2.0));
  for (const View view : kAllViews) {
    const ScalarVolume back = reassemble(reslice(v, view), view, v.dims);
    REQUIRE(back == v);
  }
}
