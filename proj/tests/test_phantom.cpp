#include <catch2/catch_amalgamated.hpp>

#include "resunet/phantom.hpp"

using namespace resunet;

TEST_CASE("phantom generation is a pure function of spec and index", "[phantom]") {
  PhantomSpec spec;
  spec.dims = {32, 32, 32};
  const MultiModalCase a = generate_phantom(spec, 3);
  const MultiModalCase b = generate_phantom(spec, 3);
  REQUIRE(a.case_id == "phantom_003");
  for (int m = 0; m < kNumModalities; ++m)
    REQUIRE(a.modalities[static_cast<std::size_t>(m)] ==
            b.modalities[static_cast<std::size_t>(m)]);
  REQUIRE(*a.labels == *b.labels);

  const MultiModalCase c = generate_phantom(spec, 4);
  REQUIRE_FALSE(*a.labels == *c.labels);
}

TEST_CASE("phantom labels form nested tumor regions", "[phantom]") {
  PhantomSpec spec;
  spec.dims = {48, 48, 48};
  for (int idx = 0; idx < 5; ++idx) {
    const MultiModalCase cse = generate_phantom(spec, idx);
    REQUIRE_NOTHROW(validate_labels(*cse.labels));
    REQUIRE_NOTHROW(cse.check_invariants());

    std::size_t wt = 0;
    for (auto v : cse.labels->data)
      if (v != 0) ++wt;
    REQUIRE(wt > 0);

    // every labeled voxel sits inside the brain (nonzero intensity)
    for (std::size_t i = 0; i < cse.labels->size(); ++i) {
      if (cse.labels->data[i] != 0) {
        for (const auto& m : cse.modalities) REQUIRE(m.data[i] != 0.0f);
      }
    }
  }
}

TEST_CASE("phantom background is exactly zero, brain is clamped positive", "[phantom]") {
  PhantomSpec spec;
  spec.dims = {40, 40, 40};
  const MultiModalCase cse = generate_phantom(spec, 0);
  std::size_t brain = 0;
  for (std::size_t i = 0; i < cse.modalities[0].size(); ++i) {
    bool any = false;
    for (const auto& m : cse.modalities) any = any || m.data[i] != 0.0f;
    if (!any) continue;
    ++brain;
    for (const auto& m : cse.modalities) {
      REQUIRE(m.data[i] >= static_cast<float>(spec.min_intensity));
    }
  }
  const double frac = static_cast<double>(brain) / static_cast<double>(cse.modalities[0].size());
  // ellipsoid at 0.80..0.92 of the half-extent occupies roughly a third of the grid
  REQUIRE(frac > 0.2);
  REQUIRE(frac < 0.5);
}

TEST_CASE("phantom tumor probabilities gate the label hierarchy", "[phantom]") {
  PhantomSpec spec;
  spec.dims = {32, 32, 32};
  SECTION("p_tumor zero means healthy brains") {
    spec.p_tumor = 0.0;
    for (int i = 0; i < 3; ++i) {
      const MultiModalCase cse = generate_phantom(spec, i);
      for (auto v : cse.labels->data) REQUIRE(v == 0);
    }
  }
  SECTION("p_et zero removes enhancing voxels but keeps the core") {
    spec.p_et = 0.0;
    bool saw_core = false;
    for (int i = 0; i < 3; ++i) {
      const MultiModalCase cse = generate_phantom(spec, i);
      for (auto v : cse.labels->data) {
        REQUIRE(v != kLabelEnhancing);
        saw_core = saw_core || v == kLabelNcrNet;
      }
    }
    REQUIRE(saw_core);
  }
}

TEST_CASE("phantom cohort statistics stay in their frozen band", "[phantom]") {
  // frozen reference: mean whole-tumor volume fraction over the first 100
  // default phantoms, and how many of them carry each region
  PhantomSpec spec;
  double frac_sum = 0;
  int with_tc = 0, with_et = 0;
  for (int i = 0; i < 100; ++i) {
    const MultiModalCase cse = generate_phantom(spec, i);
    std::size_t wt = 0;
    bool tc = false, et = false;
    for (auto v : cse.labels->data) {
      if (v != 0) ++wt;
      tc = tc || v == kLabelNcrNet || v == kLabelEnhancing;
      et = et || v == kLabelEnhancing;
    }
    frac_sum += static_cast<double>(wt) / static_cast<double>(cse.labels->size());
    if (tc) ++with_tc;
    if (et) ++with_et;
  }
  REQUIRE(frac_sum / 100.0 == Catch::Approx(0.016190528870).epsilon(1e-6));
  REQUIRE(with_tc == 100);
  REQUIRE(with_et == 89);
}
