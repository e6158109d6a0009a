#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "resunet/errors.hpp"
#include "resunet/volume.hpp"

namespace resunet {

struct BinaryScores {
  double dice = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;
  double hd95 = 0.0;
};

namespace detail {

/// 1D lower-envelope squared distance transform (Felzenszwalb-Huttenlocher)
/// with anisotropic spacing: d(x) = min_q f(q) + s2*(x-q)^2.
inline void dt_1d(const double* f, double* d, int n, double s2, int* v, double* z) {
  int k = 0;
  v[0] = 0;
  z[0] = -std::numeric_limits<double>::infinity();
  z[1] = std::numeric_limits<double>::infinity();
  for (int q = 1; q < n; ++q) {
    if (f[q] == std::numeric_limits<double>::infinity()) continue;
    double s;
    while (true) {
      const int p = v[k];
      if (f[p] == std::numeric_limits<double>::infinity()) {
        // empty envelope so far
        --k;
        if (k < 0) break;
        continue;
      }
      s = (f[q] + s2 * q * q - (f[p] + s2 * p * p)) / (2.0 * s2 * (q - p));
      if (s > z[k]) break;
      --k;
      if (k < 0) break;
    }
    ++k;
    v[k] = q;
    z[k] = (k == 0) ? -std::numeric_limits<double>::infinity() : s;
    z[k + 1] = std::numeric_limits<double>::infinity();
  }
  if (f[v[0]] == std::numeric_limits<double>::infinity()) {
    for (int q = 0; q < n; ++q) d[q] = std::numeric_limits<double>::infinity();
    return;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const int p = v[k];
    d[q] = f[p] + s2 * (q - p) * (q - p);
  }
}

/// Exact squared Euclidean distance (mm^2) from every voxel to the nearest
/// set voxel of the indicator; infinity when the indicator is empty. Three
/// separable passes.
inline std::vector<double> squared_edt(const BinaryMask& ind,
                                       const std::array<double, 3>& spacing) {
  const auto [D, H, W] = ind.dims;
  const std::size_t total = ind.size();
  std::vector<double> dist(total);
  for (std::size_t i = 0; i < total; ++i)
    dist[i] = ind.data[i] ? 0.0 : std::numeric_limits<double>::infinity();

  const int maxn = std::max({D, H, W});
  std::vector<double> f(static_cast<std::size_t>(maxn)), dbuf(static_cast<std::size_t>(maxn)),
      z(static_cast<std::size_t>(maxn) + 1);
  std::vector<int> v(static_cast<std::size_t>(maxn));

  // along x
  const double sx2 = spacing[2] * spacing[2];
  for (int zz = 0; zz < D; ++zz)
    for (int y = 0; y < H; ++y) {
      double* row = dist.data() + (static_cast<std::size_t>(zz) * H + y) * W;
      dt_1d(row, dbuf.data(), W, sx2, v.data(), z.data());
      std::copy_n(dbuf.data(), W, row);
    }
  // along y
  const double sy2 = spacing[1] * spacing[1];
  for (int zz = 0; zz < D; ++zz)
    for (int x = 0; x < W; ++x) {
      for (int y = 0; y < H; ++y)
        f[static_cast<std::size_t>(y)] = dist[(static_cast<std::size_t>(zz) * H + y) * W + x];
      dt_1d(f.data(), dbuf.data(), H, sy2, v.data(), z.data());
      for (int y = 0; y < H; ++y)
        dist[(static_cast<std::size_t>(zz) * H + y) * W + x] = dbuf[static_cast<std::size_t>(y)];
    }
  // along z
  const double sz2 = spacing[0] * spacing[0];
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      for (int zz = 0; zz < D; ++zz)
        f[static_cast<std::size_t>(zz)] = dist[(static_cast<std::size_t>(zz) * H + y) * W + x];
      dt_1d(f.data(), dbuf.data(), D, sz2, v.data(), z.data());
      for (int zz = 0; zz < D; ++zz)
        dist[(static_cast<std::size_t>(zz) * H + y) * W + x] = dbuf[static_cast<std::size_t>(zz)];
    }
  return dist;
}

/// Surface voxels: set voxels with an unset 6-neighbor or lying on the grid
/// boundary.
inline BinaryMask surface_of(const BinaryMask& mask) {
  const auto [D, H, W] = mask.dims;
  BinaryMask surf(mask.dims);
  for (int zz = 0; zz < D; ++zz)
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) {
        if (!mask.at(zz, y, x)) continue;
        const bool boundary = zz == 0 || zz == D - 1 || y == 0 || y == H - 1 || x == 0 ||
                              x == W - 1;
        if (boundary || !mask.at(zz - 1, y, x) || !mask.at(zz + 1, y, x) ||
            !mask.at(zz, y - 1, x) || !mask.at(zz, y + 1, x) || !mask.at(zz, y, x - 1) ||
            !mask.at(zz, y, x + 1)) {
          surf.at(zz, y, x) = 1;
        }
      }
  return surf;
}

/// 95th percentile by linear interpolation at rank h = 0.95*(n-1) of the
/// sorted values.
inline double percentile95(std::vector<double>& values) {
  std::sort(values.begin(), values.end());
  const double h = 0.95 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = static_cast<std::size_t>(std::ceil(h));
  if (lo == hi) return values[lo];
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

}  // namespace detail

inline double grid_diagonal(std::array<int, 3> dims, const std::array<double, 3>& spacing) {
  const double a = dims[0] * spacing[0];
  const double b = dims[1] * spacing[1];
  const double c = dims[2] * spacing[2];
  return std::sqrt(a * a + b * b + c * c);
}

/// Dice over binary masks; two empty masks agree perfectly.
inline double dice_coefficient(const BinaryMask& pred, const BinaryMask& truth) {
  require(pred.same_dims(truth), ErrorKind::DimMismatch, "mask dims disagree");
  std::size_t inter = 0, np = 0, nt = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred.data[i] != 0, t = truth.data[i] != 0;
    inter += static_cast<std::size_t>(p && t);
    np += static_cast<std::size_t>(p);
    nt += static_cast<std::size_t>(t);
  }
  if (np + nt == 0) return 1.0;
  return 2.0 * static_cast<double>(inter) / static_cast<double>(np + nt);
}

/// Symmetric 95th-percentile Hausdorff distance between mask surfaces, in
/// physical units. Conventions: both masks empty -> 0; exactly one empty ->
/// the physical grid diagonal.
inline double hausdorff95(const BinaryMask& pred, const BinaryMask& truth,
                          const std::array<double, 3>& spacing = {1, 1, 1}) {
  require(pred.same_dims(truth), ErrorKind::DimMismatch, "mask dims disagree");
  bool pe = true, te = true;
  for (std::size_t i = 0; i < pred.size() && (pe || te); ++i) {
    if (pred.data[i]) pe = false;
    if (truth.data[i]) te = false;
  }
  if (pe && te) return 0.0;
  if (pe || te) return grid_diagonal(pred.dims, spacing);

  const BinaryMask sp = detail::surface_of(pred);
  const BinaryMask st = detail::surface_of(truth);
  const std::vector<double> dt_to_truth = detail::squared_edt(st, spacing);
  const std::vector<double> dt_to_pred = detail::squared_edt(sp, spacing);

  std::vector<double> from_pred, from_truth;
  for (std::size_t i = 0; i < sp.size(); ++i) {
    if (sp.data[i]) from_pred.push_back(std::sqrt(dt_to_truth[i]));
    if (st.data[i]) from_truth.push_back(std::sqrt(dt_to_pred[i]));
  }
  return std::max(detail::percentile95(from_pred), detail::percentile95(from_truth));
}

/// Dice, sensitivity, specificity and HD95 for one region. Degenerate cases
/// follow the usual segmentation-challenge conventions: empty truth gives
/// sensitivity 1, truth covering the grid gives specificity 1, and Dice of
/// two empty masks is 1.
inline BinaryScores score_masks(const BinaryMask& pred, const BinaryMask& truth,
                                const std::array<double, 3>& spacing = {1, 1, 1}) {
  require(pred.same_dims(truth), ErrorKind::DimMismatch, "mask dims disagree");
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred.data[i] != 0, t = truth.data[i] != 0;
    if (p && t)
      ++tp;
    else if (p)
      ++fp;
    else if (t)
      ++fn;
    else
      ++tn;
  }
  BinaryScores s;
  s.dice = (tp + fp + fn == 0)
               ? 1.0
               : 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
  s.sensitivity =
      (tp + fn == 0) ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  s.specificity =
      (tn + fp == 0) ? 1.0 : static_cast<double>(tn) / static_cast<double>(tn + fp);
  s.hd95 = hausdorff95(pred, truth, spacing);
  return s;
}

inline constexpr std::array<const char*, 3> kRegionNames = {"wt", "tc", "et"};

struct RegionScores {
  BinaryScores wt, tc, et;

  const BinaryScores& by_index(int i) const {
    switch (i) {
      case 0: return wt;
      case 1: return tc;
      default: return et;
    }
  }
};

inline RegionScores evaluate_case(const LabelVolume& pred, const LabelVolume& truth,
                                  const std::array<double, 3>& spacing = {1, 1, 1}) {
  require(pred.same_dims(truth), ErrorKind::DimMismatch,
          "prediction and truth dims disagree");
  const RegionMasks pm = derive_region_masks(pred);
  const RegionMasks tm = derive_region_masks(truth);
  RegionScores out;
  out.wt = score_masks(pm.wt, tm.wt, spacing);
  out.tc = score_masks(pm.tc, tm.tc, spacing);
  out.et = score_masks(pm.et, tm.et, spacing);
  return out;
}

/// Distribution summary for one metric across cases. Quantiles use linear
/// interpolation at rank (n-1)p; stddev is the sample standard deviation;
/// whiskers are the extreme data points within 1.5 IQR of the quartiles.
struct SummaryStats {
  std::size_t n = 0;
  double mean = 0.0;
  double stddev = 0.0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double whisker_lo = 0.0;
  double whisker_hi = 0.0;
};

namespace detail {

inline double quantile_sorted(const std::vector<double>& sorted, double p) {
  const double h = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = static_cast<std::size_t>(std::ceil(h));
  if (lo == hi) return sorted[lo];
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace detail

inline SummaryStats summarize(std::vector<double> values) {
  require(!values.empty(), ErrorKind::EmptyCohort, "no values to summarize");
  std::sort(values.begin(), values.end());
  SummaryStats s;
  s.n = values.size();
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(s.n);
  double sq = 0.0;
  for (double v : values) sq += (v - s.mean) * (v - s.mean);
  s.stddev = s.n > 1 ? std::sqrt(sq / static_cast<double>(s.n - 1)) : 0.0;
  s.median = detail::quantile_sorted(values, 0.5);
  s.q1 = detail::quantile_sorted(values, 0.25);
  s.q3 = detail::quantile_sorted(values, 0.75);
  const double iqr = s.q3 - s.q1;
  const double lo_fence = s.q1 - 1.5 * iqr, hi_fence = s.q3 + 1.5 * iqr;
  s.whisker_lo = values.back();
  s.whisker_hi = values.front();
  for (double v : values) {
    if (v >= lo_fence) {
      s.whisker_lo = v;
      break;
    }
  }
  for (auto it = values.rbegin(); it != values.rend(); ++it) {
    if (*it <= hi_fence) {
      s.whisker_hi = *it;
      break;
    }
  }
  return s;
}

struct CaseResult {
  std::string case_id;
  RegionScores scores;
};

inline constexpr std::array<const char*, 4> kMetricNames = {"dice", "sensitivity",
                                                            "specificity", "hd95"};

namespace detail {

inline double metric_by_index(const BinaryScores& s, int i) {
  switch (i) {
    case 0: return s.dice;
    case 1: return s.sensitivity;
    case 2: return s.specificity;
    default: return s.hd95;
  }
}

inline std::string fmt6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace detail

/// Long-form rows, one per (case, region, metric): case_id,region,metric,value.
/// Rows keep the input case order; regions run wt, tc, et; metrics run dice,
/// sensitivity, specificity, hd95.
inline void write_cases_csv(const std::string& path, const std::vector<CaseResult>& results) {
  std::ofstream os(path);
  require(os.good(), ErrorKind::IoError, "cannot open for writing: " + path);
  os << "case_id,region,metric,value\n";
  for (const auto& r : results) {
    for (int g = 0; g < 3; ++g) {
      const BinaryScores& s = r.scores.by_index(g);
      for (int m = 0; m < 4; ++m)
        os << r.case_id << ',' << kRegionNames[static_cast<std::size_t>(g)] << ','
           << kMetricNames[static_cast<std::size_t>(m)] << ','
           << detail::fmt6(detail::metric_by_index(s, m)) << '\n';
    }
  }
  require(os.good(), ErrorKind::IoError, "write failed: " + path);
}

/// One row per (region, metric) with the distribution summary across cases.
inline void write_summary_csv(const std::string& path,
                              const std::vector<CaseResult>& results) {
  require(!results.empty(), ErrorKind::EmptyCohort, "no case results");
  std::ofstream os(path);
  require(os.good(), ErrorKind::IoError, "cannot open for writing: " + path);
  os << "region,metric,n,mean,stddev,median,q1,q3,whisker_lo,whisker_hi\n";
  for (int g = 0; g < 3; ++g) {
    for (int m = 0; m < 4; ++m) {
      std::vector<double> values;
      values.reserve(results.size());
      for (const auto& r : results)
        values.push_back(detail::metric_by_index(r.scores.by_index(g), m));
      const SummaryStats s = summarize(std::move(values));
      os << kRegionNames[static_cast<std::size_t>(g)] << ','
         << kMetricNames[static_cast<std::size_t>(m)] << ',' << s.n << ','
         << detail::fmt6(s.mean) << ',' << detail::fmt6(s.stddev) << ','
         << detail::fmt6(s.median) << ',' << detail::fmt6(s.q1) << ',' << detail::fmt6(s.q3)
         << ',' << detail::fmt6(s.whisker_lo) << ',' << detail::fmt6(s.whisker_hi) << '\n';
    }
  }
  require(os.good(), ErrorKind::IoError, "write failed: " + path);
}

/// Boxplot statistics per region and metric as JSON for external plotting.
/// Outliers are the observations beyond the whiskers.
inline void write_boxplot_json(const std::string& path,
                               const std::vector<CaseResult>& results) {
  require(!results.empty(), ErrorKind::EmptyCohort, "no case results");
  nlohmann::json root;
  for (int g = 0; g < 3; ++g) {
    for (int m = 0; m < 4; ++m) {
      std::vector<double> values;
      values.reserve(results.size());
      for (const auto& r : results)
        values.push_back(detail::metric_by_index(r.scores.by_index(g), m));
      const SummaryStats s = summarize(values);
      nlohmann::json outliers = nlohmann::json::array();
      for (double v : values)
        if (v < s.whisker_lo || v > s.whisker_hi) outliers.push_back(v);
      root[kRegionNames[static_cast<std::size_t>(g)]]
          [kMetricNames[static_cast<std::size_t>(m)]] =
              nlohmann::json{{"n", s.n},
                             {"median", s.median},
                             {"q1", s.q1},
                             {"q3", s.q3},
                             {"whisker_lo", s.whisker_lo},
                             {"whisker_hi", s.whisker_hi},
                             {"outliers", std::move(outliers)}};
    }
  }
  std::ofstream os(path);
  require(os.good(), ErrorKind::IoError, "cannot open for writing: " + path);
  os << root.dump(2) << "\n";
  require(os.good(), ErrorKind::IoError, "write failed: " + path);
}

}  // namespace resunet
