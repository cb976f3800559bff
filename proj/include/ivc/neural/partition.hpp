#pragma once

// Partition of a 2-D input grid induced by encoder + bottleneck quantization.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <vector>

#include "ivc/neural/bottleneck.hpp"
#include "ivc/neural/mlp.hpp"

namespace ivc::nn {

struct GridSpec {
  double lo = -5.0;
  double hi = 5.0;
  std::size_t resolution = 500;

  /// Coordinate of grid index i (inclusive linspace over [lo, hi]).
  [[nodiscard]] double coord(std::size_t i) const {
    return resolution == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * double(i) / double(resolution - 1);
  }
};

struct PartitionMap {
  GridSpec grid;
  /// resolution^2 entries, row-major: index = iy * resolution + ix.
  std::vector<std::uint32_t> class_id;
  /// Quantized bins of each class, in first-appearance order.
  std::vector<std::vector<std::int32_t>> codes;
  /// Prior probability of each class's code.
  std::vector<double> prob_mass;
  /// Decoded codebook point per class (empty without a decoder).
  std::vector<std::vector<double>> codebook;

  [[nodiscard]] std::size_t num_classes() const noexcept { return codes.size(); }
  [[nodiscard]] double x(std::size_t idx) const { return grid.coord(idx % grid.resolution); }
  [[nodiscard]] double y(std::size_t idx) const { return grid.coord(idx / grid.resolution); }
};

/// Maps every grid point through the encoder and eval-mode quantizer. Class
/// ids follow first appearance in row-major scan order.
[[nodiscard]] inline PartitionMap quantization_partition(const Mlp& encoder, const EntropyBottleneck& eb,
                                                         const GridSpec& grid = {}, const Mlp* decoder = nullptr) {
  if (encoder.input_dim() != 2) throw ValidationError("quantization_partition needs a 2-D encoder");
  if (grid.resolution == 0 || !(grid.lo < grid.hi)) throw ValidationError("invalid partition grid");
  PartitionMap map;
  map.grid = grid;
  const std::size_t n = grid.resolution * grid.resolution;
  map.class_id.resize(n);
  const Tensor prior = eb.prior();
  const std::size_t d = eb.dims();
  std::map<std::vector<std::int32_t>, std::uint32_t> ids;
  constexpr std::size_t kChunk = 8192;
  for (std::size_t start = 0; start < n; start += kChunk) {
    const std::size_t m = std::min(kChunk, n - start);
    Tensor x(static_cast<Eigen::Index>(m), 2);
    for (std::size_t k = 0; k < m; ++k) {
      x(static_cast<Eigen::Index>(k), 0) = map.x(start + k);
      x(static_cast<Eigen::Index>(k), 1) = map.y(start + k);
    }
    const auto q = eb.quantize(encoder.apply(x));
    for (std::size_t k = 0; k < m; ++k) {
      std::vector<std::int32_t> code(q.bins.begin() + static_cast<std::ptrdiff_t>(k * d),
                                     q.bins.begin() + static_cast<std::ptrdiff_t>((k + 1) * d));
      auto [it, inserted] = ids.emplace(code, static_cast<std::uint32_t>(map.codes.size()));
      if (inserted) {
        double p = 1.0;
        for (std::size_t j = 0; j < d; ++j) p *= prior(static_cast<Eigen::Index>(j), code[j] + eb.half_width());
        map.codes.push_back(code);
        map.prob_mass.push_back(p);
      }
      map.class_id[start + k] = it->second;
    }
  }
  if (decoder) {
    const Tensor s = eb.scale();
    Tensor z(static_cast<Eigen::Index>(map.codes.size()), static_cast<Eigen::Index>(d));
    for (std::size_t c = 0; c < map.codes.size(); ++c)
      for (std::size_t j = 0; j < d; ++j)
        z(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(j)) =
            map.codes[c][j] * s(0, static_cast<Eigen::Index>(j)) + eb.offset()(0, static_cast<Eigen::Index>(j));
    const Tensor out = decoder->apply(z);
    for (Eigen::Index c = 0; c < out.rows(); ++c) {
      std::vector<double> point(static_cast<std::size_t>(out.cols()));
      for (Eigen::Index j = 0; j < out.cols(); ++j) point[static_cast<std::size_t>(j)] = out(c, j);
      map.codebook.push_back(std::move(point));
    }
  }
  return map;
}

/// Number of 4-connected regions of equal class.
[[nodiscard]] inline std::size_t count_regions(const PartitionMap& map) {
  const std::size_t r = map.grid.resolution;
  std::vector<std::uint8_t> seen(map.class_id.size(), 0);
  std::vector<std::size_t> stack;
  std::size_t regions = 0;
  for (std::size_t s = 0; s < seen.size(); ++s) {
    if (seen[s]) continue;
    ++regions;
    seen[s] = 1;
    stack.push_back(s);
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      const std::size_t ix = i % r, iy = i / r;
      auto visit = [&](std::size_t j) {
        if (!seen[j] && map.class_id[j] == map.class_id[i]) {
          seen[j] = 1;
          stack.push_back(j);
        }
      };
      if (ix > 0) visit(i - 1);
      if (ix + 1 < r) visit(i + 1);
      if (iy > 0) visit(i - r);
      if (iy + 1 < r) visit(i + r);
    }
  }
  return regions;
}

/// Fraction of grid points whose class equals the majority class of their
/// radial bin (radius from `center`, `bins` equal-width bins up to the
/// largest radius on the grid). 1.0 means class id is a function of radius.
[[nodiscard]] inline double radial_consistency(const PartitionMap& map, std::size_t bins = 200,
                                               std::array<double, 2> center = {0.0, 0.0}) {
  if (bins == 0) throw ValidationError("radial bins must be positive");
  const std::size_t n = map.class_id.size();
  std::vector<double> radius(n);
  double r_max = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    radius[i] = std::hypot(map.x(i) - center[0], map.y(i) - center[1]);
    r_max = std::max(r_max, radius[i]);
  }
  std::vector<std::map<std::uint32_t, std::size_t>> votes(bins);
  for (std::size_t i = 0; i < n; ++i) {
    const auto b = r_max > 0.0 ? std::min(bins - 1, static_cast<std::size_t>(radius[i] / r_max * double(bins))) : 0;
    ++votes[b][map.class_id[i]];
  }
  std::size_t agree = 0;
  for (const auto& v : votes) {
    std::size_t best = 0;
    for (const auto& [c, k] : v) best = std::max(best, k);
    agree += best;
  }
  return n ? double(agree) / double(n) : 1.0;
}

}  // namespace ivc::nn
