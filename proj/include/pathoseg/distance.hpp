// Copyright 2026 The pathoseg authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PATHOSEG_DISTANCE_HPP
#define PATHOSEG_DISTANCE_HPP

#include <cstdint>
#include <vector>

#include "pathoseg/core.hpp"

namespace pathoseg {

inline constexpr int64_t kEdtInfinity = INT64_C(1) << 60;

/// Exact squared euclidean distance from every pixel to the nearest site
/// pixel (Meijster two-pass scan). Pixels get kEdtInfinity when there are no
/// sites at all. Site pixels get 0.
inline std::vector<int64_t> squared_distance_to_sites(uint32_t width, uint32_t height,
                                                      const std::vector<uint8_t>& sites) {
  if (sites.size() != size_t(width) * height) {
    throw ValueError("squared_distance_to_sites: site raster size mismatch");
  }
  if (width == 0 || height == 0) return {};
  // Columns without any site carry a sentinel larger than every true
  // distance; their parabolas then lose everywhere against real columns.
  const int64_t inf_g = int64_t(width) + height + 1;
  std::vector<int64_t> g(size_t(width) * height, 0);

  // Column pass: vertical distance to the nearest site in the same column.
  for (uint32_t x = 0; x < width; ++x) {
    g[x] = sites[x] ? 0 : inf_g;
    for (uint32_t y = 1; y < height; ++y) {
      const size_t i = size_t(y) * width + x;
      g[i] = sites[i] ? 0 : (g[i - width] < inf_g ? g[i - width] + 1 : inf_g);
    }
    for (uint32_t y = height - 1; y-- > 0;) {
      const size_t i = size_t(y) * width + x;
      if (g[i + width] < g[i]) g[i] = std::min<int64_t>(g[i + width] + 1, inf_g);
    }
  }

  auto f = [](int64_t x, int64_t i, const int64_t* grow) -> int64_t {
    return (x - i) * (x - i) + grow[i] * grow[i];
  };
  auto sep = [](int64_t i, int64_t u, const int64_t* grow) -> int64_t {
    return (u * u - i * i + grow[u] * grow[u] - grow[i] * grow[i]) / (2 * (u - i));
  };

  // Row pass: lower envelope of the per-column parabolas.
  std::vector<int64_t> dist(size_t(width) * height, kEdtInfinity);
  std::vector<int64_t> s(width), t(width);
  for (uint32_t y = 0; y < height; ++y) {
    const int64_t* grow = &g[size_t(y) * width];
    int64_t q = 0;
    s[0] = 0;
    t[0] = 0;
    for (int64_t u = 1; u < int64_t(width); ++u) {
      while (q >= 0 && f(t[q], s[q], grow) > f(t[q], u, grow)) --q;
      if (q < 0) {
        q = 0;
        s[0] = u;
        t[0] = 0;
      } else {
        const int64_t w = 1 + sep(s[q], u, grow);
        if (w < int64_t(width)) {
          ++q;
          s[q] = u;
          t[q] = w;
        }
      }
    }
    for (int64_t u = int64_t(width) - 1; u >= 0; --u) {
      dist[size_t(y) * width + u] = f(u, s[q], grow);
      if (u == t[q]) --q;
    }
  }
  const int64_t inf_sq = inf_g * inf_g;
  for (auto& d : dist) {
    if (d >= inf_sq) d = kEdtInfinity;
  }
  return dist;
}

/// Boundary pixels of a mask: mask pixels with a 4-neighbor that is outside
/// the mask or outside the image.
inline std::vector<uint8_t> boundary_sites(const Mask& mask) {
  std::vector<uint8_t> sites(mask.data.size(), 0);
  for (uint32_t y = 0; y < mask.height; ++y) {
    for (uint32_t x = 0; x < mask.width; ++x) {
      if (!mask.at(x, y)) continue;
      bool boundary = false;
      for (int k = 0; k < kConnectivity && !boundary; ++k) {
        const int64_t nx = int64_t(x) + kNeighborDx[k];
        const int64_t ny = int64_t(y) + kNeighborDy[k];
        if (nx < 0 || ny < 0 || nx >= mask.width || ny >= mask.height) {
          boundary = true;
        } else if (!mask.at(uint32_t(nx), uint32_t(ny))) {
          boundary = true;
        }
      }
      if (boundary) sites[size_t(y) * mask.width + x] = 1;
    }
  }
  return sites;
}

/// Exact squared euclidean distance from every mask pixel to the mask's own
/// boundary pixels (0 on the boundary itself). Non-mask pixels are 0.
inline std::vector<int64_t> squared_boundary_distance(const Mask& mask) {
  auto dist = squared_distance_to_sites(mask.width, mask.height, boundary_sites(mask));
  for (size_t i = 0; i < mask.data.size(); ++i) {
    if (!mask.data[i]) dist[i] = 0;
  }
  return dist;
}

/// The interior-most pixel of a mask: maximal distance to the mask boundary,
/// ties broken toward the smallest row-major index.
inline std::pair<uint32_t, uint32_t> interior_point(const Mask& mask) {
  if (mask.empty_mask()) throw EmptyObjectError("interior_point: mask is empty");
  const auto dist = squared_boundary_distance(mask);
  int64_t best = -1;
  size_t best_idx = 0;
  for (size_t i = 0; i < mask.data.size(); ++i) {
    if (mask.data[i] && dist[i] > best) {
      best = dist[i];
      best_idx = i;
    }
  }
  return {uint32_t(best_idx % mask.width), uint32_t(best_idx / mask.width)};
}

}  // namespace pathoseg

#endif  // PATHOSEG_DISTANCE_HPP
