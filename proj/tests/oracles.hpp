#pragma once

// Brute-force reference implementations. They share nothing with the library
// beyond the parameter struct layout: windows are enumerated one anchor at a
// time with explicit coordinates, the network is evaluated with plain loops,
// and every contribution is scattered into its cell.

#include <cmath>
#include <cstddef>
#include <vector>

#include "c2pd/capo.hpp"

namespace oracle {

using Matrix = std::vector<std::vector<double>>;  // [row][col]

enum class Shape { Row, Col, Square };

inline Matrix to_matrix(const std::vector<double>& flat, std::size_t h, std::size_t w) {
  Matrix m(h, std::vector<double>(w));
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < w; ++c) m[r][c] = flat[r * w + c];
  return m;
}

inline std::vector<double> mlp(const c2pd::CapoParams& p, std::vector<double> x) {
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const auto& L = p.layers[l];
    std::vector<double> y(L.out);
    for (std::size_t o = 0; o < L.out; ++o) {
      double s = L.bias[o];
      for (std::size_t i = 0; i < L.in; ++i) s += L.weights[o * L.in + i] * x[i];
      y[o] = l + 1 < p.layers.size() ? std::tanh(s) : s;
    }
    x = y;
  }
  return x;
}

// CAPO on a whole grid. circular=false means replicate reads and dropped
// out-of-grid writes.
inline Matrix capo(const Matrix& s, const Matrix& g, const c2pd::CapoParams& p, Shape shape, bool circular) {
  const long H = static_cast<long>(s.size());
  const long W = static_cast<long>(s[0].size());
  std::vector<std::pair<long, long>> offs;
  if (shape == Shape::Row)
    for (long k = -3; k <= 0; ++k) offs.push_back({0, k});
  if (shape == Shape::Col)
    for (long k = -3; k <= 0; ++k) offs.push_back({k, 0});
  if (shape == Shape::Square)
    for (long dr = -1; dr <= 1; ++dr)
      for (long dc = -1; dc <= 1; ++dc) offs.push_back({dr, dc});
  const std::size_t n = offs.size();

  auto wrap = [](long v, long m) { return ((v % m) + m) % m; };
  auto clampi = [](long v, long m) { return v < 0 ? 0 : (v >= m ? m - 1 : v); };

  Matrix acc(H, std::vector<double>(W, 0.0));
  for (long r = 0; r < H; ++r) {
    for (long c = 0; c < W; ++c) {
      std::vector<double> in(2 * n);
      for (std::size_t k = 0; k < n; ++k) {
        long rr = r + offs[k].first, cc = c + offs[k].second;
        rr = circular ? wrap(rr, H) : clampi(rr, H);
        cc = circular ? wrap(cc, W) : clampi(cc, W);
        in[k] = s[rr][cc];
        in[n + k] = g[rr][cc];
      }
      std::vector<double> raw = mlp(p, in);
      double mean = 0.0;
      for (double v : raw) mean += v;
      mean /= static_cast<double>(n);
      for (std::size_t k = 0; k < n; ++k) {
        long rr = r + offs[k].first, cc = c + offs[k].second;
        if (circular) {
          rr = wrap(rr, H);
          cc = wrap(cc, W);
        } else if (rr < 0 || rr >= H || cc < 0 || cc >= W) {
          continue;
        }
        acc[rr][cc] += raw[k] - mean;
      }
    }
  }
  Matrix out = s;
  for (long r = 0; r < H; ++r)
    for (long c = 0; c < W; ++c) out[r][c] += acc[r][c] / static_cast<double>(n);
  return out;
}

inline Matrix transpose(const Matrix& m) {
  Matrix t(m[0].size(), std::vector<double>(m.size()));
  for (std::size_t r = 0; r < m.size(); ++r)
    for (std::size_t c = 0; c < m[0].size(); ++c) t[c][r] = m[r][c];
  return t;
}

// Row-wise forward difference with a trailing zero.
inline Matrix diff_rows(const Matrix& m) {
  Matrix d = m;
  for (auto& row : d) {
    for (std::size_t c = 0; c + 1 < row.size(); ++c) row[c] = row[c + 1] - row[c];
    row.back() = 0.0;
  }
  return d;
}

// One directional pass in the grid's own orientation. vertical=false
// differentiates and integrates along rows, vertical=true along columns.
inline Matrix pcgd_pass(const Matrix& depth, const Matrix& guide, const c2pd::CapoParams& p, Shape shape,
                        bool circular, bool vertical) {
  const Matrix d = vertical ? transpose(diff_rows(transpose(depth))) : diff_rows(depth);
  Matrix gg = vertical ? transpose(diff_rows(transpose(guide))) : diff_rows(guide);
  Matrix pos = d, neg_mag = d;
  for (std::size_t r = 0; r < d.size(); ++r) {
    for (std::size_t c = 0; c < d[0].size(); ++c) {
      gg[r][c] = std::fabs(gg[r][c]);
      pos[r][c] = d[r][c] > 0.0 ? d[r][c] : 0.0;
      neg_mag[r][c] = d[r][c] < 0.0 ? -d[r][c] : 0.0;
    }
  }
  const Matrix a = capo(pos, gg, p, shape, circular);
  const Matrix b = capo(neg_mag, gg, p, shape, circular);
  Matrix out = depth;
  const std::size_t H = d.size(), W = d[0].size();
  for (std::size_t r = 0; r < H; ++r) {
    for (std::size_t c = 0; c < W; ++c) {
      if (vertical && r > 0) out[r][c] = out[r - 1][c] + a[r - 1][c] - b[r - 1][c];
      if (!vertical && c > 0) out[r][c] = out[r][c - 1] + a[r][c - 1] - b[r][c - 1];
    }
  }
  return out;
}

inline Matrix pcgd(const Matrix& depth, const Matrix& guide, const c2pd::CapoParams& p, Shape shape_h,
                   Shape shape_v, bool circular) {
  const Matrix h = pcgd_pass(depth, guide, p, shape_h, circular, false);
  const Matrix v = pcgd_pass(depth, guide, p, shape_v, circular, true);
  Matrix out = h;
  for (std::size_t r = 0; r < h.size(); ++r)
    for (std::size_t c = 0; c < h[0].size(); ++c) out[r][c] = 0.5 * (h[r][c] + v[r][c]);
  return out;
}

}  // namespace oracle
