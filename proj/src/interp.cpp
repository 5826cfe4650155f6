#include "dhc/interp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dhc/errors.hpp"

namespace dhc {

namespace {

void check_knots(std::span<const double> xs, std::span<const double> ys, std::size_t min_knots, const char* who) {
  if (xs.size() != ys.size()) throw InvalidArgument(std::string(who) + ": xs and ys differ in length");
  if (xs.size() < min_knots)
    throw InvalidArgument(std::string(who) + ": need at least " + std::to_string(min_knots) + " knots");
  for (std::size_t i = 1; i < xs.size(); ++i)
    if (!(xs[i] > xs[i - 1])) throw InvalidArgument(std::string(who) + ": xs must be strictly increasing");
}

// Interval index k with xs[k] <= x <= xs[k+1].
std::size_t locate(std::span<const double> xs, double x, const char* who) {
  if (!(x >= xs.front() && x <= xs.back()))
    throw RangeError(std::string(who) + ": query " + std::to_string(x) + " outside the knot range");
  auto it = std::upper_bound(xs.begin(), xs.end(), x);
  std::size_t k = static_cast<std::size_t>(it - xs.begin());
  if (k == 0) k = 1;
  if (k >= xs.size()) k = xs.size() - 1;
  return k - 1;
}

double sign(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace

std::vector<double> pchip_slopes(std::span<const double> xs, std::span<const double> ys) {
  check_knots(xs, ys, 2, "pchip");
  const std::size_t n = xs.size();
  std::vector<double> h(n - 1), delta(n - 1), d(n, 0.0);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    h[k] = xs[k + 1] - xs[k];
    delta[k] = (ys[k + 1] - ys[k]) / h[k];
  }
  if (n == 2) {
    d[0] = d[1] = delta[0];
    return d;
  }
  for (std::size_t k = 1; k + 1 < n; ++k) {
    if (delta[k - 1] * delta[k] <= 0.0) continue;
    const double w1 = 2.0 * h[k] + h[k - 1];
    const double w2 = h[k] + 2.0 * h[k - 1];
    d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
  }
  // One-sided three-point end slopes, limited to keep the end intervals monotone.
  auto end_slope = [](double h0, double h1, double m0, double m1) {
    double s = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
    if (sign(s) != sign(m0)) s = 0.0;
    else if (sign(m0) != sign(m1) && std::abs(s) > 3.0 * std::abs(m0)) s = 3.0 * m0;
    return s;
  };
  d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
  d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
  return d;
}

std::vector<double> pchip(std::span<const double> xs, std::span<const double> ys, std::span<const double> query_xs) {
  const std::vector<double> d = pchip_slopes(xs, ys);
  std::vector<double> out;
  out.reserve(query_xs.size());
  for (double x : query_xs) {
    const std::size_t k = locate(xs, x, "pchip");
    const double h = xs[k + 1] - xs[k];
    const double t = (x - xs[k]) / h;
    if (t == 0.0) {
      out.push_back(ys[k]);
      continue;
    }
    if (t == 1.0) {
      out.push_back(ys[k + 1]);
      continue;
    }
    const double t2 = t * t, t3 = t2 * t;
    const double h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    const double h10 = t3 - 2.0 * t2 + t;
    const double h01 = -2.0 * t3 + 3.0 * t2;
    const double h11 = t3 - t2;
    out.push_back(h00 * ys[k] + h10 * h * d[k] + h01 * ys[k + 1] + h11 * h * d[k + 1]);
  }
  return out;
}

std::vector<double> cubic_spline(std::span<const double> xs, std::span<const double> ys,
                                 std::span<const double> query_xs) {
  check_knots(xs, ys, 3, "cubic_spline");
  const std::size_t n = xs.size();
  std::vector<double> h(n - 1);
  for (std::size_t k = 0; k + 1 < n; ++k) h[k] = xs[k + 1] - xs[k];

  // Second derivatives m[1..n-2] from the tridiagonal continuity system, m[0] = m[n-1] = 0.
  const std::size_t m_count = n - 2;
  std::vector<double> diag(m_count), upper(m_count), rhs(m_count), m(n, 0.0);
  for (std::size_t i = 0; i < m_count; ++i) {
    const std::size_t k = i + 1;
    diag[i] = 2.0 * (h[k - 1] + h[k]);
    upper[i] = h[k];
    rhs[i] = 6.0 * ((ys[k + 1] - ys[k]) / h[k] - (ys[k] - ys[k - 1]) / h[k - 1]);
  }
  for (std::size_t i = 1; i < m_count; ++i) {
    const double w = h[i] / diag[i - 1];  // sub-diagonal entry of row i is h[i]
    diag[i] -= w * upper[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  for (std::size_t i = m_count; i-- > 0;) {
    const double next = i + 1 < m_count ? m[i + 2] : 0.0;
    m[i + 1] = (rhs[i] - upper[i] * next) / diag[i];
  }

  std::vector<double> out;
  out.reserve(query_xs.size());
  for (double x : query_xs) {
    const std::size_t k = locate(xs, x, "cubic_spline");
    const double a = xs[k + 1] - x;
    const double b = x - xs[k];
    if (b == 0.0) {
      out.push_back(ys[k]);
      continue;
    }
    if (a == 0.0) {
      out.push_back(ys[k + 1]);
      continue;
    }
    const double hk = h[k];
    out.push_back(m[k] * a * a * a / (6.0 * hk) + m[k + 1] * b * b * b / (6.0 * hk) +
                  (ys[k] / hk - m[k] * hk / 6.0) * a + (ys[k + 1] / hk - m[k + 1] * hk / 6.0) * b);
  }
  return out;
}

}  // namespace dhc
