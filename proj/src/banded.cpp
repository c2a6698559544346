#include "rhftf/banded.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "rhftf/errors.hpp"

namespace rhftf::linalg {

BandedLU::BandedLU(std::size_t n, std::size_t lower, std::size_t upper)
    : n_(n), m1_(lower), m2_(upper), mm_(lower + upper + 1), a_(n * (lower + upper + 1), 0.0),
      al_(n * std::max<std::size_t>(lower, 1), 0.0), pivot_(n, 0) {}

double& BandedLU::at(std::size_t i, std::size_t j) {
  if (j + m1_ < i || j > i + m2_ || i >= n_ || j >= n_)
    throw DomainError("banded matrix entry outside the band");
  return a_[i * mm_ + (j + m1_ - i)];
}

void BandedLU::shift_diagonal(double v) {
  for (std::size_t i = 0; i < n_; ++i)
    a_[i * mm_ + m1_] += v;
}

void BandedLU::factor() {
  constexpr double tiny = 1e-300;
  auto A = [&](std::size_t i, std::size_t j) -> double& { return a_[i * mm_ + j]; };
  // Shift the first m1 rows left so every row starts at its first stored entry.
  std::size_t l = m1_;
  for (std::size_t i = 0; i < m1_ && i < n_; ++i) {
    for (std::size_t j = m1_ - i; j < mm_; ++j)
      A(i, j - l) = A(i, j);
    --l;
    for (std::size_t j = mm_ - l - 1; j < mm_; ++j)
      A(i, j) = 0.0;
  }
  l = m1_;
  for (std::size_t k = 0; k < n_; ++k) {
    double dum = A(k, 0);
    std::size_t p = k;
    if (l < n_)
      ++l;
    for (std::size_t j = k + 1; j < l; ++j)
      if (std::abs(A(j, 0)) > std::abs(dum)) {
        dum = A(j, 0);
        p = j;
      }
    pivot_[k] = p;
    if (dum == 0.0)
      A(k, 0) = tiny;
    if (p != k)
      for (std::size_t j = 0; j < mm_; ++j)
        std::swap(A(k, j), A(p, j));
    for (std::size_t i = k + 1; i < l; ++i) {
      const double f = A(i, 0) / A(k, 0);
      al_[k * m1_ + (i - k - 1)] = f;
      for (std::size_t j = 1; j < mm_; ++j)
        A(i, j - 1) = A(i, j) - f * A(k, j);
      A(i, mm_ - 1) = 0.0;
    }
  }
  factored_ = true;
}

void BandedLU::solve(std::span<double> b) const {
  if (!factored_)
    throw DomainError("BandedLU::solve called before factor()");
  auto A = [&](std::size_t i, std::size_t j) { return a_[i * mm_ + j]; };
  std::size_t l = m1_;
  for (std::size_t k = 0; k < n_; ++k) {
    const std::size_t p = pivot_[k];
    if (p != k)
      std::swap(b[k], b[p]);
    if (l < n_)
      ++l;
    for (std::size_t j = k + 1; j < l; ++j)
      b[j] -= al_[k * m1_ + (j - k - 1)] * b[k];
  }
  l = 1;
  for (std::size_t ii = n_; ii-- > 0;) {
    double dum = b[ii];
    for (std::size_t k = 1; k < l; ++k)
      dum -= A(ii, k) * b[k + ii];
    b[ii] = dum / A(ii, 0);
    if (l < mm_)
      ++l;
  }
}

void SymmetricBand::multiply(std::span<const double> x, std::span<double> y) const {
  const std::size_t n = size();
  for (std::size_t i = 0; i < n; ++i)
    y[i] = diag[i] * x[i];
  for (std::size_t m = 1; m <= bandwidth(); ++m) {
    const auto& o = off[m - 1];
    for (std::size_t i = 0; i + m < n; ++i) {
      y[i] += o[i] * x[i + m];
      y[i + m] += o[i] * x[i];
    }
  }
}

std::size_t count_below(const SymmetricBand& a, double sigma) {
  const std::size_t n = a.size();
  const std::size_t kd = a.bandwidth();
  // L(i, i-m) stored at L[i*kd + (m-1)].
  std::vector<double> L(n * std::max<std::size_t>(kd, 1), 0.0);
  std::vector<double> D(n, 0.0);
  std::size_t negatives = 0;
  const double eps = std::numeric_limits<double>::epsilon();
  for (std::size_t i = 0; i < n; ++i) {
    // Off-diagonal entries of row i against earlier columns.
    for (std::size_t m = std::min(kd, i); m >= 1; --m) {
      const std::size_t j = i - m; // column
      double v = a.off[m - 1][j];
      // subtract sum_{p < j, p >= i-kd} L(i,p) L(j,p) D(p)
      for (std::size_t q = m + 1; q <= kd && q <= i; ++q) {
        const std::size_t p = i - q;
        const std::size_t mj = j - p; // j - p >= 1
        if (mj > kd)
          continue;
        v -= L[i * kd + (q - 1)] * L[j * kd + (mj - 1)] * D[p];
      }
      L[i * kd + (m - 1)] = v / D[j];
    }
    double d = a.diag[i] - sigma;
    for (std::size_t m = 1; m <= kd && m <= i; ++m) {
      const double l = L[i * kd + (m - 1)];
      d -= l * l * D[i - m];
    }
    if (d == 0.0)
      d = -eps * (std::abs(a.diag[i]) + std::abs(sigma) + 1.0);
    D[i] = d;
    if (d < 0.0)
      ++negatives;
  }
  return negatives;
}

std::vector<Eigenpair> lowest_eigenpairs(const SymmetricBand& a, std::size_t k, std::span<const double> guesses) {
  const std::size_t n = a.size();
  if (k == 0)
    return {};
  if (k > n)
    throw DomainError("requested more eigenpairs than the matrix dimension");

  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < n; ++i) {
    double radius = 0.0;
    for (std::size_t m = 1; m <= a.bandwidth(); ++m) {
      if (i + m < n)
        radius += std::abs(a.off[m - 1][i]);
      if (i >= m)
        radius += std::abs(a.off[m - 1][i - m]);
    }
    lo = std::min(lo, a.diag[i] - radius);
    hi = std::max(hi, a.diag[i] + radius);
  }

  // Inertia samples: sigma -> number of eigenvalues below sigma.
  std::map<double, std::size_t> counts;
  counts[lo] = 0;
  counts[hi] = n;
  auto count = [&](double s) {
    auto it = counts.find(s);
    if (it != counts.end())
      return it->second;
    const std::size_t c = count_below(a, s);
    counts.emplace(s, c);
    return c;
  };
  // Guessed eigenvalues (e.g. from a previous SCF iteration) give tight
  // brackets once the inertia count confirms them.
  bool guessed = guesses.size() >= k;
  for (std::size_t idx = 0; guessed && idx < k; ++idx) {
    const double g = guesses[idx];
    double d = 1e-4 * std::max(1e-2, std::abs(g));
    bool ok = false;
    for (int grow = 0; grow < 12 && !ok; ++grow, d *= 8.0)
      ok = count(g - d) <= idx && count(g + d) >= idx + 1;
    guessed = ok;
  }
  // Grow a modest upper bracket instead of starting from the Gershgorin bound.
  if (!guessed) {
    double width = 1.0;
    double s = lo + width;
    while (s < hi && count(s) < k) {
      width *= 4.0;
      s = lo + width;
    }
  }

  std::vector<Eigenpair> pairs;
  pairs.reserve(k);
  for (std::size_t idx = 0; idx < k; ++idx) {
    double left = lo, right = hi;
    for (const auto& [s, c] : counts) {
      if (c <= idx)
        left = std::max(left, s);
      if (c >= idx + 1)
        right = std::min(right, s);
    }
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (left + right);
      if (right - left <= 1e-9 * std::max(1.0, std::abs(mid)))
        break;
      if (count(mid) <= idx)
        left = mid;
      else
        right = mid;
    }
    const double shift = 0.5 * (left + right);

    BandedLU lu(n, a.bandwidth(), a.bandwidth());
    for (std::size_t i = 0; i < n; ++i) {
      lu.at(i, i) = a.diag[i] - shift;
      for (std::size_t m = 1; m <= a.bandwidth(); ++m)
        if (i + m < n) {
          lu.at(i, i + m) = a.off[m - 1][i];
          lu.at(i + m, i) = a.off[m - 1][i];
        }
    }
    lu.factor();
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i)
      x[i] = 1.0 + 0.5 * std::sin(0.7 * static_cast<double>(i) + 0.3 * static_cast<double>(idx));
    auto normalize = [](std::vector<double>& v) {
      double s = 0.0;
      for (double e : v)
        s += e * e;
      s = std::sqrt(s);
      for (double& e : v)
        e /= s;
    };
    normalize(x);
    for (int it = 0; it < 4; ++it) {
      lu.solve(x);
      for (const auto& prev : pairs) {
        double d = 0.0;
        for (std::size_t i = 0; i < n; ++i)
          d += prev.vector[i] * x[i];
        for (std::size_t i = 0; i < n; ++i)
          x[i] -= d * prev.vector[i];
      }
      normalize(x);
    }
    std::vector<double> ax(n);
    a.multiply(x, ax);
    double rq = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      rq += x[i] * ax[i];
    // Fix the sign so the first significant component is positive.
    std::size_t first = 0;
    double big = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      big = std::max(big, std::abs(x[i]));
    while (first < n && std::abs(x[first]) < 1e-3 * big)
      ++first;
    if (first < n && x[first] < 0.0)
      for (double& e : x)
        e = -e;
    pairs.push_back({rq, std::move(x)});
  }
  return pairs;
}

} // namespace rhftf::linalg
