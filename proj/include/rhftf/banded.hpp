#pragma once

#include <cstddef>
#include <span>
#include <vector>

/// Small banded linear-algebra kernels used by the radial solvers.
namespace rhftf::linalg {

/// General band matrix with `lower` sub- and `upper` super-diagonals,
/// factorised by Gaussian elimination with partial pivoting.
class BandedLU {
public:
  BandedLU(std::size_t n, std::size_t lower, std::size_t upper);

  std::size_t size() const { return n_; }
  /// Entry (i, j) with i - lower <= j <= i + upper.
  double& at(std::size_t i, std::size_t j);
  /// Adds `v` to the diagonal.
  void shift_diagonal(double v);

  /// In-place LU factorisation. Must be called once before solve().
  void factor();
  /// Solves A x = b in place.
  void solve(std::span<double> b) const;

private:
  std::size_t n_, m1_, m2_, mm_;
  std::vector<double> a_;  // n x mm, row i holds A(i, i - m1 .. i + m2) before factor()
  std::vector<double> al_; // n x m1 multipliers
  std::vector<std::size_t> pivot_;
  bool factored_ = false;
};

/// Symmetric band matrix: diag[i] = A(i,i), off[m-1][i] = A(i, i+m).
struct SymmetricBand {
  std::vector<double> diag;
  std::vector<std::vector<double>> off;

  std::size_t size() const { return diag.size(); }
  std::size_t bandwidth() const { return off.size(); }
  /// y = A x
  void multiply(std::span<const double> x, std::span<double> y) const;
};

/// Number of eigenvalues of A strictly below sigma (Sylvester inertia of
/// the LDL^T factorisation of A - sigma I).
std::size_t count_below(const SymmetricBand& a, double sigma);

struct Eigenpair {
  double value = 0.0;
  std::vector<double> vector; // unit Euclidean norm
};

/// The k lowest eigenpairs in ascending order: bisection on the inertia
/// count followed by shifted inverse iteration.
/// `guesses` (optional, ascending) are used to seed the brackets.
std::vector<Eigenpair> lowest_eigenpairs(const SymmetricBand& a, std::size_t k, std::span<const double> guesses = {});

} // namespace rhftf::linalg
