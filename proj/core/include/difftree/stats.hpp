#pragma once

#include <cstdint>
#include <vector>

namespace difftree {

// c x d matrix of per-level, per-dataset event counts, row-major.
// Row i holds the counts of response level i across the d datasets.
// Exposures, when present, give the known observation effort per dataset.
struct CountMatrix {
  int levels = 0;    // c >= 1
  int datasets = 0;  // d >= 2
  std::vector<std::int64_t> counts;  // levels * datasets, row-major
  std::vector<double> exposures;     // empty, or size() == datasets, all > 0

  CountMatrix() = default;
  CountMatrix(int c, int d) : levels(c), datasets(d), counts(std::size_t(c) * d, 0) {}

  std::int64_t& at(int level, int dataset) { return counts[std::size_t(level) * datasets + dataset]; }
  std::int64_t at(int level, int dataset) const { return counts[std::size_t(level) * datasets + dataset]; }

  std::int64_t total() const;
  std::int64_t column_total(int dataset) const;
  std::int64_t row_total(int level) const;
};

// Outcome of a likelihood-ratio homogeneity test. W is asymptotically
// chi-square with `dof` degrees of freedom; `p` is the upper-tail
// probability and `log_p` its natural log, kept separately so that
// orderings survive double underflow.
struct TestResult {
  double W = 0.0;
  int dof = 0;
  double p = 1.0;
  double log_p = 0.0;
  bool p_clamped = false;  // true when p was clamped at the 1e-300 floor
};

// Upper-tail probability of the chi-square distribution with `dof`
// degrees of freedom, Q(dof/2, x/2). Relative error <= 1e-8 down to
// p ~ 1e-300; smaller values are clamped to 1e-300 (see chisq_log_sf for
// the unclamped logarithm). Throws std::invalid_argument on x < 0 or
// dof < 1.
double chisq_sf(double x, int dof, bool* clamped = nullptr);

// Natural log of the chi-square upper-tail probability, evaluated in log
// space so it stays finite far beyond double underflow.
double chisq_log_sf(double x, int dof);

// Likelihood-ratio test of equal Poisson rates across datasets for every
// response level. W = 2 sum_ij [Y_ij ln(Y_ij/Ybar_i) - (Y_ij - Ybar_i)]
// with Ybar_i the row mean and 0 ln 0 = 0; dof = (d-1)c.
TestResult poisson_homogeneity(const CountMatrix& counts);

// Exposure-weighted variant: Ybar_i = sum_j e_j Y_ij / sum_j e_j and
// fitted cell means e_j Ybar_i; dof = (d-1)c. Requires exposures present
// and positive. Reduces to poisson_homogeneity when all exposures are 1.
TestResult exposure_homogeneity(const CountMatrix& counts);

// Likelihood-ratio test of equal level proportions across datasets,
// treating each dataset's count vector as multinomial. Requires c >= 2
// and every column total positive; dof = (c-1)(d-1).
TestResult multinomial_homogeneity(const CountMatrix& counts);

// Which atomic test grow() applies at each node.
enum class AtomicModel { poisson, exposure, multinomial };

TestResult atomic_test(const CountMatrix& counts, AtomicModel model);

// Degrees of freedom of the atomic test for a c x d matrix.
int atomic_dof(int levels, int datasets, AtomicModel model);

}  // namespace difftree
