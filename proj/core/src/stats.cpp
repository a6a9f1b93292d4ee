#include "difftree/stats.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace difftree {

namespace {

constexpr double kLogPFloor = -690.7755278982137;  // ln(1e-300)
constexpr double kPFloor = 1e-300;

// log of the lower regularized incomplete gamma P(s, x) by power series,
// for x < s + 1.
double log_gamma_series(double s, double x) {
  double sum = 1.0 / s;
  double term = sum;
  for (int n = 1; n < 1000; ++n) {
    term *= x / (s + n);
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * 1e-17) break;
  }
  return s * std::log(x) - x - std::lgamma(s) + std::log(sum);
}

// log of the upper regularized incomplete gamma Q(s, x) by Lentz's
// continued fraction, for x >= s + 1.
double log_gamma_cf(double s, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - s;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 1000; ++i) {
    double an = -double(i) * (double(i) - s);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-17) break;
  }
  return s * std::log(x) - x - std::lgamma(s) + std::log(h);
}

inline double xlogy(double x, double y) { return x > 0 ? x * std::log(y) : 0.0; }

TestResult finish(double W, int dof) {
  if (W < 0 && W > -1e-9) W = 0.0;  // guard against rounding on homogeneous data
  TestResult r;
  r.W = W;
  r.dof = dof;
  r.log_p = chisq_log_sf(W, dof);
  r.p = chisq_sf(W, dof, &r.p_clamped);
  return r;
}

}  // namespace

std::int64_t CountMatrix::total() const {
  std::int64_t t = 0;
  for (auto v : counts) t += v;
  return t;
}

std::int64_t CountMatrix::column_total(int dataset) const {
  std::int64_t t = 0;
  for (int i = 0; i < levels; ++i) t += at(i, dataset);
  return t;
}

std::int64_t CountMatrix::row_total(int level) const {
  std::int64_t t = 0;
  for (int j = 0; j < datasets; ++j) t += at(level, j);
  return t;
}

double chisq_log_sf(double x, int dof) {
  if (x < 0) throw std::invalid_argument("chisq_log_sf: x must be nonnegative");
  if (dof < 1) throw std::invalid_argument("chisq_log_sf: dof must be positive");
  if (x == 0) return 0.0;
  const double s = 0.5 * dof;
  const double y = 0.5 * x;
  if (y < s + 1.0) {
    // Q = 1 - P; P is not close to 1 here so the subtraction is benign.
    double p = std::exp(log_gamma_series(s, y));
    if (p >= 1.0) return -std::numeric_limits<double>::infinity();
    return std::log1p(-p);
  }
  return log_gamma_cf(s, y);
}

double chisq_sf(double x, int dof, bool* clamped) {
  double lp = chisq_log_sf(x, dof);
  if (clamped) *clamped = false;
  if (lp < kLogPFloor) {
    if (clamped) *clamped = true;
    return kPFloor;
  }
  double p = std::exp(lp);
  return p > 1.0 ? 1.0 : p;
}

TestResult poisson_homogeneity(const CountMatrix& m) {
  if (m.levels < 1 || m.datasets < 2)
    throw std::invalid_argument("poisson_homogeneity: need c >= 1 and d >= 2");
  double W = 0.0;
  for (int i = 0; i < m.levels; ++i) {
    double ybar = double(m.row_total(i)) / m.datasets;
    if (ybar == 0) continue;  // all-zero row contributes nothing
    for (int j = 0; j < m.datasets; ++j) {
      double y = double(m.at(i, j));
      W += xlogy(y, y / ybar) - (y - ybar);
    }
  }
  return finish(2.0 * W, (m.datasets - 1) * m.levels);
}

TestResult exposure_homogeneity(const CountMatrix& m) {
  if (m.levels < 1 || m.datasets < 2)
    throw std::invalid_argument("exposure_homogeneity: need c >= 1 and d >= 2");
  if (int(m.exposures.size()) != m.datasets)
    throw std::invalid_argument("exposure_homogeneity: exposures missing");
  double esum = 0.0;
  for (double e : m.exposures) {
    if (!(e > 0)) throw std::invalid_argument("exposure_homogeneity: exposures must be positive");
    esum += e;
  }
  double W = 0.0;
  for (int i = 0; i < m.levels; ++i) {
    double num = 0.0;
    for (int j = 0; j < m.datasets; ++j) num += m.exposures[j] * double(m.at(i, j));
    double ybar = num / esum;
    for (int j = 0; j < m.datasets; ++j) {
      double y = double(m.at(i, j));
      double fitted = m.exposures[j] * ybar;
      if (fitted == 0) continue;  // then y == 0 as well
      W += xlogy(y, y / fitted) - (y - fitted);
    }
  }
  return finish(2.0 * W, (m.datasets - 1) * m.levels);
}

TestResult multinomial_homogeneity(const CountMatrix& m) {
  if (m.levels < 2 || m.datasets < 2)
    throw std::invalid_argument("multinomial_homogeneity: need c >= 2 and d >= 2");
  std::int64_t grand = 0;
  std::vector<std::int64_t> nj(m.datasets);
  for (int j = 0; j < m.datasets; ++j) {
    nj[j] = m.column_total(j);
    if (nj[j] == 0) throw std::invalid_argument("multinomial_homogeneity: zero column total");
    grand += nj[j];
  }
  double W = 0.0;
  for (int i = 0; i < m.levels; ++i) {
    double pi = double(m.row_total(i)) / double(grand);
    for (int j = 0; j < m.datasets; ++j) {
      double y = double(m.at(i, j));
      if (y > 0) W += y * std::log((y / double(nj[j])) / pi);
    }
  }
  return finish(2.0 * W, (m.levels - 1) * (m.datasets - 1));
}

int atomic_dof(int levels, int datasets, AtomicModel model) {
  if (model == AtomicModel::multinomial) return (levels - 1) * (datasets - 1);
  return (datasets - 1) * levels;
}

TestResult atomic_test(const CountMatrix& counts, AtomicModel model) {
  switch (model) {
    case AtomicModel::exposure: return exposure_homogeneity(counts);
    case AtomicModel::multinomial: return multinomial_homogeneity(counts);
    default: return poisson_homogeneity(counts);
  }
}

}  // namespace difftree
