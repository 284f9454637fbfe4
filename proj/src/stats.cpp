#include "mibci/stats.hpp"

#include "mibci/error.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

namespace mibci {
namespace {

// Lentz's method for the incomplete beta continued fraction.
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 10000;
  constexpr double kEps = 1e-12;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  throw NumericalError("incomplete beta continued fraction did not converge");
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw ConfigError("incomplete beta needs positive shape parameters");
  if (!(x >= 0.0 && x <= 1.0)) throw ConfigError("incomplete beta argument must lie in [0, 1]");
  if (x == 0.0 || x == 1.0) return x;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  // Use the symmetry relation where the fraction converges fastest.
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_tailed(double t, double df) {
  if (!(df > 0.0)) throw ConfigError("t distribution needs positive degrees of freedom");
  if (std::isinf(t)) return 0.0;
  return incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
}

double student_t_cdf(double t, double df) {
  const double tail = 0.5 * student_t_two_tailed(t, df);
  return t >= 0.0 ? 1.0 - tail : tail;
}

double mean(const std::vector<double>& v) {
  if (v.empty()) throw DataError("mean of an empty sample");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_sd(const std::vector<double>& v) {
  if (v.size() < 2) throw DataError("sample standard deviation needs at least two values");
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

PairedTestResult paired_t_test(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw DataError("paired t-test: samples differ in length");
  if (x.size() < 2) throw DataError("paired t-test needs at least two pairs");
  std::vector<double> d(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) d[i] = x[i] - y[i];
  PairedTestResult r;
  r.n = d.size();
  r.df = static_cast<double>(r.n - 1);
  r.mean_diff = mean(d);
  r.sd_diff = sample_sd(d);
  if (r.sd_diff == 0.0) {
    if (r.mean_diff == 0.0) {
      r.t_statistic = 0.0;
      r.p_two_tailed = 1.0;
      return r;
    }
    throw DataError("paired t-test: differences are constant and non-zero (degenerate variance)");
  }
  r.t_statistic = r.mean_diff / (r.sd_diff / std::sqrt(static_cast<double>(r.n)));
  r.p_two_tailed = student_t_two_tailed(r.t_statistic, r.df);
  return r;
}

std::string LikertSummary::format() const {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f±%.1f", mean, sd);
  return buf;
}

LikertSummary likert_summary(const std::vector<int>& responses) {
  if (responses.empty()) throw DataError("Likert summary of an empty response list");
  std::vector<double> values;
  for (int r : responses) {
    if (r < 1 || r > 5) throw DataError("Likert response " + std::to_string(r) + " outside 1..5");
    values.push_back(r);
  }
  LikertSummary s;
  s.responses = responses;
  s.mean = mean(values);
  s.sd = values.size() > 1 ? sample_sd(values) : 0.0;
  return s;
}

double welch_t_test_p(const std::vector<double>& a, const std::vector<double>& b) {
  const double va = std::pow(sample_sd(a), 2) / static_cast<double>(a.size());
  const double vb = std::pow(sample_sd(b), 2) / static_cast<double>(b.size());
  const double se2 = va + vb;
  if (se2 == 0.0) return mean(a) == mean(b) ? 1.0 : 0.0;
  const double t = (mean(a) - mean(b)) / std::sqrt(se2);
  const double df = se2 * se2 /
                    (va * va / static_cast<double>(a.size() - 1) + vb * vb / static_cast<double>(b.size() - 1));
  return student_t_two_tailed(t, df);
}

}  // namespace mibci
