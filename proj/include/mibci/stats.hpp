#pragma once

// Paired-samples t-test and Likert questionnaire summaries.

#include <cstddef>
#include <string>
#include <vector>

namespace mibci {

// Regularized incomplete beta I_x(a, b), continued fraction to 1e-12.
double incomplete_beta(double a, double b, double x);

// P(T <= t) for Student's t with `df` degrees of freedom.
double student_t_cdf(double t, double df);

// Two-tailed p-value of |T| >= |t|.
double student_t_two_tailed(double t, double df);

struct PairedTestResult {
  std::size_t n = 0;
  double mean_diff = 0.0;
  double sd_diff = 0.0;  // n - 1 denominator
  double t_statistic = 0.0;
  double df = 0.0;
  double p_two_tailed = 1.0;
};

// Differences are x - y. Identical samples give t = 0, p = 1; constant
// non-zero differences throw DataError.
PairedTestResult paired_t_test(const std::vector<double>& x, const std::vector<double>& y);

struct LikertSummary {
  std::vector<int> responses;
  double mean = 0.0;
  double sd = 0.0;  // n - 1 denominator

  std::string format() const;  // "3.6±1.1"
};

LikertSummary likert_summary(const std::vector<int>& responses);

double mean(const std::vector<double>& v);
double sample_sd(const std::vector<double>& v);

// Welch two-sample t-test, two-tailed p-value.
double welch_t_test_p(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace mibci
