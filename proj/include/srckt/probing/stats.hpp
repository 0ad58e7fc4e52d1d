#pragma once

#include <span>

namespace srckt {

// Regularized incomplete beta I_x(a, b) by continued fraction.
double incomplete_beta(double a, double b, double x);

// Two-sided p-value of a Student t statistic.
double student_t_two_sided(double t, double dof);

struct TTestResult {
    double t = 0.0;
    double p = 1.0;
    double dof = 0.0;
    double mean_diff = 0.0;
};

// Paired t-test on a - b. Throws ShapeMismatch (lengths differ or n < 2) and
// DegenerateVariance (all differences equal).
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

double mean(std::span<const double> v);
// Sample standard deviation (n - 1); 0 for fewer than two values.
double stddev(std::span<const double> v);

} // namespace srckt
