#ifndef AGSR_EVAL_HPP
#define AGSR_EVAL_HPP

#include <string>
#include <vector>

#include "agsr/matrix.hpp"

namespace agsr {

double metric_mse(const Matrix& pred, const Matrix& target);
double metric_mae(const Matrix& pred, const Matrix& target);

/// Mean absolute difference between node strengths (row sums of
/// absolute weights).
double metric_strength_mae(const Matrix& pred, const Matrix& target);

enum class KlDirection { target_vs_prediction, prediction_vs_target };

/// KL divergence between the strength distributions of target and
/// prediction. Strengths are smoothed with 1e-12 and normalized to
/// probabilities; natural log. Default direction is KL(target || pred).
double metric_strength_kl(const Matrix& pred, const Matrix& target,
                          KlDirection dir = KlDirection::target_vs_prediction);

/// Entrywise |pred - target| plus its mean, for reporting spatial error
/// structure.
struct ResidualResult {
    Matrix abs_diff;
    double mean = 0.0;
};
ResidualResult residual_matrix(const Matrix& pred, const Matrix& target);

/// Two-tailed paired t-test. With zero-variance differences the
/// degenerate conventions apply: identical samples give t = 0, p = 1; a
/// constant nonzero difference gives p = 0 with t at +-infinity.
struct TTestResult {
    double t = 0.0;
    double p = 1.0;
    std::size_t df = 0;
};
TTestResult paired_t_test(const std::vector<double>& a, const std::vector<double>& b);

/// Regularized incomplete beta I_x(a, b) via the standard continued
/// fraction, accurate to ~1e-10. Exposed because the t-test p-value is
/// p = I_{df/(df+t^2)}(df/2, 1/2) and tests pin it against an
/// independent oracle.
double regularized_incomplete_beta(double a, double b, double x);

struct SampleMetrics {
    std::string sample_id;
    double mse = 0.0;
    double mae = 0.0;
    double strength_mae = 0.0;
    double strength_kl = 0.0;
};

SampleMetrics compute_sample_metrics(const std::string& id, const Matrix& pred,
                                     const Matrix& target);

struct MethodReport {
    std::string method;
    std::vector<SampleMetrics> samples;
    SampleMetrics aggregate; // sample_id = "aggregate", mean of the above
};

MethodReport make_method_report(const std::string& method,
                                std::vector<SampleMetrics> samples);

struct SignificanceRow {
    std::string metric;
    std::string method_a;
    std::string method_b;
    double t = 0.0;
    double p = 1.0;
};

struct EvaluationReport {
    std::vector<MethodReport> methods;
    std::vector<SignificanceRow> significance;
};

/// Pairwise paired t-tests between all methods, one row per (metric,
/// pair). Methods must cover the same samples in the same order.
std::vector<SignificanceRow> compare_methods(const std::vector<MethodReport>& methods);

/// Write report.csv (per-sample rows then aggregate footer rows),
/// significance.csv (when any rows are present) and summary.txt into
/// out_dir.
void emit_report(const EvaluationReport& report, const std::string& out_dir);

} // namespace agsr

#endif // AGSR_EVAL_HPP
