#include "agsr/eval.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "agsr/errors.hpp"
#include "agsr/textio.hpp"

namespace agsr {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* who) {
    if (!a.same_shape(b))
        throw ShapeError(std::string(who) + ": prediction/target shape mismatch");
}

std::vector<double> strengths(const Matrix& m) {
    std::vector<double> s(m.rows(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) s[i] += std::fabs(m(i, j));
    return s;
}

std::vector<double> to_probabilities(const std::vector<double>& s) {
    constexpr double eps = 1e-12;
    std::vector<double> p(s.size());
    double total = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        p[i] = s[i] + eps;
        total += p[i];
    }
    for (double& v : p) v /= total;
    return p;
}

// Continued fraction for the incomplete beta, modified Lentz scheme.
double betacf(double a, double b, double x) {
    constexpr int max_iter = 300;
    constexpr double eps = 3e-16;
    constexpr double fpmin = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < fpmin) d = fpmin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) return h;
    }
    throw NumericalError("regularized_incomplete_beta: continued fraction stalled");
}

} // namespace

double metric_mse(const Matrix& pred, const Matrix& target) {
    require_same_shape(pred, target, "metric_mse");
    if (pred.size() == 0) throw ShapeError("metric_mse: empty input");
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred.data()[i] - target.data()[i];
        s += d * d;
    }
    return s / static_cast<double>(pred.size());
}

double metric_mae(const Matrix& pred, const Matrix& target) {
    require_same_shape(pred, target, "metric_mae");
    if (pred.size() == 0) throw ShapeError("metric_mae: empty input");
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i)
        s += std::fabs(pred.data()[i] - target.data()[i]);
    return s / static_cast<double>(pred.size());
}

double metric_strength_mae(const Matrix& pred, const Matrix& target) {
    require_same_shape(pred, target, "metric_strength_mae");
    const std::vector<double> sp = strengths(pred);
    const std::vector<double> st = strengths(target);
    double s = 0.0;
    for (std::size_t i = 0; i < sp.size(); ++i) s += std::fabs(sp[i] - st[i]);
    return s / static_cast<double>(sp.size());
}

double metric_strength_kl(const Matrix& pred, const Matrix& target, KlDirection dir) {
    require_same_shape(pred, target, "metric_strength_kl");
    const std::vector<double> p_target = to_probabilities(strengths(target));
    const std::vector<double> p_pred = to_probabilities(strengths(pred));
    const std::vector<double>& p =
        dir == KlDirection::target_vs_prediction ? p_target : p_pred;
    const std::vector<double>& q =
        dir == KlDirection::target_vs_prediction ? p_pred : p_target;
    double kl = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) kl += p[i] * std::log(p[i] / q[i]);
    return kl;
}

ResidualResult residual_matrix(const Matrix& pred, const Matrix& target) {
    require_same_shape(pred, target, "residual_matrix");
    ResidualResult r;
    r.abs_diff = Matrix(pred.rows(), pred.cols());
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        r.abs_diff.data()[i] = std::fabs(pred.data()[i] - target.data()[i]);
        s += r.abs_diff.data()[i];
    }
    r.mean = pred.size() ? s / static_cast<double>(pred.size()) : 0.0;
    return r;
}

double regularized_incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0))
        throw ConfigError("regularized_incomplete_beta: a and b must be positive");
    if (!(x >= 0.0 && x <= 1.0))
        throw ConfigError("regularized_incomplete_beta: x must be in [0, 1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double log_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log(1.0 - x);
    const double bt = std::exp(log_bt);
    if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
    return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

TTestResult paired_t_test(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size())
        throw ShapeError("paired_t_test: samples must pair up");
    const std::size_t n = a.size();
    if (n < 2)
        throw InsufficientSamples("paired_t_test: need at least 2 pairs");

    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i] - mean;
        ss += d * d;
    }
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));

    TTestResult r;
    r.df = n - 1;
    if (sd == 0.0) {
        if (mean == 0.0) {
            r.t = 0.0;
            r.p = 1.0;
        } else {
            r.t = mean > 0.0 ? std::numeric_limits<double>::infinity()
                             : -std::numeric_limits<double>::infinity();
            r.p = 0.0;
        }
        return r;
    }
    r.t = mean / (sd / std::sqrt(static_cast<double>(n)));
    const double df = static_cast<double>(r.df);
    r.p = regularized_incomplete_beta(df / 2.0, 0.5, df / (df + r.t * r.t));
    return r;
}

SampleMetrics compute_sample_metrics(const std::string& id, const Matrix& pred,
                                     const Matrix& target) {
    SampleMetrics m;
    m.sample_id = id;
    m.mse = metric_mse(pred, target);
    m.mae = metric_mae(pred, target);
    m.strength_mae = metric_strength_mae(pred, target);
    m.strength_kl = metric_strength_kl(pred, target);
    return m;
}

MethodReport make_method_report(const std::string& method,
                                std::vector<SampleMetrics> samples) {
    if (samples.empty())
        throw InsufficientSamples("make_method_report: no samples");
    MethodReport r;
    r.method = method;
    r.aggregate.sample_id = "aggregate";
    for (const SampleMetrics& s : samples) {
        r.aggregate.mse += s.mse;
        r.aggregate.mae += s.mae;
        r.aggregate.strength_mae += s.strength_mae;
        r.aggregate.strength_kl += s.strength_kl;
    }
    const double inv = 1.0 / static_cast<double>(samples.size());
    r.aggregate.mse *= inv;
    r.aggregate.mae *= inv;
    r.aggregate.strength_mae *= inv;
    r.aggregate.strength_kl *= inv;
    r.samples = std::move(samples);
    return r;
}

std::vector<SignificanceRow> compare_methods(const std::vector<MethodReport>& methods) {
    for (std::size_t i = 1; i < methods.size(); ++i) {
        if (methods[i].samples.size() != methods[0].samples.size())
            throw ShapeError("compare_methods: methods cover different sample counts");
        for (std::size_t s = 0; s < methods[i].samples.size(); ++s)
            if (methods[i].samples[s].sample_id != methods[0].samples[s].sample_id)
                throw ShapeError("compare_methods: sample order differs between methods");
    }

    struct MetricAccessor {
        const char* name;
        double SampleMetrics::* field;
    };
    static const MetricAccessor metrics[] = {
        {"mse", &SampleMetrics::mse},
        {"mae", &SampleMetrics::mae},
        {"strength_mae", &SampleMetrics::strength_mae},
        {"strength_kl", &SampleMetrics::strength_kl},
    };

    std::vector<SignificanceRow> rows;
    for (const MetricAccessor& metric : metrics) {
        for (std::size_t i = 0; i < methods.size(); ++i) {
            for (std::size_t j = i + 1; j < methods.size(); ++j) {
                std::vector<double> a, b;
                a.reserve(methods[i].samples.size());
                b.reserve(methods[j].samples.size());
                for (const SampleMetrics& s : methods[i].samples)
                    a.push_back(s.*(metric.field));
                for (const SampleMetrics& s : methods[j].samples)
                    b.push_back(s.*(metric.field));
                const TTestResult t = paired_t_test(a, b);
                rows.push_back({metric.name, methods[i].method, methods[j].method,
                                t.t, t.p});
            }
        }
    }
    return rows;
}

void emit_report(const EvaluationReport& report, const std::string& out_dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());

    {
        std::ofstream out(fs::path(out_dir) / "report.csv", std::ios::trunc);
        if (!out) throw IoError("cannot open report.csv in " + out_dir);
        out << "sample_id,method,mse,mae,strength_mae,strength_kl\n";
        auto row = [&](const std::string& method, const SampleMetrics& m) {
            out << m.sample_id << ',' << method << ',' << format_double(m.mse) << ','
                << format_double(m.mae) << ',' << format_double(m.strength_mae) << ','
                << format_double(m.strength_kl) << '\n';
        };
        for (const MethodReport& method : report.methods)
            for (const SampleMetrics& m : method.samples) row(method.method, m);
        for (const MethodReport& method : report.methods)
            row(method.method, method.aggregate);
        if (!out) throw IoError("write failed: report.csv");
    }

    if (!report.significance.empty()) {
        std::ofstream out(fs::path(out_dir) / "significance.csv", std::ios::trunc);
        if (!out) throw IoError("cannot open significance.csv in " + out_dir);
        out << "metric,method_a,method_b,t,p\n";
        for (const SignificanceRow& r : report.significance)
            out << r.metric << ',' << r.method_a << ',' << r.method_b << ','
                << format_double(r.t) << ',' << format_double(r.p) << '\n';
        if (!out) throw IoError("write failed: significance.csv");
    }

    {
        std::ofstream out(fs::path(out_dir) / "summary.txt", std::ios::trunc);
        if (!out) throw IoError("cannot open summary.txt in " + out_dir);
        out << "evaluation summary (" << report.methods.size() << " method(s))\n";
        for (const MethodReport& method : report.methods) {
            const SampleMetrics& a = method.aggregate;
            out << "  " << method.method << ": samples=" << method.samples.size()
                << " mse=" << format_double(a.mse) << " mae=" << format_double(a.mae)
                << " strength_mae=" << format_double(a.strength_mae)
                << " strength_kl=" << format_double(a.strength_kl) << '\n';
        }
        if (!report.significance.empty())
            out << "  significance rows: " << report.significance.size() << '\n';
        if (!out) throw IoError("write failed: summary.txt");
    }
}

} // namespace agsr
