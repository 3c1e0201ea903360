#include "snapcp/report.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include <spdlog/fmt/fmt.h>

#include "snapcp/error.hpp"

namespace snapcp {

namespace {

using ojson = nlohmann::ordered_json;

MetricStats stats_of(const std::vector<double>& v) {
    MetricStats s;
    if (v.empty()) return s;
    double sum = 0.0;
    for (double x : v) sum += x;
    s.mean = sum / static_cast<double>(v.size());
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - s.mean) * (x - s.mean);
        s.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    return s;
}

// JSON has no infinity; +inf thresholds are written as null.
ojson number_or_null(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

std::string fixed6(double v) { return std::isfinite(v) ? fmt::format("{:.6f}", v) : "inf"; }

}  // namespace

AggregateSummary aggregate_trials(std::span<const TrialRecord> trials) {
    std::vector<double> cov, size, sh, sscv;
    for (const auto& t : trials) {
        cov.push_back(t.metrics.coverage);
        size.push_back(t.metrics.size);
        sh.push_back(t.metrics.sh);
        if (t.metrics.sscv) sscv.push_back(*t.metrics.sscv);
    }
    AggregateSummary a;
    a.coverage = stats_of(cov);
    a.size = stats_of(size);
    a.sh = stats_of(sh);
    a.sscv = stats_of(sscv);
    a.n_trials = trials.size();
    return a;
}

ojson report_to_json(const TrialReport& report) {
    ojson trials = ojson::array();
    for (const auto& t : report.trials) {
        trials.push_back(ojson{
            {"index", t.index},
            {"model_split", t.model_split},
            {"conformal_split", t.conformal_split},
            {"coverage", t.metrics.coverage},
            {"size", t.metrics.size},
            {"sh", t.metrics.sh},
            {"sscv", t.metrics.sscv ? ojson(*t.metrics.sscv) : ojson(nullptr)},
            {"n_eval", t.metrics.n_eval},
            {"q_hat", number_or_null(t.q_hat)},
            {"lambda", t.params.lambda},
            {"mu", t.params.mu},
            {"k_reg", t.params.k_reg},
            {"lambda_reg", t.params.lambda_reg},
        });
    }
    const auto& a = report.aggregate;
    return ojson{
        {"config", report.config},
        {"trials", std::move(trials)},
        {"aggregate",
         {{"coverage", a.coverage.mean},
          {"size", a.size.mean},
          {"sh", a.sh.mean},
          {"sscv", a.sscv.mean},
          {"n_trials", a.n_trials},
          {"std",
           {{"coverage", a.coverage.std}, {"size", a.size.std}, {"sh", a.sh.std}, {"sscv", a.sscv.std}}}}},
    };
}

TrialReport report_from_json(const ojson& j) {
    TrialReport r;
    r.config = j.at("config");
    for (const auto& t : j.at("trials")) {
        TrialRecord rec;
        rec.index = t.at("index").get<std::size_t>();
        rec.model_split = t.at("model_split").get<std::size_t>();
        rec.conformal_split = t.at("conformal_split").get<std::size_t>();
        rec.metrics.coverage = t.at("coverage").get<double>();
        rec.metrics.size = t.at("size").get<double>();
        rec.metrics.sh = t.at("sh").get<double>();
        if (!t.at("sscv").is_null()) rec.metrics.sscv = t.at("sscv").get<double>();
        rec.metrics.n_eval = t.at("n_eval").get<std::size_t>();
        rec.q_hat = t.at("q_hat").is_null() ? std::numeric_limits<double>::infinity()
                                            : t.at("q_hat").get<double>();
        rec.params.lambda = t.at("lambda").get<double>();
        rec.params.mu = t.at("mu").get<double>();
        rec.params.k_reg = t.at("k_reg").get<std::size_t>();
        rec.params.lambda_reg = t.at("lambda_reg").get<double>();
        r.trials.push_back(rec);
    }
    const auto& a = j.at("aggregate");
    const auto& s = a.at("std");
    r.aggregate.coverage = {a.at("coverage").get<double>(), s.at("coverage").get<double>()};
    r.aggregate.size = {a.at("size").get<double>(), s.at("size").get<double>()};
    r.aggregate.sh = {a.at("sh").get<double>(), s.at("sh").get<double>()};
    r.aggregate.sscv = {a.at("sscv").get<double>(), s.at("sscv").get<double>()};
    r.aggregate.n_trials = a.at("n_trials").get<std::size_t>();
    return r;
}

void write_report(const TrialReport& report, const std::filesystem::path& path, ReportFormat format) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write report to " + path.string());
    if (format == ReportFormat::json) {
        out << report_to_json(report).dump(2) << '\n';
        return;
    }
    out << "trial,model_split,conformal_split,coverage,size,sh,sscv,n_eval,q_hat,lambda,mu,k_reg,"
           "lambda_reg\n";
    for (const auto& t : report.trials) {
        out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{}\n", t.index, t.model_split,
                           t.conformal_split, fixed6(t.metrics.coverage), fixed6(t.metrics.size),
                           fixed6(t.metrics.sh), t.metrics.sscv ? fixed6(*t.metrics.sscv) : "",
                           t.metrics.n_eval, fixed6(t.q_hat), fixed6(t.params.lambda),
                           fixed6(t.params.mu), t.params.k_reg, fixed6(t.params.lambda_reg));
    }
    const auto& a = report.aggregate;
    out << fmt::format("mean,,,{},{},{},{},,,,,,\n", fixed6(a.coverage.mean), fixed6(a.size.mean),
                       fixed6(a.sh.mean), fixed6(a.sscv.mean));
    out << fmt::format("std,,,{},{},{},{},,,,,,\n", fixed6(a.coverage.std), fixed6(a.size.std),
                       fixed6(a.sh.std), fixed6(a.sscv.std));
}

TrialReport read_report(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open report " + path.string());
    try {
        return report_from_json(ojson::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

}  // namespace snapcp
