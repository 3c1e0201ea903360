#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include <json.hpp>

#include "snapcp/metrics.hpp"

namespace snapcp {

/// Hyperparameters actually used in a trial. Entries that do not apply to the
/// method stay at zero.
struct ChosenParams {
    double lambda = 0.0;
    double mu = 0.0;
    std::size_t k_reg = 0;
    double lambda_reg = 0.0;

    bool operator==(const ChosenParams&) const = default;
};

struct TrialRecord {
    std::size_t index = 0;
    std::size_t model_split = 0;
    std::size_t conformal_split = 0;
    MetricSummary metrics;
    double q_hat = 0.0;
    ChosenParams params;

    bool operator==(const TrialRecord&) const = default;
};

struct MetricStats {
    double mean = 0.0;
    double std = 0.0;

    bool operator==(const MetricStats&) const = default;
};

struct AggregateSummary {
    MetricStats coverage;
    MetricStats size;
    MetricStats sh;
    /// Over trials with a defined sscv only.
    MetricStats sscv;
    std::size_t n_trials = 0;

    bool operator==(const AggregateSummary&) const = default;
};

struct TrialReport {
    nlohmann::ordered_json config = nlohmann::ordered_json::object();
    std::vector<TrialRecord> trials;
    AggregateSummary aggregate;

    bool operator==(const TrialReport&) const = default;
};

enum class ReportFormat { json, csv };

/// Mean and sample standard deviation (n - 1 denominator; 0 for one trial).
AggregateSummary aggregate_trials(std::span<const TrialRecord> trials);

nlohmann::ordered_json report_to_json(const TrialReport& report);
TrialReport report_from_json(const nlohmann::ordered_json& j);

/// JSON: {config, trials[], aggregate{coverage, size, sh, sscv, ...}}.
/// CSV: one row per trial plus "mean" and "std" rows, six decimals.
void write_report(const TrialReport& report, const std::filesystem::path& path, ReportFormat format);
TrialReport read_report(const std::filesystem::path& path);

}  // namespace snapcp
