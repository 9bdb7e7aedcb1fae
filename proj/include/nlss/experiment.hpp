#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nlss/config.hpp"

namespace nlss {

struct ReportRow {
    std::string item;
    std::string method;
    double sigma = 0.0;
    double psnr = 0.0;
    double ssim = 0.0;
    std::optional<double> sam;
    std::optional<double> ergas;
    double seconds = 0.0;  // the denoise call only
    bool failed = false;
    std::string error;
};

struct AggregateRow {
    std::string method;
    double sigma = 0.0;
    std::size_t count = 0;
    double psnr = 0.0;
    double ssim = 0.0;
    std::optional<double> sam;
    std::optional<double> ergas;
    double seconds = 0.0;
};

struct MetricReport {
    std::vector<ReportRow> rows;          // sorted by (item, method, sigma)
    std::vector<AggregateRow> aggregates; // means per (method, sigma)
    std::vector<AggregateRow> best;       // per method, the sigma with highest mean PSNR
    bool any_failed = false;
};

/// Runs the full method x noise-level matrix over the dataset and writes
/// report.csv / report.json into the output directory. Deterministic up to
/// the timing columns for a fixed config and seed.
MetricReport run_experiment(const ExperimentConfig& cfg);

/// 4 fractional digits; infinities print as "inf".
std::string format_metric(double v);

void write_csv_report(const MetricReport& report, const std::string& path);
void write_json_report(const ExperimentConfig& cfg, const MetricReport& report,
                       const std::string& path);

}  // namespace nlss
