#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace mbr4 {

struct EstimatorResult {
    std::string name;
    double estimate = 0.0;
    double std_error = 0.0;
    int replicates = 0;
    std::uint64_t seed = 0;
    double wall_time_s = 0.0;
};

/// Runs `statistic(rep)` once per replicate on a pool of worker threads and
/// returns the per-replicate vectors in replicate order. Results are a pure
/// function of the statistic: any thread count gives bit-identical output
/// (work distribution never touches the values; reduction happens in index
/// order downstream). A throwing replicate aborts the run, reporting the
/// smallest failing index.
std::vector<std::vector<double>> run_replicates(
    int replicates, int threads,
    const std::function<std::vector<double>(std::uint64_t)>& statistic);

/// Mean and plain standard error (sample sd / sqrt(R)) of one component.
EstimatorResult summarize_mean(const std::string& name,
                               std::span<const std::vector<double>> values, std::size_t component,
                               std::uint64_t seed);

struct CovEstimate {
    double estimate = 0.0;
    double std_error = 0.0; // leave-one-out jackknife
};

/// Unbiased sample covariance with jackknife standard error. Pass x == y
/// for variances.
CovEstimate covariance_jackknife(std::span<const double> x, std::span<const double> y);

/// Covariance estimates for a batch of pairs from per-replicate vertex
/// values; requires at least 1000 replicates.
std::vector<CovEstimate> empirical_cov(std::span<const std::vector<double>> per_replicate,
                                       const std::vector<std::pair<std::size_t, std::size_t>>& pairs);

struct TailFit {
    double rate = 0.0;
    double std_error = 0.0;
    int exceedances = 0;
    double threshold = 0.0;
};

/// Maximum-likelihood rate of the exponential excess model over a
/// threshold: rate = 1/mean(h - threshold | h > threshold). Requires at
/// least 50 exceedances.
TailFit fit_exponential_tail(std::span<const double> heights, double threshold);

} // namespace mbr4
