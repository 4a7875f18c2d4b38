#include "mbr4/harness.hpp"

#include <atomic>
#include <cmath>
#include <mutex>
#include <stdexcept>
#include <thread>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace mbr4 {

namespace {

// Replicates allocate and free multi-megabyte scratch each iteration; keep
// those blocks on the heap instead of round-tripping through mmap.
void tune_allocator_once() {
#if defined(__GLIBC__)
    static const bool done = [] {
        mallopt(M_MMAP_THRESHOLD, 64 * 1024 * 1024);
        return true;
    }();
    (void)done;
#endif
}

} // namespace

std::vector<std::vector<double>> run_replicates(
    int replicates, int threads,
    const std::function<std::vector<double>(std::uint64_t)>& statistic) {
    if (replicates < 1) throw std::invalid_argument("run_replicates: need replicates >= 1");
    tune_allocator_once();
    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads < 1) threads = 1;
    threads = std::min(threads, replicates);

    std::vector<std::vector<double>> results(static_cast<std::size_t>(replicates));

    if (threads == 1) {
        for (int rep = 0; rep < replicates; ++rep)
            results[rep] = statistic(static_cast<std::uint64_t>(rep));
        return results;
    }

    std::atomic<int> next{0};
    std::mutex error_mutex;
    long long failed_rep = -1;
    std::string failure;

    auto worker = [&] {
        for (;;) {
            int rep = next.fetch_add(1);
            if (rep >= replicates) return;
            try {
                results[rep] = statistic(static_cast<std::uint64_t>(rep));
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (failed_rep < 0 || rep < failed_rep) {
                    failed_rep = rep;
                    failure = e.what();
                }
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int tId = 0; tId < threads; ++tId) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (failed_rep >= 0)
        throw std::runtime_error("replicate " + std::to_string(failed_rep) + " failed: " +
                                 failure);
    return results;
}

EstimatorResult summarize_mean(const std::string& name,
                               std::span<const std::vector<double>> values, std::size_t component,
                               std::uint64_t seed) {
    const std::size_t r = values.size();
    if (r < 1) throw std::invalid_argument("summarize_mean: no replicates");
    double mean = 0.0;
    for (const auto& v : values) mean += v.at(component);
    mean /= static_cast<double>(r);
    double ss = 0.0;
    for (const auto& v : values) {
        double d = v[component] - mean;
        ss += d * d;
    }
    double se = r > 1 ? std::sqrt(ss / (static_cast<double>(r - 1) * static_cast<double>(r)))
                      : 0.0;
    return {name, mean, se, static_cast<int>(r), seed, 0.0};
}

CovEstimate covariance_jackknife(std::span<const double> x, std::span<const double> y) {
    const std::size_t r = x.size();
    if (y.size() != r) throw std::invalid_argument("covariance_jackknife: length mismatch");
    if (r < 3) throw std::invalid_argument("covariance_jackknife: need at least 3 replicates");
    const double n = static_cast<double>(r);
    double sx = 0.0, sy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < r; ++i) {
        sx += x[i];
        sy += y[i];
        sxy += x[i] * y[i];
    }
    CovEstimate out;
    out.estimate = (sxy - sx * sy / n) / (n - 1.0);

    // Leave-one-out estimates from the totals.
    const double np = n - 1.0;
    double mean_loo = 0.0;
    std::vector<double> loo(r);
    for (std::size_t i = 0; i < r; ++i) {
        double sxi = sx - x[i], syi = sy - y[i], sxyi = sxy - x[i] * y[i];
        loo[i] = (sxyi - sxi * syi / np) / (np - 1.0);
        mean_loo += loo[i];
    }
    mean_loo /= n;
    double ss = 0.0;
    for (std::size_t i = 0; i < r; ++i) {
        double d = loo[i] - mean_loo;
        ss += d * d;
    }
    out.std_error = std::sqrt(ss * (n - 1.0) / n);
    return out;
}

std::vector<CovEstimate> empirical_cov(
    std::span<const std::vector<double>> per_replicate,
    const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
    if (per_replicate.size() < 1000)
        throw std::invalid_argument("empirical_cov: need at least 1000 replicates");
    const std::size_t r = per_replicate.size();
    std::vector<CovEstimate> out;
    out.reserve(pairs.size());
    std::vector<double> x(r), y(r);
    for (const auto& [a, b] : pairs) {
        for (std::size_t i = 0; i < r; ++i) {
            x[i] = per_replicate[i].at(a);
            y[i] = per_replicate[i].at(b);
        }
        out.push_back(covariance_jackknife(x, y));
    }
    return out;
}

TailFit fit_exponential_tail(std::span<const double> heights, double threshold) {
    TailFit fit;
    fit.threshold = threshold;
    double sum = 0.0;
    int n = 0;
    for (double h : heights) {
        if (h > threshold) {
            sum += h - threshold;
            ++n;
        }
    }
    if (n < 50)
        throw std::invalid_argument("fit_exponential_tail: fewer than 50 exceedances (" +
                                    std::to_string(n) + ")");
    fit.exceedances = n;
    fit.rate = static_cast<double>(n) / sum;
    fit.std_error = fit.rate / std::sqrt(static_cast<double>(n));
    return fit;
}

} // namespace mbr4
