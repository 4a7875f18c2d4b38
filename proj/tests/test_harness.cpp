#include "doctest.h"

#include <cmath>

#include "mbr4/harness.hpp"
#include "mbr4/rng.hpp"
#include "mbr4/sampler.hpp"

using namespace mbr4;

TEST_CASE("constant statistic has zero error") {
    auto vals = run_replicates(100, 0, [](std::uint64_t) { return std::vector<double>{1.0}; });
    auto est = summarize_mean("one", vals, 0, 5);
    CHECK(est.estimate == 1.0);
    CHECK(est.std_error == 0.0);
    CHECK(est.replicates == 100);
}

TEST_CASE("runs are bit-identical across repeats and thread counts") {
    auto statistic = [](std::uint64_t rep) {
        RngStream s(31415, replicate_stream(rep, 0));
        // Variable work per replicate to exercise scheduling.
        int extra = static_cast<int>(rep % 7);
        double acc = 0.0;
        for (int i = 0; i <= extra; ++i) acc += s.next_normal();
        return std::vector<double>{acc, s.next_double()};
    };
    auto a = run_replicates(500, 1, statistic);
    auto b = run_replicates(500, 4, statistic);
    auto c = run_replicates(500, 8, statistic);
    CHECK(a == b);
    CHECK(a == c);
}

TEST_CASE("failures report the smallest failing replicate") {
    auto statistic = [](std::uint64_t rep) -> std::vector<double> {
        if (rep == 17 || rep == 23) throw std::runtime_error("boom");
        return {0.0};
    };
    CHECK_THROWS_WITH_AS(run_replicates(50, 4, statistic), doctest::Contains("replicate 17"),
                         std::runtime_error);
}

TEST_CASE("membrane center value is centered") {
    auto op = std::make_shared<PrecisionOperator>(Lattice4(4));
    auto handle = SolverHandle::create(op);
    std::size_t center = op->lattice().index(op->lattice().center());
    auto vals = run_replicates(10000, 0, [&](std::uint64_t rep) {
        RngStream s(4242, replicate_stream(rep, 0));
        return std::vector<double>{handle->sample(s)[center]};
    });
    auto est = summarize_mean("h_center", vals, 0, 4242);
    CHECK(std::abs(est.estimate) <= 4.0 * est.std_error);
}

TEST_CASE("jackknife covariance") {
    SUBCASE("textbook value on a tiny sample") {
        std::vector<double> x{1, 2, 3, 4}, y{2, 4, 5, 9};
        auto est = covariance_jackknife(x, y);
        CHECK(est.estimate == doctest::Approx(11.0 / 3.0).epsilon(1e-12));
        // Oracle: explicit leave-one-out loop.
        double loo_mean = 0.0;
        std::vector<double> loo;
        for (std::size_t drop = 0; drop < x.size(); ++drop) {
            std::vector<double> xs, ys;
            for (std::size_t i = 0; i < x.size(); ++i)
                if (i != drop) {
                    xs.push_back(x[i]);
                    ys.push_back(y[i]);
                }
            double mx = (xs[0] + xs[1] + xs[2]) / 3.0, my = (ys[0] + ys[1] + ys[2]) / 3.0;
            double c = 0.0;
            for (int i = 0; i < 3; ++i) c += (xs[i] - mx) * (ys[i] - my);
            loo.push_back(c / 2.0);
            loo_mean += c / 2.0;
        }
        loo_mean /= 4.0;
        double ss = 0.0;
        for (double v : loo) ss += (v - loo_mean) * (v - loo_mean);
        CHECK(est.std_error == doctest::Approx(std::sqrt(ss * 3.0 / 4.0)).epsilon(1e-12));
    }
    SUBCASE("independent normals have near-zero covariance") {
        RngStream s(8, 0);
        std::vector<double> x(5000), y(5000);
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] = s.next_normal();
            y[i] = s.next_normal();
        }
        auto est = covariance_jackknife(x, y);
        CHECK(std::abs(est.estimate) <= 4.0 * est.std_error);
        auto var = covariance_jackknife(x, x);
        CHECK(std::abs(var.estimate - 1.0) <= 4.0 * var.std_error);
    }
    SUBCASE("empirical_cov requires 1000 replicates") {
        std::vector<std::vector<double>> few(999, std::vector<double>{0.0, 0.0});
        CHECK_THROWS_AS(empirical_cov(few, {{0, 1}}), std::invalid_argument);
    }
}

TEST_CASE("standard error scales like one over sqrt(replicates)") {
    auto statistic = [](std::uint64_t rep) {
        RngStream s(999, replicate_stream(rep, 0));
        return std::vector<double>{s.next_normal()};
    };
    auto small = summarize_mean("x", run_replicates(2000, 0, statistic), 0, 999);
    auto large = summarize_mean("x", run_replicates(8000, 0, statistic), 0, 999);
    double ratio = small.std_error / large.std_error;
    CHECK(ratio > 2.0 * 0.8);
    CHECK(ratio < 2.0 * 1.2);
}

TEST_CASE("exponential tail fitter") {
    SUBCASE("synthetic rate pi within 5 percent") {
        RngStream s(1234, 0);
        std::vector<double> draws(10000);
        const double rate = 3.14159265358979;
        for (double& d : draws) d = 1.0 - std::log(s.next_double()) / rate;
        auto fit = fit_exponential_tail(draws, 1.0);
        CHECK(fit.exceedances == 10000);
        CHECK(std::abs(fit.rate - rate) / rate < 0.05);
        CHECK(fit.std_error == doctest::Approx(fit.rate / 100.0));
    }
    SUBCASE("synthetic rate one") {
        RngStream s(77, 0);
        std::vector<double> draws(10000);
        for (double& d : draws) d = -std::log(s.next_double());
        auto fit = fit_exponential_tail(draws, 0.0);
        CHECK(std::abs(fit.rate - 1.0) < 0.05);
    }
    SUBCASE("degenerate excesses give 1/c exactly") {
        std::vector<double> draws(60, 2.5); // excess 1.5 over threshold 1
        auto fit = fit_exponential_tail(draws, 1.0);
        CHECK(fit.rate == doctest::Approx(1.0 / 1.5).epsilon(1e-15));
    }
    SUBCASE("too few exceedances") {
        std::vector<double> draws(49, 2.0);
        CHECK_THROWS_AS(fit_exponential_tail(draws, 1.0), std::invalid_argument);
    }
}
