#include "doctest.h"

#include <cmath>
#include <memory>

#include "mbr4/precision.hpp"
#include "mbr4/rng.hpp"
#include "mbr4/solver.hpp"

using namespace mbr4;

namespace {

std::shared_ptr<const PrecisionOperator> make_op(int n) {
    return std::make_shared<PrecisionOperator>(Lattice4(n));
}

double rel_residual(const PrecisionOperator& op, const std::vector<double>& x,
                    const std::vector<double>& b) {
    std::vector<double> ax(b.size());
    auto ws = op.make_workspace();
    op.matvec(x, ax, ws);
    double rr = 0, bb = 0;
    for (std::size_t i = 0; i < b.size(); ++i) {
        double d = ax[i] - b[i];
        rr += d * d;
        bb += b[i] * b[i];
    }
    return std::sqrt(rr / bb);
}

} // namespace

TEST_CASE("tier selection") {
    CHECK(default_solver_mode(4) == SolverMode::DirectDense);
    CHECK(default_solver_mode(6) == SolverMode::DirectDense);
    CHECK(default_solver_mode(7) == SolverMode::DirectBanded);
    CHECK(default_solver_mode(12) == SolverMode::DirectBanded);
    CHECK(default_solver_mode(13) == SolverMode::Iterative);
}

TEST_CASE("constructed right-hand sides solve exactly") {
    for (auto mode : {SolverMode::DirectDense, SolverMode::DirectBanded, SolverMode::Iterative}) {
        auto op = make_op(4);
        auto handle = SolverHandle::create(op, {mode});
        const std::size_t n = op->size();

        std::vector<double> zero(n, 0.0);
        auto x0 = handle->solve(zero);
        for (double v : x0) CHECK(v == 0.0);

        std::vector<double> ones(n, 1.0), b(n);
        auto ws = op->make_workspace();
        op->matvec(ones, b, ws);
        auto x1 = handle->solve(b);
        for (double v : x1) CHECK(v == doctest::Approx(1.0).epsilon(1e-7));
    }
}

TEST_CASE("unit right-hand side has a small residual") {
    auto op = make_op(4);
    auto handle = SolverHandle::create(op, {SolverMode::DirectDense});
    std::vector<double> e(op->size(), 0.0);
    Vec4i center = op->lattice().center();
    e[op->lattice().index(center)] = 1.0;
    auto x = handle->solve(e);
    CHECK(rel_residual(*op, x, e) < 1e-10);
}

TEST_CASE("factorization pivots are positive for small sides") {
    for (int n = 2; n <= 6; ++n) CHECK_NOTHROW(SolverHandle::create(make_op(n)));
    for (int n = 7; n <= 8; ++n)
        CHECK_NOTHROW(SolverHandle::create(make_op(n), {SolverMode::DirectBanded}));
}

TEST_CASE("modes agree on solutions") {
    auto op = make_op(5);
    auto dense = SolverHandle::create(op, {SolverMode::DirectDense});
    auto banded = SolverHandle::create(op, {SolverMode::DirectBanded});
    auto pcg = SolverHandle::create(op, {SolverMode::Iterative});
    RngStream stream(11, 0);
    std::vector<double> b(op->size());
    for (double& v : b) v = stream.next_normal();
    auto xd = dense->solve(b);
    auto xb = banded->solve(b);
    SolveInfo info;
    auto xi = pcg->solve(b, &info);
    CHECK(info.relative_residual <= 1e-8);
    for (std::size_t i = 0; i < b.size(); ++i) {
        CHECK(xd[i] == doctest::Approx(xb[i]).epsilon(1e-10));
        CHECK(xd[i] == doctest::Approx(xi[i]).epsilon(1e-6));
    }
}

TEST_CASE("jacobi preconditioner converges too") {
    auto op = make_op(5);
    SolverHandle::Options opt{SolverMode::Iterative};
    opt.preconditioner = Preconditioner::Jacobi;
    auto handle = SolverHandle::create(op, opt);
    RngStream stream(12, 0);
    std::vector<double> b(op->size());
    for (double& v : b) v = stream.next_normal();
    SolveInfo info;
    auto x = handle->solve(b, &info);
    CHECK(info.relative_residual <= 1e-8);
    CHECK(rel_residual(*op, x, b) < 2e-8);
}

TEST_CASE("iteration budget failures carry the achieved residual") {
    auto op = make_op(6);
    SolverHandle::Options opt{SolverMode::Iterative};
    opt.max_iterations = 1;
    auto handle = SolverHandle::create(op, opt);
    std::vector<double> b(op->size(), 1.0);
    try {
        handle->solve(b);
        FAIL("expected SolverError");
    } catch (const SolverError& e) {
        CHECK(e.achieved_residual > 1e-8);
        CHECK(e.iterations == 1);
    }
}

TEST_CASE("green diagonal properties at N=4") {
    auto op = make_op(4);
    auto handle = SolverHandle::create(op, {SolverMode::DirectDense});
    auto diag = handle->green_diagonal();
    const Lattice4& lat = op->lattice();
    for (double v : diag) CHECK(v > 0.0);
    double center = diag[lat.index(lat.center())];
    double near_boundary = diag[lat.index({1, 2, 2, 2})];
    CHECK(near_boundary < center);

    // Column symmetry G(u,v) = G(v,u).
    Vec4i u{1, 2, 2, 2}, v{2, 2, 2, 1};
    auto cu = handle->green_column(u);
    auto cv = handle->green_column(v);
    CHECK(cu[lat.index(v)] == doctest::Approx(cv[lat.index(u)]).epsilon(1e-10));
    // Diagonal consistency between the two code paths.
    CHECK(cu[lat.index(u)] == doctest::Approx(diag[lat.index(u)]).epsilon(1e-10));
}

TEST_CASE("green column is identical across algorithms at N=8") {
    // Banded Cholesky and preconditioned CG are independent algorithms;
    // agreement pins down both.
    auto op = make_op(8);
    auto banded = SolverHandle::create(op, {SolverMode::DirectBanded});
    auto pcg = SolverHandle::create(op, {SolverMode::Iterative});
    Vec4i center = op->lattice().center();
    auto cb = banded->green_column(center);
    auto ci = pcg->green_column(center);
    std::size_t ic = op->lattice().index(center);
    CHECK(cb[ic] == doctest::Approx(ci[ic]).epsilon(1e-7));
    CHECK(cb[0] == doctest::Approx(ci[0]).epsilon(1e-4));
}

TEST_CASE("sampling is deterministic per (seed, stream)") {
    for (auto mode : {SolverMode::DirectDense, SolverMode::Iterative}) {
        auto op = make_op(4);
        auto handle = SolverHandle::create(op, {mode});
        RngStream s1(77, 5), s2(77, 5), s3(77, 6);
        auto h1 = handle->sample(s1);
        auto h2 = handle->sample(s2);
        auto h3 = handle->sample(s3);
        CHECK(h1 == h2);
        CHECK(h1 != h3);
    }
}
