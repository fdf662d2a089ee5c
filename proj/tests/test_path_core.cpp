#include "skorolab/path_core.hpp"
#include "skorolab/stats.hpp"

#include <doctest.h>

#include <cmath>

using namespace skorolab;

TEST_SUITE("path_core") {

TEST_CASE("uniform grid knots") {
    const GridPtr g1 = make_uniform_grid(1);
    CHECK(g1->knots == std::vector<double>{0.0, 1.0});
    const GridPtr g4 = make_uniform_grid(4);
    CHECK(g4->knots == std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0});
    CHECK(g4->n_cells() == 4);
    CHECK_THROWS_AS(make_uniform_grid(0), std::invalid_argument);
}

TEST_CASE("path sampling moments") {
    const GridPtr grid = make_uniform_grid(4);
    const RngStream rng{42, 0};
    const std::size_t n = 100000;

    std::vector<double> cell0(n), cell2(n);
    for (std::size_t s = 0; s < n; ++s) {
        const BrownianPath p = sample_path(grid, 1, rng.substream(s));
        cell0[s] = p.increment(0, 0);
        cell2[s] = p.increment(2, 0);
    }
    const MeanStderr m0 = mean_and_stderr(cell0);
    CHECK(std::abs(m0.mean) <= 4.0 * m0.stderr_);

    double var = 0.0;
    for (double x : cell2) var += x * x;
    var /= static_cast<double>(n);
    CHECK(var == doctest::Approx(0.25).epsilon(0.05));
}

TEST_CASE("determinism of counter-based draws") {
    const GridPtr grid = make_uniform_grid(8);
    const RngStream rng{7, 123};
    const BrownianPath a = sample_path(grid, 2, rng);
    const BrownianPath b = sample_path(grid, 2, rng);
    CHECK(a.increments == b.increments);
    const BrownianPath c = sample_path(grid, 2, rng.substream(1));
    CHECK(a.increments != c.increments);
}

TEST_CASE("wiener integral basics") {
    const GridPtr grid = make_uniform_grid(8);
    const RngStream rng{3, 0};
    const BrownianPath path = sample_path(grid, 1, rng);

    CHECK(wiener_integral(path, zero_kernel(grid, 1)) == 0.0);
    const Kernel one = constant_kernel(grid, 1, 1.0);
    CHECK(wiener_integral(path, one) == doctest::Approx(path.terminal()).epsilon(1e-14));

    const Kernel other_dim = constant_kernel(grid, 2, 1.0);
    CHECK_THROWS_AS(wiener_integral(path, other_dim), std::invalid_argument);
}

TEST_CASE("wiener integral variance matches kernel norm") {
    const GridPtr grid = make_uniform_grid(8);
    Kernel h = zero_kernel(grid, 1);
    for (int i = 0; i < 8; ++i) h.value(i, 0) = 0.3 + 0.2 * i;
    const double target = kernel_norm2(h);
    const RngStream rng{11, 0};
    const std::size_t n = 100000;
    double var = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
        const double w = wiener_integral(sample_path(grid, 1, rng.substream(s)), h);
        var += w * w;
    }
    var /= static_cast<double>(n);
    CHECK(var == doctest::Approx(target).epsilon(0.05));
}

TEST_CASE("kernel inner products") {
    const GridPtr grid = make_uniform_grid(4);
    const Kernel one = constant_kernel(grid, 1, 1.0);
    CHECK(kernel_inner(one, one) == doctest::Approx(1.0));
    CHECK(kernel_inner(one, zero_kernel(grid, 1)) == 0.0);
    const Kernel a = indicator_kernel(grid, 1, 0.0, 0.5);
    const Kernel b = indicator_kernel(grid, 1, 0.25, 1.0);
    CHECK(kernel_inner(a, b) == doctest::Approx(0.25));
}

TEST_CASE("wiener integral is linear in the kernel") {
    const GridPtr grid = make_uniform_grid(16);
    const RngStream rng{5, 9};
    Kernel h = zero_kernel(grid, 1), g = zero_kernel(grid, 1);
    for (int i = 0; i < 16; ++i) {
        h.value(i, 0) = std::sin(1.0 + i);
        g.value(i, 0) = std::cos(2.0 + 0.5 * i);
    }
    for (std::size_t s = 0; s < 50; ++s) {
        const BrownianPath path = sample_path(grid, 1, rng.substream(s));
        const double lhs = wiener_integral(path, kernel_axpy(2.5, h, -1.25, g));
        const double rhs = 2.5 * wiener_integral(path, h) - 1.25 * wiener_integral(path, g);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
}

TEST_CASE("statistical isometry: cov(W(h), W(g)) = <h,g>") {
    const GridPtr grid = make_uniform_grid(8);
    const Kernel h = indicator_kernel(grid, 1, 0.0, 0.5);
    const Kernel g = indicator_kernel(grid, 1, 0.25, 1.0);
    const RngStream rng{17, 0};
    const std::size_t n = 100000;
    std::vector<double> prods(n);
    for (std::size_t s = 0; s < n; ++s) {
        const BrownianPath path = sample_path(grid, 1, rng.substream(s));
        prods[s] = wiener_integral(path, h) * wiener_integral(path, g);
    }
    const MeanStderr ms = mean_and_stderr(prods);
    CHECK(std::abs(ms.mean - kernel_inner(h, g)) <= 4.0 * ms.stderr_);
}

TEST_CASE("bridge refinement preserves per-cell increment sums exactly") {
    const GridPtr grid = make_uniform_grid(8);
    const RngStream rng{23, 0};
    const BrownianPath coarse = sample_path(grid, 2, rng);
    const BrownianPath fine = refine_midpoint(coarse, rng.fork(1));
    REQUIRE(fine.grid->n_cells() == 16);
    for (int i = 0; i < 8; ++i)
        for (int k = 0; k < 2; ++k)
            CHECK(fine.increment(2 * i, k) + fine.increment(2 * i + 1, k) == coarse.increment(i, k));
    const BrownianPath back = coarsen(fine, 2);
    for (std::size_t m = 0; m < coarse.increments.size(); ++m)
        CHECK(back.increments[m] == doctest::Approx(coarse.increments[m]).epsilon(1e-15));
}

TEST_CASE("refined path has the right fine-cell variance") {
    const GridPtr grid = make_uniform_grid(4);
    const RngStream rng{29, 0};
    const std::size_t n = 50000;
    double var = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
        const RngStream prng = rng.substream(s);
        const BrownianPath fine = refine_midpoint(sample_path(grid, 1, prng.fork(0)), prng.fork(1));
        var += fine.increment(3, 0) * fine.increment(3, 0);
    }
    var /= static_cast<double>(n);
    CHECK(var == doctest::Approx(0.125).epsilon(0.05));
}

}  // TEST_SUITE
