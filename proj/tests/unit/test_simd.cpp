#include <random>

#include "doctest.h"
#include "srckt/simd/kernels.hpp"

using namespace srckt::simd;

namespace {

std::vector<double> randv(std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> v(n);
    for (double& x : v) x = u(rng);
    return v;
}

void check_close(const std::vector<double>& a, const std::vector<double>& b, double tol) {
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(std::fabs(a[i] - b[i]) <= tol * (1.0 + std::fabs(a[i])));
}

void compare_tables(const KernelTable& ref, const KernelTable& alt) {
    std::mt19937_64 rng(42);
    // Odd sizes exercise the vector tails.
    for (std::size_t n : {1, 3, 4, 7, 16, 33, 64, 101}) {
        const auto a = randv(n, rng), b = randv(n, rng);
        CHECK(alt.dot(a.data(), b.data(), n) == doctest::Approx(ref.dot(a.data(), b.data(), n)).epsilon(1e-12));
        auto y1 = randv(n, rng), y2 = y1;
        ref.axpy(0.37, a.data(), y1.data(), n);
        alt.axpy(0.37, a.data(), y2.data(), n);
        check_close(y1, y2, 1e-14);
    }
    const std::size_t shapes[][3] = {{1, 1, 1}, {3, 5, 7}, {8, 32, 16}, {17, 9, 33}, {64, 64, 5}};
    for (const auto& s : shapes) {
        const std::size_t m = s[0], k = s[1], n = s[2];
        const auto a = randv(m * k, rng);
        const auto bnn = randv(k * n, rng), bnt = randv(n * k, rng);
        const auto atn = randv(k * m, rng);
        for (bool acc : {false, true}) {
            auto c0 = randv(m * n, rng);
            auto c1 = c0, c2 = c0, c3 = c0, c4 = c0, c5 = c0;
            ref.gemm_nn(a.data(), bnn.data(), c0.data(), m, k, n, acc);
            alt.gemm_nn(a.data(), bnn.data(), c1.data(), m, k, n, acc);
            check_close(c0, c1, 1e-12);
            ref.gemm_nt(a.data(), bnt.data(), c2.data(), m, k, n, acc);
            alt.gemm_nt(a.data(), bnt.data(), c3.data(), m, k, n, acc);
            check_close(c2, c3, 1e-12);
            ref.gemm_tn(atn.data(), bnn.data(), c4.data(), m, k, n, acc);
            alt.gemm_tn(atn.data(), bnn.data(), c5.data(), m, k, n, acc);
            check_close(c4, c5, 1e-12);
        }
    }
}

// Plain triple loop as an oracle for the scalar table itself.
TEST_CASE("scalar gemm matches a naive product") {
    std::mt19937_64 rng(1);
    const std::size_t m = 5, k = 6, n = 4;
    const auto a = randv(m * k, rng), b = randv(k * n, rng);
    std::vector<double> c(m * n), want(m * n, 0.0);
    kernels(Level::Scalar).gemm_nn(a.data(), b.data(), c.data(), m, k, n, false);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t p = 0; p < k; ++p) want[i * n + j] += a[i * k + p] * b[p * n + j];
    check_close(want, c, 1e-14);
}

} // namespace

TEST_CASE("vector kernels match the scalar reference") {
    const KernelTable& ref = kernels(Level::Scalar);
    bool any = false;
    for (Level l : {Level::Avx2, Level::Neon}) {
        if (!supported(l)) continue;
        any = true;
        INFO("level " << to_string(l));
        compare_tables(ref, kernels(l));
    }
    if (!any) MESSAGE("no vector level on this machine; only the scalar table was checked");
}

TEST_CASE("runtime selection") {
    CHECK(supported(Level::Scalar));
    CHECK(supported(detect_best()));
    const Level before = active_level();
    set_level(Level::Scalar);
    CHECK(kernels().level == Level::Scalar);
    set_level(before);
    CHECK(kernels().level == before);
}
