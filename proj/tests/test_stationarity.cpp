#include <gtest/gtest.h>

#include <random>

#include <stharm/sheet.hpp>
#include <stharm/stationarity.hpp>

#include "oracles.hpp"

using namespace stharm;

namespace {

HarmonicSheet sector_field() {
    HarmonicField H(Series(0.0, {0.0, 0.0, 1.0}, 1e6));
    return HarmonicSheet(H, {{SectorPredicate{0.0, pi / 4, 3 * pi / 4}, -1, 0.0}, {SectorPredicate{0.0, 3 * pi / 4, 9 * pi / 4}, 1, 0.0}},
                         Domain::disk(0.0, 1.0));
}

HarmonicSheet abs_x() {
    HarmonicField H(Series(0.0, {0.0, 1.0}, 1e6));
    return HarmonicSheet(H, {{HalfPlanePredicate{0.0, {1.0, 0.0}}, 1, 0.0}, {HalfPlanePredicate{0.0, {-1.0, 0.0}}, -1, 0.0}},
                         Domain::disk(0.0, 1.0));
}

std::vector<TestVectorField> fields(std::uint64_t seed, const Domain& dom, int n = 5) {
    std::mt19937_64 rng(seed);
    std::vector<TestVectorField> out;
    for (int k = 0; k < n; ++k) out.push_back(random_vector_field(rng, random_bump(rng, dom, 0.15, 0.35)));
    return out;
}

// Integral over the support of a test field's (shared) bump.
double over_support(const TestVectorField& eta, const std::function<double(cplx)>& f) {
    const TestBump& b = eta.component(0).bump;
    return oracle::disk_integral(f, b.center(), b.radius());
}

} // namespace

TEST(StressTensor, TracelessAndEven) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> N;
    for (int k = 0; k < 100; ++k) {
        const Vec2 g{N(rng), N(rng)};
        const Mat2 t = stress_tensor(g), s = stress_tensor(-g);
        EXPECT_NEAR(t.trace(), 0.0, 1e-15);
        const double det = t.m[0][0] * t.m[1][1] - t.m[0][1] * t.m[1][0];
        EXPECT_NEAR(det, -0.25 * std::pow(dot(g, g), 2), 1e-12 * (1 + std::pow(dot(g, g), 2)));
        EXPECT_EQ(t.m, s.m);
        EXPECT_EQ(t.m[0][1], t.m[1][0]);
    }
}

TEST(Holomorphy, MoreraVanishesForHolomorphicOmega) {
    auto omega = [](cplx z) { return std::exp(z) * z * z; };
    EXPECT_LT(morera_residual(omega, Contour{Rectangle{cplx(-0.3, -0.2), cplx(0.5, 0.4)}}, 512), 1e-14);
    EXPECT_LT(morera_residual(omega, Contour{Circle{cplx(0.1, 0.1), 0.5}}, 256), 1e-14);
}

TEST(Holomorphy, MoreraMatchesGreenForConjugateSquare) {
    // closed integral of conj(z)^2 dz = 2i * integral of 4 conj(z) over the rectangle / 2
    const Rectangle r{cplx(0.1, -0.2), cplx(0.4, 0.3)};
    const cplx c = 0.5 * (r.lo + r.hi);
    const double area = (r.hi.real() - r.lo.real()) * (r.hi.imag() - r.lo.imag());
    const double want = std::abs(cplx(0.0, 4.0) * area * std::conj(c));
    EXPECT_NEAR(morera_residual([](cplx z) { return std::conj(z) * std::conj(z); }, Contour{r}, 512), want, 1e-14);
}

TEST(Holomorphy, CauchyRiemannResidual) {
    const Grid g{cplx(-0.2, -0.2), cplx(0.3, 0.1), 11, 11};
    EXPECT_LT(cauchy_riemann_residual([](cplx z) { return z * z * z; }, g, 1e-4), 1e-7);
    // |d_x w + i d_y w| = 4 |z| for w = conj(z)^2, exact for centered differences
    EXPECT_NEAR(cauchy_riemann_residual([](cplx z) { return std::conj(z) * std::conj(z); }, g, 1e-3),
                4 * std::abs(cplx(0.3, -0.2)), 1e-9);
}

TEST(Holomorphy, ContourOutsideDomainReported) {
    const HarmonicSheet h = abs_x();
    auto omega = [&](cplx z) { return h.omega(z); };
    try {
        morera_residual(omega, Contour{Circle{0.0, 2.0}}, 64);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ContourOutOfDomain);
    }
    try {
        cauchy_riemann_residual(omega, Grid{cplx(0.5, 0.5), cplx(1.5, 1.5), 3, 3}, 1e-3);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::GridOutOfDomain);
    }
}

TEST(WeakForm, StationarySheetFields) {
    const Domain dom = Domain::disk(0.0, 1.0);
    for (const auto& eta : fields(2, dom)) {
        EXPECT_LT(norm(weakform_divT(abs_x(), eta)), 1e-8);
        EXPECT_LT(norm(weakform_divT(sector_field(), eta)), 1e-8);
    }
}

TEST(WeakForm, VortexPatchMatchesDivergence) {
    const QuadraticField h;
    for (const auto& eta : fields(3, h.domain())) {
        // div T = -2 (x, y), so row i pairs to the integral of 2 x_i eta_i
        const double w1 = over_support(eta, [&](cplx z) { return 2 * z.real() * eta.value(z).x; });
        const double w2 = over_support(eta, [&](cplx z) { return 2 * z.imag() * eta.value(z).y; });
        const Vec2 r = weakform_divT(h, eta, 1e-10);
        EXPECT_NEAR(r.x, w1, 1e-8);
        EXPECT_NEAR(r.y, w2, 1e-8);
    }
}

TEST(WeakForm, SupportOutsideDomainThrows) {
    const TestVectorField eta = TestVectorField::radial(TestBump(cplx(0.9, 0.0), 0.2));
    EXPECT_THROW(weakform_divT(abs_x(), eta), Error);
}

TEST(Flux, VortexPatchEnclosedDivergence) {
    const QuadraticField h;
    for (cplx c : {cplx(0.2, 0.1), cplx(-0.3, 0.4)})
        for (double d : {0.1, 0.3}) {
            const Vec2 f = flux_T(h, c, d, 256);
            EXPECT_NEAR(f.x, -2 * pi * d * d * c.real(), 1e-14);
            EXPECT_NEAR(f.y, -2 * pi * d * d * c.imag(), 1e-14);
        }
    try {
        flux_T(h, 0.9, 0.2);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::CircleOutOfDomain);
    }
}

TEST(Flux, StationaryFieldsVanish) {
    EXPECT_LT(norm(flux_T(log_abs_field(0.0, Domain::disk(0.0, 1.0)), 0.0, 0.3)), 1e-15);
    EXPECT_LT(norm(flux_T(sector_field(), 0.0, 0.5, 512)), 1e-14);
    EXPECT_LT(norm(flux_T(abs_x(), cplx(0.1, 0.2), 0.5, 512)), 1e-14);
}

TEST(InnerVariation, StationaryFieldsVanish) {
    for (const auto& eta : fields(4, Domain::disk(0.0, 1.0))) {
        EXPECT_LT(std::abs(inner_variation_derivative(abs_x(), eta)), 1e-7);
        EXPECT_LT(std::abs(inner_variation_derivative(sector_field(), eta)), 1e-7);
    }
}

TEST(InnerVariation, VortexPatchMatchesDirectDerivative) {
    const QuadraticField h;
    for (const auto& eta : fields(5, h.domain())) {
        // d/dt of 1/2 |(I + t D eta)^T (x + t eta)|^2 at t = 0
        const double want = over_support(eta, [&](cplx z) {
            const Vec2 x = to_vec(z), e = eta.value(z);
            const Mat2 j = eta.jacobian(z);
            const double xjx = x.x * (j.m[0][0] * x.x + j.m[0][1] * x.y) + x.y * (j.m[1][0] * x.x + j.m[1][1] * x.y);
            return xjx + dot(x, e);
        });
        const Vec2 w = weakform_divT(h, eta, 1e-10);
        const double got = inner_variation_derivative(h, eta, 1e-4, 1e-10);
        EXPECT_NEAR(got, want, 1e-7);
        EXPECT_NEAR(got, -(w.x + w.y), 1e-7);
    }
}

TEST(Euler, StationaryFieldsWithBernoulliPressure) {
    for (const auto& eta : fields(6, Domain::disk(0.0, 1.0))) {
        EXPECT_LT(std::abs(euler_weakform(abs_x(), eta)), 1e-8);
        EXPECT_LT(std::abs(euler_weakform(sector_field(), eta)), 1e-8);
    }
}

TEST(Euler, RigidRotation) {
    const QuadraticField h;
    for (const auto& eta : fields(7, h.domain())) {
        EXPECT_LT(std::abs(euler_weakform(h, eta, 1e-10, PressureModel::Rotational)), 1e-8);
        // with the Bernoulli sign the residual is the integral of 2 x . eta
        const double want = over_support(eta, [&](cplx z) { return 2 * dot(to_vec(z), eta.value(z)); });
        EXPECT_NEAR(euler_weakform(h, eta, 1e-10, PressureModel::Bernoulli), want, 1e-8);
    }
}

TEST(RandomRectangles, InsideDomainAndAwayFromPoints) {
    std::mt19937_64 rng(8);
    const Domain dom = Domain::disk(cplx(1.0, 1.0), 2.0);
    const std::vector<cplx> avoid = {cplx(1.0, 1.0), cplx(2.0, 1.5)};
    const auto rects = random_rectangles(rng, dom, 10, avoid, 0.1);
    ASSERT_EQ(rects.size(), 10u);
    for (const auto& r : rects) {
        for (cplx q : {r.lo, r.hi, cplx(r.lo.real(), r.hi.imag()), cplx(r.hi.real(), r.lo.imag())}) EXPECT_TRUE(dom.contains(q));
        for (cplx p : avoid) {
            const bool inside = p.real() > r.lo.real() - 0.1 && p.real() < r.hi.real() + 0.1 && p.imag() > r.lo.imag() - 0.1 &&
                                p.imag() < r.hi.imag() + 0.1;
            EXPECT_FALSE(inside);
        }
    }
}

TEST(Holomorphy, EvidenceForLogPotential) {
    std::mt19937_64 rng(9);
    const LogPotential u(VortexConfig({cplx(-0.5, 0.0), cplx(0.5, 0.0)}, {1, -2}), Domain::disk(0.0, 2.0));
    const std::vector<cplx> avoid = u.config().positions();
    const auto rects = random_rectangles(rng, u.domain(), 5, avoid, 0.1);
    const auto ev = holomorphy_evidence([&](cplx z) { return u.omega(z); }, rects, Grid{cplx(-0.3, 0.4), cplx(0.3, 0.8), 9, 9}, 1e-5);
    EXPECT_LT(ev.max_morera(), 1e-9);
    EXPECT_LT(ev.cauchy_riemann, 1e-6);
}
