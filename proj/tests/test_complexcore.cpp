#include <gtest/gtest.h>

#include <boost/multiprecision/cpp_int.hpp>

#include <random>

#include <stharm/fields.hpp>
#include <stharm/quadrature.hpp>
#include <stharm/series.hpp>
#include <stharm/sheet.hpp>
#include <stharm/test_functions.hpp>

#include "oracles.hpp"

using namespace stharm;
using rational = boost::multiprecision::cpp_rational;

namespace stharm {
template <>
struct scalar_traits<rational> {
    static double magnitude(const rational& s) { return boost::multiprecision::abs(s).convert_to<double>(); }
};
} // namespace stharm

namespace {

Series random_series(std::mt19937_64& rng, std::size_t n, cplx c = 0.0, double radius = 1e6) {
    return Series(c, oracle::random_coeffs(rng, n), radius);
}

HarmonicSheet re_z2_sheet(int theta_upper) {
    HarmonicField H(Series(0.0, {0.0, 0.0, 1.0}, 1e6));
    std::vector<Region> rs = {{SectorPredicate{0.0, pi / 4, 3 * pi / 4}, theta_upper, 0.0},
                              {SectorPredicate{0.0, 3 * pi / 4, 9 * pi / 4}, 1, 0.0}};
    return HarmonicSheet(H, rs, Domain::disk(0.0, 1.0));
}

} // namespace

TEST(Series, EvaluationMatchesExplicitPowers) {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 20; ++trial) {
        const cplx c(0.3, -0.2);
        const Series f = random_series(rng, 12, c, 2.0);
        const auto a = std::vector<cplx>(f.coeffs().begin(), f.coeffs().end());
        for (cplx z : {cplx(0.1, 0.4), cplx(-0.9, 0.3), cplx(1.5, -0.6)}) {
            EXPECT_LT(std::abs(f.eval(z) - oracle::power_sum(a, c, z)), 1e-12);
            const cplx h = 1e-6;
            const cplx fd = (oracle::power_sum(a, c, z + h) - oracle::power_sum(a, c, z - h)) / (2.0 * h);
            EXPECT_LT(std::abs(f.derivative_at(z) - fd), 1e-7);
            EXPECT_LT(std::abs(f.derivative().eval(z) - f.derivative_at(z)), 1e-12);
        }
    }
}

TEST(Series, OutsideDiskThrows) {
    const Series f(0.0, {1.0, 1.0}, 1.0);
    EXPECT_THROW(f.eval(cplx(1.0, 0.0)), Error);
    try {
        f.eval(2.0);
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::OutOfDisk);
    }
    EXPECT_THROW(series_eval(f, cplx(0.0), 2), Error);
}

TEST(Series, ProductTruncatesToLargerOrder) {
    const Series a(0.0, {1.0, 1.0}, 1e6), b(0.0, {1.0, -1.0, 0.0}, 1e6);
    const Series p = a * b;
    ASSERT_EQ(p.order(), 2u);
    EXPECT_EQ(p.coeff(0), cplx(1.0));
    EXPECT_EQ(p.coeff(1), cplx(0.0));
    EXPECT_EQ(p.coeff(2), cplx(-1.0));
}

TEST(Series, SqrtSquaresBack) {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 10; ++trial) {
        auto a = oracle::random_coeffs(rng, 33);
        a[0] = 2.0 + 0.1 * a[0];  // well separated from zero
        const Series f(0.0, a, 1e6);
        const Series g = sqrt_series(f);
        const Series gg = g * g;
        double scale = 0.0;
        for (cplx c : f.coeffs()) scale = std::max(scale, std::abs(c));
        for (std::size_t k = 0; k <= f.order(); ++k) EXPECT_LT(std::abs(gg.coeff(k) - f.coeff(k)), 1e-11 * scale) << k;
        EXPECT_GE(g.coeff(0).real(), 0.0);
    }
    EXPECT_THROW(sqrt_series(Series(0.0, {0.0, 1.0}, 1.0)), Error);
}

TEST(Series, PrincipalSqrtOnNegativeAxis) {
    const Series g = sqrt_series(Series(0.0, {-4.0}, 1.0));
    EXPECT_EQ(g.coeff(0), cplx(0.0, 2.0));
}

TEST(Series, FactorZeroSplitsLeadingZeros) {
    const Series f(0.0, {0.0, 0.0, 1e-16, 3.0, 1.0}, 1.0);
    const auto fz = factor_zero(f);
    EXPECT_EQ(fz.order, 3u);
    EXPECT_EQ(fz.unit.coeff(0), cplx(3.0));
    EXPECT_THROW(factor_zero(Series(0.0, {0.0, 0.0}, 1.0)), Error);
}

// Term-wise derivative of the primitive reproduces phi1, through order 32.
TEST(Series, HalfIntegerPrimitiveTermwise) {
    std::mt19937_64 rng(3);
    for (unsigned m : {0u, 1u, 2u})
        for (int trial = 0; trial < 10; ++trial) {
            const Series phi1 = random_series(rng, 33);
            const auto prim = primitive_halfinteger(phi1, m);
            EXPECT_EQ(prim.half_exponent, m + 1.5);
            const auto c = halfinteger_derivative_coeffs(prim.factor, prim.half_exponent);
            for (std::size_t k = 0; k < c.size(); ++k)
                EXPECT_LE(std::abs(c[k] - phi1.coeff(k)), 4e-16 * std::abs(phi1.coeff(k))) << "m=" << m << " k=" << k;
        }
}

TEST(Series, HalfIntegerPrimitiveDerivativeNumerically) {
    std::mt19937_64 rng(4);
    for (unsigned m : {0u, 1u, 2u}) {
        const Series phi1 = random_series(rng, 20, 0.0, 1e6);
        const auto prim = primitive_halfinteger(phi1, m);
        const BranchField G(0.0, prim.half_exponent, prim.factor);
        for (cplx z : {cplx(0.3, 0.2), cplx(-0.1, 0.5), cplx(0.4, -0.3)}) {
            const double a = std::arg(z);
            const cplx g = std::polar(std::pow(std::abs(z), m + 0.5), (m + 0.5) * a) * phi1.eval(z);
            const double h = 1e-6;
            const cplx fd = (G.primitive(z + h).first - G.primitive(z - h).first) / (2 * h);
            EXPECT_LT(std::abs(G.primitive(z).second - g), 1e-12 * (1 + std::abs(g)));
            EXPECT_LT(std::abs(fd - g), 1e-7);
        }
    }
}

TEST(Series, HalfIntegerPrimitiveExactRational) {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> num(-50, 50), den(1, 40);
    for (unsigned m : {0u, 1u, 2u})
        for (int trial = 0; trial < 10; ++trial) {
            std::vector<rational> a(33);
            for (auto& x : a) x = rational(num(rng), den(rng));
            if (a[0] == 0) a[0] = 1;
            const HolomorphicSeries<rational> phi1(rational(0), a, 1.0);
            const auto prim = primitive_halfinteger(phi1, m);
            for (std::size_t k = 0; k < a.size(); ++k) {
                const rational want = a[k] / (rational(static_cast<int>(2 * (m + k) + 3), 2));
                EXPECT_EQ(prim.factor.coeff(k), want) << "m=" << m << " k=" << k;
            }
            const auto c = halfinteger_derivative_coeffs(prim.factor, prim.half_exponent);
            for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(c[k], a[k]);
        }
}

TEST(Series, HalfIntegerPrimitiveRejectsZeroFactor) {
    EXPECT_THROW(primitive_halfinteger(Series(0.0, {0.0, 1.0}, 1.0), 0), Error);
}

TEST(Fields, HarmonicGradientAndOmega) {
    std::mt19937_64 rng(6);
    const HarmonicField H(random_series(rng, 10, 0.0, 3.0));
    for (cplx z : {cplx(0.2, 0.1), cplx(-0.7, 0.5), cplx(1.1, -1.3)}) {
        const Vec2 g = oracle::gradient([&](cplx w) { return H.value(w); }, z);
        EXPECT_LT(norm(H.gradient(z) - g), 1e-7);
        const cplx w = cplx(g.x, -g.y);
        EXPECT_LT(std::abs(H.omega(z) - w * w), 1e-6 * (1 + std::norm(w)));
    }
}

TEST(Fields, BranchFieldAbsoluteValue) {
    const BranchField G(0.0, 2.5, Series(0.0, {1.0}, 1e6));
    // the label cut runs where |Re z^{5/2}| is extremal along rays
    EXPECT_NEAR(std::abs(std::cos(2.5 * G.cut_angle())), 1.0, 1e-15);
    EXPECT_LE(std::abs(G.cut_angle() - pi), pi / 5 + 1e-15);
    for (cplx z : {cplx(0.3, 0.4), cplx(-0.5, 0.1), cplx(-0.5, -0.1), cplx(0.2, -0.7)}) {
        const double want = std::abs(std::pow(z, 2.5).real());
        EXPECT_NEAR(G.value(z), want, 1e-14);
        const cplx d = 2.5 * std::pow(z, 1.5);
        EXPECT_LT(std::abs(G.omega(z) - d * d), 1e-13);
    }
}

TEST(Fields, BranchFieldLabelSeparatesEveryZeroRay) {
    const BranchField G(0.0, 2.5, Series(0.0, {1.0}, 1e6));
    for (int k = 0; k < 5; ++k) {
        const double ray = pi / 5 + 2 * pi * k / 5;
        EXPECT_NE(G.label(std::polar(0.5, ray - 1e-3)), G.label(std::polar(0.5, ray + 1e-3))) << k;
    }
}

TEST(Fields, BranchFieldValidation) {
    EXPECT_THROW(BranchField(0.0, 2.0, Series(0.0, {1.0}, 1.0)), Error);
    EXPECT_THROW(BranchField(0.0, 0.5, Series(0.0, {1.0}, 1.0)), Error);
    EXPECT_THROW(BranchField(0.0, 1.5, Series(0.5, {1.0}, 1.0)), Error);
    EXPECT_THROW(BranchField(0.0, 1.5, Series(0.0, {0.0, 1.0}, 1.0)), Error);
}

TEST(Fields, LogPotentialRejectsVortexPosition) {
    const LogPotential u(VortexConfig({0.0, 1.0}, {1, 1}));
    try {
        u.value(0.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::AtVortex);
    }
    const cplx z(0.3, 0.7);
    const Vec2 g = oracle::gradient([&](cplx w) { return u.value(w); }, z);
    EXPECT_LT(norm(u.gradient(z) - g), 1e-8);
}

TEST(Fields, VortexConfigValidation) {
    EXPECT_THROW(VortexConfig({0.0, 0.0}, {1, 1}), Error);
    EXPECT_THROW(VortexConfig({0.0, 1.0}, {1, 0}), Error);
    EXPECT_THROW(VortexConfig({0.0}, {1, 1}), Error);
    const VortexConfig c({-1.0, 0.0, 1.0}, {2, -1, 2});
    EXPECT_EQ(c.total_mass(), 5);
    EXPECT_DOUBLE_EQ(c.diameter(), 2.0);
    EXPECT_DOUBLE_EQ(c.min_distance(), 1.0);
}

// omega of theta * H equals omega of H exactly, since theta^2 = 1.
TEST(Sheet, HopfDifferentialInvariance) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        const HarmonicField H(random_series(rng, 8));
        const double level = 0.1 * (U(rng) - 0.5);
        const HarmonicSheet h(H, {{LevelPredicate{level, 1}, 1, 0.0}, {LevelPredicate{level, -1}, -1, 2 * level}},
                              Domain::disk(0.0, 1.0));
        for (int k = 0; k < 1000; ++k) {
            const cplx z = std::polar(std::sqrt(U(rng)) * 0.99, 2 * pi * U(rng));
            const Vec2 g = h.eval_unchecked(z).grad;
            const cplx w(g.x, -g.y);
            EXPECT_EQ(w * w, H.omega(z));
            EXPECT_EQ(h.omega(z), H.omega(z));
        }
    }
}

TEST(Sheet, SectorFieldValues) {
    const HarmonicSheet h = re_z2_sheet(-1);
    const cplx z = std::polar(0.5, pi / 2);
    EXPECT_NEAR(h.value(z), 0.25, 1e-15);
    EXPECT_NEAR(h.value(std::polar(0.5, -pi / 2)), -0.25, 1e-15);
    EXPECT_THROW(h.eval(std::polar(0.5, pi / 4)), Error);
}

TEST(Sheet, DiscontinuousPartitionRejected) {
    const HarmonicField H(Series(0.0, {0.0, 0.0, 1.0}, 1e6));
    const std::vector<Region> rs = {{SectorPredicate{0.0, 0.0, pi}, -1, 0.0}, {SectorPredicate{0.0, pi, 2 * pi}, 1, 0.0}};
    EXPECT_THROW(HarmonicSheet(H, rs, Domain::disk(0.0, 1.0)), Error);
}

TEST(Sheet, InterfaceLevel) {
    const HarmonicSheet h = re_z2_sheet(-1);
    ASSERT_TRUE(h.interface_level(0, 1).has_value());
    EXPECT_EQ(*h.interface_level(0, 1), 0.0);
    EXPECT_FALSE(h.interface_level(1, 1).has_value());
}

TEST(Sheet, OneSidedBranchGradient) {
    const BranchSheet h(BranchField(0.0, 1.5, Series(0.0, {1.0}, 1e6)), {{AllPredicate{}, 1, 0.0}}, Domain::disk(0.0, 1.0));
    const double ray = pi / 3;  // zero ray of Re z^{3/2}
    const cplx z = std::polar(0.5, ray);
    const cplx a = std::polar(0.5, ray - 1e-4), b = std::polar(0.5, ray + 1e-4);
    const Vec2 ga = h.one_sided(z, a).grad, gb = h.one_sided(z, b).grad;
    const Vec2 fa = oracle::gradient([&](cplx w) { return h.value(w); }, a, 1e-7);
    const Vec2 fb = oracle::gradient([&](cplx w) { return h.value(w); }, b, 1e-7);
    EXPECT_LT(norm(ga - fa), 1e-3);
    EXPECT_LT(norm(gb - fb), 1e-3);
    EXPECT_NEAR(norm(ga - gb), 2 * 1.5 * std::sqrt(0.5), 1e-9);
}

TEST(Quadrature, GaussLegendreExactForPolynomials) {
    for (int n : {1, 2, 5, 7, 16}) {
        const GaussRule& g = gauss_legendre(n);
        double s = 0.0;
        for (double w : g.weights) s += w;
        EXPECT_NEAR(s, 2.0, 1e-14);
        double m = 0.0;
        for (std::size_t i = 0; i < g.nodes.size(); ++i) m += g.weights[i] * std::pow(g.nodes[i], 2 * n - 2);
        EXPECT_NEAR(m, 2.0 / (2 * n - 1), 1e-14);
    }
}

TEST(Quadrature, RectangleAndInterfaceSplit) {
    auto poly = [](cplx z) { return std::array<double, 1>{z.real() * z.real() * z.imag() + 1.0}; };
    auto none = [](cplx) { return 0; };
    const auto r = integrate_2d<1>(poly, none, Rect{0.0, 1.0, 0.0, 2.0});
    EXPECT_NEAR(r[0], 2.0 / 3.0 + 2.0, 1e-13);

    // |x - y/3| over [-1, 1]^2 with the kink line as an interface
    auto kink = [](cplx z) { return std::array<double, 1>{std::abs(z.real() - z.imag() / 3)}; };
    auto side = [](cplx z) { return z.real() - z.imag() / 3 >= 0 ? 1 : 0; };
    QuadStats st;
    QuadOptions opt;
    opt.abs_tol = 1e-12;
    const auto k = integrate_2d<1>(kink, side, Rect{-1, 1, -1, 1}, opt, &st);
    const double want = oracle::simpson(
        [](double y) {
            const double c = y / 3;
            return 0.5 * ((1 + c) * (1 + c) + (1 - c) * (1 - c));
        },
        -1.0, 1.0, 200);
    EXPECT_NEAR(k[0], want, 1e-12);
    EXPECT_LT(st.panels, 2000u);
}

TEST(Quadrature, CircleRule) {
    const auto v = integrate_circle([](cplx z, cplx) { return std::norm(z); }, cplx(0.5, 0.0), 0.25, 64);
    EXPECT_NEAR(v, 2 * pi * 0.25 * (0.25 + 0.0625), 1e-14);
    EXPECT_NEAR(integrate_interval([](double x) { return std::exp(x); }, 0.0, 1.0, 16, 2), std::exp(1.0) - 1.0, 1e-15);
}

TEST(TestFunctions, BumpGradientAndSupport) {
    const TestBump b(cplx(0.1, -0.2), 0.3);
    for (cplx z : {cplx(0.15, -0.1), cplx(0.0, -0.3), cplx(0.3, -0.25)}) {
        const Vec2 g = oracle::gradient([&](cplx w) { return b.value(w); }, z, 1e-7);
        EXPECT_LT(norm(b.gradient(z) - g), 1e-7);
    }
    EXPECT_EQ(b.value(cplx(0.41, -0.2)), 0.0);
    EXPECT_EQ(b.value(b.center()), 1.0);
    EXPECT_THROW(TestBump(0.0, 0.0), Error);
}

TEST(TestFunctions, VectorFieldJacobianAndPlacement) {
    std::mt19937_64 rng(8);
    const Domain dom = Domain::disk(0.0, 1.0);
    const std::vector<cplx> avoid = {0.0};
    for (int k = 0; k < 20; ++k) {
        const TestBump b = random_bump(rng, dom, 0.1, 0.3, avoid, 0.05);
        EXPECT_TRUE(dom.contains_disk(b.center(), b.radius()));
        EXPECT_GE(std::abs(b.center()), b.radius() + 0.05);
        const TestVectorField eta = random_vector_field(rng, b);
        const cplx z = b.center() + 0.3 * b.radius();
        const Mat2 j = eta.jacobian(z);
        for (int i = 0; i < 2; ++i) {
            const Vec2 g = oracle::gradient([&](cplx w) { return i == 0 ? eta.value(w).x : eta.value(w).y; }, z, 1e-7);
            EXPECT_NEAR(j.m[static_cast<std::size_t>(i)][0], g.x, 1e-6);
            EXPECT_NEAR(j.m[static_cast<std::size_t>(i)][1], g.y, 1e-6);
        }
    }
}

TEST(Core, DomainPredicates) {
    const Domain a = Domain::annulus(0.0, 0.5, 1.0);
    EXPECT_TRUE(a.contains(0.75));
    EXPECT_FALSE(a.contains(0.25));
    EXPECT_FALSE(a.contains_disk(0.0, 0.1));
    EXPECT_TRUE(a.contains_disk(0.75, 0.2));
    EXPECT_FALSE(a.contains_disk(0.75, 0.3));
    EXPECT_DOUBLE_EQ(interface_tolerance(Domain::disk(0.0, 2.0)), 2e-9);
}
