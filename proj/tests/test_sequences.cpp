#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sturmian/sequences.hpp"

#include <cmath>
#include <random>
#include <set>
#include <sstream>

using namespace sturmian;

namespace {

const double fib_theta = (3.0 - std::sqrt(5.0)) / 2.0;

Word sturmian_word(const CutProjectParams& p, double phi, std::int64_t n0, std::int64_t n1) {
    return generate_word({p, SturmianKind{phi}, {n0, n1}});
}

Word constant_word(double v, std::int64_t n0, std::int64_t n1) {
    Word w;
    w.offset = n0;
    w.letters.assign(static_cast<std::size_t>(n1 - n0 + 1), v);
    return w;
}

}  // namespace

TEST_CASE("frac") {
    CHECK(frac(1.25) == 0.25);
    CHECK(frac(-0.25) == 0.75);
    CHECK(frac(3.0) == 0.0);
    CHECK(frac(-1e-300) < 1.0);
}

TEST_CASE("continued fraction approximants of the golden mean") {
    const Approximant a = continued_fraction_approximant(fib_theta, 10000);
    CHECK(a.p == 2584);
    CHECK(a.q == 6765);
    CHECK_FALSE(a.rational_input);
    const Approximant b = continued_fraction_approximant(fib_theta, 1000);
    CHECK(b.p == 377);
    CHECK(b.q == 987);
    const Approximant c = continued_fraction_approximant(fib_theta, 5);
    CHECK(c.p == 2);
    CHECK(c.q == 5);
}

TEST_CASE("best approximation against exhaustive search") {
    for (std::int64_t q_max : {5, 13, 50, 200, 1000}) {
        double best = INFINITY;
        for (std::int64_t q = 1; q <= q_max; ++q) {
            const double p = std::round(fib_theta * static_cast<double>(q));
            best = std::min(best, std::abs(q * fib_theta - p));
        }
        const Approximant a = continued_fraction_approximant(fib_theta, q_max);
        CHECK(std::abs(a.q * fib_theta - a.p) == doctest::Approx(best).epsilon(1e-9));
    }
}

TEST_CASE("rational theta is flagged and returned exactly") {
    const Approximant a = continued_fraction_approximant(3.0 / 8.0, 100);
    CHECK(a.p == 3);
    CHECK(a.q == 8);
    CHECK(a.rational_input);
    CHECK_THROWS_AS(CutProjectParams::irrational(3.0 / 8.0), std::invalid_argument);
    CHECK_NOTHROW(CutProjectParams::irrational(fib_theta));
    CHECK_THROWS_AS(continued_fraction_approximant(1.5, 10), std::invalid_argument);
}

TEST_CASE("default letters are a = theta and b = 1 + theta") {
    const auto p = CutProjectParams::irrational(fib_theta);
    CHECK(p.a() == doctest::Approx(fib_theta));
    CHECK(p.b() == doctest::Approx(1.0 + fib_theta));
}

TEST_CASE("approximant phase arithmetic is exact") {
    const auto p = CutProjectParams::approximant(377, 987);
    CHECK(p.phase(0.0, 987) == 0.0);
    CHECK(p.phase(0.0, 1) == doctest::Approx(377.0 / 987.0));
    CHECK(p.phase(0.25, -987 * 1000000LL) == 0.25);
    CHECK(p.singular_intercept(1) == doctest::Approx(377.0 / 987.0));
    CHECK_THROWS_AS(CutProjectParams::approximant(3, 9), std::invalid_argument);
}

TEST_CASE("Sturmian words are two-valued") {
    const auto p = CutProjectParams::irrational(fib_theta);
    const Word w = sturmian_word(p, 0.3, 0, 9999);
    std::set<double> values(w.letters.begin(), w.letters.end());
    REQUIRE(values.size() == 2);
    CHECK(*values.begin() == p.a());
    CHECK(*values.rbegin() == p.b());
}

TEST_CASE("singular intercept is refused with the offending index") {
    const auto p = CutProjectParams::irrational(fib_theta);
    const double phi = frac(-5.0 * fib_theta);  // {phi + 5 theta} = 0
    try {
        (void)sturmian_word(p, phi, -20, 20);
        FAIL("expected SingularInterceptError");
    } catch (const SingularInterceptError& e) {
        CHECK((e.index() == 5 || e.index() == 4));
    }
    CHECK(find_singular_index(p, phi, {-20, 20}).has_value());
    CHECK_FALSE(find_singular_index(p, 0.3, {-20, 20}).has_value());
}

TEST_CASE("smoothed letters converge to Sturmian letters") {
    const auto p = CutProjectParams::irrational(fib_theta);
    const Window win{-100, 100};
    // distance of the orbit to the singular set bounds the smoothing error
    auto margin_of = [&](double phi) {
        double margin = INFINITY;
        for (std::int64_t n = win.n0; n <= win.n1; ++n) {
            const double x = p.phase(phi, n);
            for (double s0 : {0.0, fib_theta, 1.0}) margin = std::min(margin, std::abs(x - s0));
        }
        return margin;
    };
    double phi = 0.0, margin = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const double cand = (i + 0.5) / 1000.0;
        if (margin_of(cand) > margin) {
            margin = margin_of(cand);
            phi = cand;
        }
    }
    REQUIRE(margin >= 1e-3);
    const Word s = generate_word({p, SturmianKind{phi}, win});
    const Word e6 = generate_word({p, SmoothedKind{phi, 1e-6}, win});
    double dist = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) dist = std::max(dist, std::abs(s.letters[i] - e6.letters[i]));
    CHECK(dist <= 1e-6 * p.gamma());

    double prev = INFINITY;
    for (double eps : {0.1, 0.03, 0.01, 0.001}) {
        const Word e = generate_word({p, SmoothedKind{phi, eps}, win});
        double d = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) d = std::max(d, std::abs(s.letters[i] - e.letters[i]));
        CHECK(d < prev);
        prev = d;
    }
}

TEST_CASE("one-sided limits differ by one adjacent flip") {
    const auto p = CutProjectParams::irrational(fib_theta);
    const OneSidedLimits lim = one_sided_limits(p, 0, {-50, 50});
    REQUIRE(lim.flip_in_window);
    std::vector<std::int64_t> diff;
    for (std::int64_t n = -50; n <= 50; ++n) {
        if (lim.minus.at(n) != lim.plus.at(n)) diff.push_back(n);
    }
    REQUIRE(diff.size() == 2);
    CHECK(diff[1] == diff[0] + 1);
    CHECK(lim.flip_index == diff[0]);
    CHECK(lim.minus.at(diff[0]) == lim.plus.at(diff[1]));
    CHECK(lim.minus.at(diff[1]) == lim.plus.at(diff[0]));

    const Word t0 = interpolate(lim.minus, lim.plus, 0.0);
    CHECK(t0.letters == lim.minus.letters);
    const Word t1 = interpolate(lim.minus, lim.plus, 1.0);
    CHECK(t1.letters == lim.plus.letters);
}

TEST_CASE("flip outside the window gives identical limits") {
    const auto p = CutProjectParams::irrational(fib_theta);
    const OneSidedLimits lim = one_sided_limits(p, 500, {-50, 50});
    CHECK_FALSE(lim.flip_in_window);
    CHECK(lim.minus.letters == lim.plus.letters);
}

TEST_CASE("augmented midpoint and pair conservation") {
    const auto p = CutProjectParams::irrational(fib_theta);
    const Window win{-30, 30};
    const Word mid = generate_word({p, AugmentedKind{0, 0.5}, win});
    const OneSidedLimits lim = one_sided_limits(p, 0, win);
    const std::int64_t f = *lim.flip_index;
    const double half = 0.5 * (p.a() + p.b());
    CHECK(mid.at(f) == doctest::Approx(half).epsilon(1e-15));
    CHECK(mid.at(f + 1) == doctest::Approx(half).epsilon(1e-15));
    for (double t : {0.0, 0.1, 0.25, 0.3, 0.5, 0.7, 0.9, 1.0}) {
        const Word w = generate_word({p, AugmentedKind{0, t}, win});
        CHECK(std::abs(w.at(f) + w.at(f + 1) - (p.a() + p.b())) <= 4e-16 * (p.a() + p.b()));
    }
}

TEST_CASE("shift covariance") {
    const auto p = CutProjectParams::irrational(fib_theta);
    const double phi = 0.123;
    const Word w = sturmian_word(p, phi, -100, 100);
    const Word s = sturmian_word(p, frac(phi + fib_theta), -100, 100);
    for (std::int64_t n = -100; n < 100; ++n) CHECK(s.at(n) == w.at(n + 1));
}

TEST_CASE("affine invariance of the symbolic pattern") {
    const auto p1 = CutProjectParams::irrational(fib_theta, 1.0, 1.0);
    const auto p2 = CutProjectParams::irrational(fib_theta, 3.0, -2.0);
    const Word w1 = sturmian_word(p1, 0.41, -300, 300);
    const Word w2 = sturmian_word(p2, 0.41, -300, 300);
    for (std::size_t i = 0; i < w1.size(); ++i) {
        CHECK((w1.letters[i] == p1.b()) == (w2.letters[i] == p2.b()));
    }
}

TEST_CASE("word complexity") {
    const auto p = CutProjectParams::irrational(fib_theta);
    const Word w = sturmian_word(p, 0.3, 0, 9999);
    CHECK(word_complexity(w, 1) == 2);
    CHECK(word_complexity(w, 7) == 8);
    for (std::size_t n = 1; n <= 20; ++n) CHECK(word_complexity(w, n) == n + 1);

    Word ab;
    for (int i = 0; i < 100; ++i) ab.letters.push_back(i % 2 ? 2.0 : 1.0);
    CHECK(word_complexity(ab, 2) == 2);
    CHECK_THROWS_AS(word_complexity(ab, 101), std::invalid_argument);
}

TEST_CASE("sequence metric") {
    const Word x = constant_word(1.0, -20, 20);
    CHECK(sequence_metric(x, x) <= 1.0 / 21.0);

    Word y = x;
    for (std::int64_t k : {-11, 11}) y.letters[static_cast<std::size_t>(k + 20)] = 3.0;
    CHECK(sequence_metric(x, y) == doctest::Approx(1.0 / 11.0));

    Word z = x;
    z.letters[20] = 2.0;
    CHECK(sequence_metric(x, z) == doctest::Approx(1.0));

    const Word far = constant_word(1.0, 5, 10);
    CHECK_THROWS_AS(sequence_metric(x, far), std::invalid_argument);
}

TEST_CASE("Hausdorff distance") {
    const std::vector<double> a{0.0, 1.0, 2.0};
    CHECK(hausdorff_distance(a, a) == 0.0);
    const std::vector<double> zero{0.0}, one{1.0};
    CHECK(hausdorff_distance(zero, one) == 1.0);
    const std::vector<double> b{0.0, 2.5};
    CHECK(hausdorff_distance(a, b) == doctest::Approx(1.0));
    CHECK_THROWS_AS(hausdorff_distance(std::span<const double>(), std::span<const double>(a)),
                    std::invalid_argument);
    // generic metric agrees with the real-line specialisation
    const Metric<double> d = [](const double& u, const double& v) { return std::abs(u - v); };
    CHECK(hausdorff_distance<double>(a, b, d) == doctest::Approx(1.0));
}

TEST_CASE("smoothed word sets approach the augmented word set") {
    const auto p = CutProjectParams::irrational(fib_theta);
    const Window win{-40, 40};
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::vector<Word> aug;
    for (int i = 0; i < 1000; ++i) {
        const double phi = uni(rng);
        if (find_singular_index(p, phi, win)) continue;
        aug.push_back(generate_word({p, SturmianKind{phi}, win}));
    }
    for (int k = -40; k <= 40; k += 4) {
        for (double t : {0.25, 0.5, 0.75}) aug.push_back(generate_word({p, AugmentedKind{k, t}, win}));
    }
    const Metric<Word> metric = [](const Word& u, const Word& v) { return sequence_metric(u, v); };
    std::vector<double> dist;
    for (double eps : {0.1, 0.01}) {
        std::vector<Word> sm;
        for (int i = 0; i < 1000; ++i) {
            sm.push_back(generate_word({p, SmoothedKind{(i + 0.5) / 1000.0, eps}, win}));
        }
        dist.push_back(hausdorff_distance<Word>(sm, aug, metric));
    }
    CHECK(dist[1] < dist[0]);
}

TEST_CASE("word CSV round trip") {
    const auto p = CutProjectParams::irrational(fib_theta);
    const Word w = generate_word({p, SmoothedKind{0.3, 0.1}, {-5, 20}});
    std::stringstream ss;
    write_word_csv(ss, w);
    CHECK(ss.str().rfind("index,letter\n", 0) == 0);
    const Word r = read_word_csv(ss);
    CHECK(r.offset == w.offset);
    CHECK(r.letters == w.letters);
}
