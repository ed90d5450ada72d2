#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sturmian/analysis.hpp"

#include <cmath>
#include <sstream>

using namespace sturmian;

namespace {

const double fib_theta = (3.0 - std::sqrt(5.0)) / 2.0;

FlowPoint at(double energy) {
    FlowPoint p;
    p.energy = energy;
    p.side = Side::Left;
    return p;
}

FlowCurve curve(std::vector<double> energies, bool closed = false) {
    FlowCurve c;
    c.closed = closed;
    for (double e : energies) c.points.push_back(at(e));
    return c;
}

const Gap unit_gap{0.0, 1.0, 0.5, std::nullopt};

}  // namespace

TEST_CASE("modular inverse") {
    CHECK(inverse_mod(377, 987) * 377 % 987 == 1);
    CHECK(inverse_mod(2, 5) == 3);
    CHECK_THROWS_AS(inverse_mod(3, 9), std::invalid_argument);
}

TEST_CASE("model factories need an approximant") {
    CHECK_THROWS_AS(Model::sturmian(CutProjectParams::irrational(fib_theta)), std::invalid_argument);
    const Model m = Model::smoothed(CutProjectParams::approximant(34, 89), 0.1);
    CHECK(m.period() == 89);
    CHECK(parse_model_kind("augmented") == ModelKind::Augmented);
    CHECK(to_string(ModelKind::Smoothed) == "smoothed");
    CHECK_THROWS_AS(parse_model_kind("kohmoto"), std::invalid_argument);
}

TEST_CASE("ids") {
    Spectrum s{{-std::sqrt(2.0), 0.0, std::sqrt(2.0)}, 1e-12, 3};
    CHECK(ids(s, -10.0) == 0.0);
    CHECK(ids(s, 10.0) == 1.0);
    CHECK(ids(s, 0.1) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("find_gaps on a synthetic two-interval spectrum") {
    BulkSpectrum b;
    b.all = {0.0, 0.5, 1.0, 2.0, 2.5, 3.0};
    b.cover = {{0.0, 1.0}, {2.0, 3.0}};
    b.samples = {{0.0, b.all}};
    b.L = 6;
    const std::vector<Gap> g = find_gaps(b, 0.01);
    REQUIRE(g.size() == 1);
    CHECK(g[0].E0 == 1.0);
    CHECK(g[0].E1 == 2.0);
    CHECK(g[0].ids == doctest::Approx(0.5));
}

TEST_CASE("free chain bulk has no interior gaps") {
    // level spacing 4 pi / L near the band centre drops below 0.01 only for L > 1257
    const auto p = CutProjectParams::approximant(2584, 6765);
    const Model m = Model::sturmian(p);
    OperatorSpec free;
    free.hopping.emplace(1, SlidingBlockCode::constant(1.0));
    free.onsite = SlidingBlockCode::constant(0.0);
    const BulkSpectrum b = bulk_spectrum(m, free, 1);
    CHECK(find_gaps(b, 0.01).empty());
    CHECK_THROWS_AS(bulk_spectrum(m, free, 0), std::invalid_argument);
}

TEST_CASE("gap labels at lattice points") {
    const GapLabel a = gap_label(fib_theta, fib_theta, 50, 1e-6);
    CHECK(a.n == 0);
    CHECK(a.m == 1);
    CHECK(a.reliable);
    const GapLabel b = gap_label(1.0 - fib_theta, fib_theta, 50, 1e-6);
    CHECK(b.n == 1);
    CHECK(b.m == -1);
    const GapLabel c = gap_label(1.0, fib_theta, 50, 1e-6);
    CHECK(c.n == 1);
    CHECK(c.m == 0);
    const GapLabel far = gap_label(0.5, fib_theta, 2, 1e-6);
    CHECK_FALSE(far.reliable);
}

TEST_CASE("Kohmoto approximant gaps carry nonzero labels") {
    const auto p = CutProjectParams::approximant(377, 987);
    const Model m = Model::sturmian(p);
    const BulkSpectrum b = bulk_spectrum(m, OperatorSpec::kohmoto(p), 1);
    CHECK(b.all.size() == 987);
    std::vector<Gap> gaps = find_gaps(b, 0.02);
    label_gaps(gaps, p);
    REQUIRE(!gaps.empty());
    for (const Gap& g : gaps) {
        REQUIRE(g.label);
        CHECK(g.label->reliable);
        CHECK(g.label->m != 0);
        CHECK(std::abs(g.label->m) <= 20);
        CHECK(std::abs(g.ids - (g.label->n + g.label->m * fib_theta)) <= 10.0 / 987.0);
    }
    const std::vector<std::size_t> top = prominent_gaps(gaps, 3);
    CHECK(top.size() == 3);
    CHECK(std::is_sorted(top.begin(), top.end()));
}

TEST_CASE("Sturmian bulk spectrum does not depend on the intercept") {
    const auto p = CutProjectParams::approximant(144, 377);
    Model a = Model::sturmian(p);
    Model b = a;
    b.phi0 = 0.37 / 377.0 + 100.0 / 377.0;
    const OperatorSpec spec = OperatorSpec::kohmoto(p);
    AnalysisTolerances tol;
    const BulkSpectrum sa = bulk_spectrum(a, spec, 1, tol);
    const BulkSpectrum sb = bulk_spectrum(b, spec, 1, tol);
    CHECK(hausdorff_distance(sa.all, sb.all) <= 2 * tol.tol_spec);
}

TEST_CASE("edge side") {
    std::vector<double> psi(40, 0.0);
    psi[0] = 1.0;
    CHECK(edge_side(psi) == Side::Left);
    psi[0] = 0.0;
    psi[39] = 1.0;
    CHECK(edge_side(psi) == Side::Right);
    psi.assign(40, 1.0);
    CHECK(edge_side(psi) == Side::Unknown);
}

TEST_CASE("gap coverage") {
    CHECK(gap_coverage({}, unit_gap, 0.1) == 0.0);
    CHECK(gap_coverage({at(0.5)}, unit_gap, 0.5) == doctest::Approx(1.0));
    CHECK(gap_coverage({at(0.5), at(0.55)}, unit_gap, 0.1) == doctest::Approx(0.25));
    CHECK(gap_coverage({at(1.5)}, unit_gap, 0.1) == 0.0);
}

TEST_CASE("winding estimators on synthetic curves") {
    CHECK(winding_crossings({}, unit_gap) == 0);
    CHECK(winding_displacement({}, unit_gap) == 0);

    const FlowCurve rising = curve({0.02, 0.2, 0.4, 0.6, 0.8, 0.97});
    CHECK(winding_crossings({rising}, unit_gap) == 1);
    CHECK(winding_displacement({rising}, unit_gap) == 1);

    const FlowCurve falling = curve({0.9, 0.5, 0.1});
    CHECK(winding_crossings({falling, falling}, unit_gap) == -2);
    CHECK(winding_displacement({falling, falling}, unit_gap) == -2);

    // a bump that returns to its own edge does not wind
    const FlowCurve bump = curve({0.05, 0.7, 0.06});
    CHECK(winding_crossings({bump}, unit_gap) == 0);
    CHECK(winding_displacement({bump}, unit_gap) == 0);

    // closed loops contribute nothing
    const FlowCurve loop = curve({0.3, 0.7, 0.6}, true);
    CHECK(winding_crossings({loop}, unit_gap) == 0);
    CHECK(displacement_sum({loop}, unit_gap) == doctest::Approx(0.0));

    // a sample exactly on the midline is handled by shifting the level
    const FlowCurve touching = curve({0.1, 0.5, 0.9});
    CHECK(winding_crossings({touching}, unit_gap) == 1);

    // a curve that stops in the middle of the gap is under-resolved
    const FlowCurve stuck = curve({0.05, 0.5});
    CHECK_THROWS_AS(winding_displacement({stuck}, unit_gap), UnderResolvedSweep);
    try {
        (void)winding_displacement({stuck}, unit_gap);
    } catch (const UnderResolvedSweep& e) {
        CHECK(e.raw() == doctest::Approx(0.5));
        CHECK(std::string(e.what()).find("under-resolved sweep; refine grid") != std::string::npos);
    }
}

TEST_CASE("boundary sweep respects the rank bound") {
    const auto p = CutProjectParams::approximant(144, 377);
    const Model m = Model::sturmian(p);
    const OperatorSpec spec = OperatorSpec::normalized(p);
    const BulkSpectrum b = bulk_spectrum(m, spec, 1);
    std::vector<Gap> gaps = find_gaps(b, 0.02);
    const std::vector<FlowPoint> pts = boundary_sweep(m, spec, gaps, 60);
    std::map<std::pair<std::int64_t, int>, int> count;
    for (const FlowPoint& pt : pts) {
        CHECK(pt.energy > gaps[static_cast<std::size_t>(pt.gap_id)].E0);
        CHECK(pt.energy < gaps[static_cast<std::size_t>(pt.gap_id)].E1);
        CHECK(pt.param == doctest::Approx(p.phase(m.phi0, pt.shift)));
        ++count[{pt.shift, pt.gap_id}];
    }
    CHECK(!pts.empty());
    for (const auto& [key, n] : count) CHECK(n <= 2);
    CHECK_THROWS_AS(boundary_sweep(m, spec, gaps, 0), std::invalid_argument);
}

TEST_CASE("constant word has no in-gap boundary states") {
    const auto p = CutProjectParams::approximant(34, 89);
    const Model m = Model::sturmian(p);
    OperatorSpec free;
    free.hopping.emplace(1, SlidingBlockCode::constant(1.0));
    free.onsite = SlidingBlockCode::constant(0.0);
    const Gap above{2.0, 3.0, 1.0, std::nullopt};
    CHECK(boundary_sweep(m, free, {above}, 10).empty());
}

TEST_CASE("Sturmian flow is refused") {
    const auto p = CutProjectParams::approximant(34, 89);
    CHECK_THROWS_AS(spectral_flow(Model::sturmian(p), OperatorSpec::normalized(p), {unit_gap}),
                    IllDefinedFlow);
}

TEST_CASE("gap without edge states yields no curves") {
    const auto p = CutProjectParams::approximant(34, 89);
    const Model m = Model::smoothed(p, 0.1);
    const Gap above{10.0, 11.0, 1.0, std::nullopt};
    FlowOptions o;
    o.grid = 16;
    const std::vector<FlowSweep> s = spectral_flow(m, OperatorSpec::normalized(p), {above}, o);
    REQUIRE(s.size() == 1);
    CHECK(s[0].curves.empty());
    CHECK(winding_crossings(s[0].curves, above) == 0);
}

TEST_CASE("orientation gap winds once in both models") {
    const auto p = CutProjectParams::approximant(144, 377);
    const OperatorSpec spec = OperatorSpec::normalized(p);
    for (const Model& m : {Model::smoothed(p, 0.1), Model::augmented(p)}) {
        const BulkSpectrum b = bulk_spectrum(m, spec, 64);
        std::vector<Gap> gaps = find_gaps(b, 0.01);
        label_gaps(gaps, p);
        const Gap* g = nullptr;
        for (const Gap& x : gaps) {
            if (x.label && x.label->n == 0 && x.label->m == 1) g = &x;
        }
        REQUIRE(g != nullptr);
        const std::vector<FlowSweep> s = spectral_flow(m, spec, {*g});
        CHECK(std::abs(winding_crossings(s[0].curves, *g)) == 1);
        CHECK(winding_crossings(s[0].curves, *g) == winding_displacement(s[0].curves, *g));
    }
}

TEST_CASE("smoothed in-gap spectrum is continuous in the intercept") {
    const auto p = CutProjectParams::approximant(34, 89);
    const OperatorSpec spec = OperatorSpec::normalized(p);
    const Model m = Model::smoothed(p, 0.1);
    const BulkSpectrum b = bulk_spectrum(m, spec, 64);
    std::vector<Gap> gaps = find_gaps(b, 0.05);
    REQUIRE(!gaps.empty());
    auto in_gap = [&](double phi) {
        const Word w = generate_word({p, SmoothedKind{phi, 0.1}, {0, 88}});
        const HamiltonianMatrix h = build_hamiltonian(w, spec, Boundary::Dirichlet);
        std::vector<double> e;
        for (const Gap& g : gaps) {
            for (double x : eigenvalues_in(h, g.E0 - 0.1, g.E1 + 0.1, 1e-12)) e.push_back(x);
        }
        return e;
    };
    const double phi = 0.3;
    const std::vector<double> base = in_gap(phi);
    REQUIRE(!base.empty());
    double prev = INFINITY;
    for (double delta : {1e-3, 1e-4, 1e-5}) {
        const double d = hausdorff_distance(base, in_gap(phi + delta));
        CHECK(d < prev);
        prev = d;
    }
    CHECK(prev < 1e-3);
}

TEST_CASE("verify_correspondence report and JSON") {
    const auto p = CutProjectParams::approximant(144, 377);
    VerifyOptions o;
    o.bulk_grid = 64;
    const CorrespondenceReport r =
        verify_correspondence(Model::smoothed(p, 0.1), OperatorSpec::normalized(p), "normalized", o);
    CHECK(r.orientation_sign != 0);
    CHECK(r.all_pass());
    CHECK_FALSE(r.numerical_failure());
    for (const GapReport& g : r.gaps) {
        REQUIRE(g.w_displacement);
        CHECK(g.w_crossings == *g.w_displacement);
        CHECK(r.orientation_sign * g.w_crossings == -g.gap.label->m);
    }
    std::ostringstream a, b;
    write_report_json(a, r);
    write_report_json(b, r);
    CHECK(a.str() == b.str());
    const std::string s = a.str();
    const auto e0 = s.find("\"E0\""), e1 = s.find("\"E1\""), id = s.find("\"ids\""), n = s.find("\"n\""),
               m = s.find("\"m\""), wc = s.find("\"w_crossings\""), wd = s.find("\"w_displacement\""),
               ps = s.find("\"pass\"");
    CHECK(e0 < e1);
    CHECK(e1 < id);
    CHECK(id < n);
    CHECK(n < m);
    CHECK(m < wc);
    CHECK(wc < wd);
    CHECK(wd < ps);
    CHECK(s.find("\"theta\": \"144/377\"") != std::string::npos);
}

TEST_CASE("orientation gap missing") {
    const auto p = CutProjectParams::approximant(144, 377);
    VerifyOptions o;
    o.bulk_grid = 8;
    o.min_width = 5.0;
    CHECK_THROWS_AS(verify_correspondence(Model::smoothed(p, 0.1), OperatorSpec::normalized(p), "normalized", o),
                    OrientationGapMissing);
}

TEST_CASE("flow CSV schema") {
    FlowPoint a;
    a.shift = 3;
    a.param = 0.25;
    a.energy = -1.5;
    a.side = Side::Left;
    a.gap_id = 2;
    FlowPoint b = a;
    b.kind = ParamKind::T;
    b.k = 7;
    b.param = 0.5;
    b.side = Side::Right;
    std::ostringstream os;
    write_flow_csv(os, {a, b});
    CHECK(os.str() ==
          "shift,param_kind,k,param,energy,side,gap_id\n"
          "3,phi,,0.25,-1.5,left,2\n"
          "3,t,7,0.5,-1.5,right,2\n");
}
