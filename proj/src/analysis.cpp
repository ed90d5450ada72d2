#include "sturmian/analysis.hpp"

#include "sturmian/io.hpp"
#include "sturmian/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>

namespace sturmian {

std::string_view to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::Sturmian: return "sturmian";
        case ModelKind::Augmented: return "augmented";
        case ModelKind::Smoothed: return "smoothed";
    }
    return "unknown";
}

ModelKind parse_model_kind(std::string_view text) {
    if (text == "sturmian") return ModelKind::Sturmian;
    if (text == "augmented") return ModelKind::Augmented;
    if (text == "smoothed") return ModelKind::Smoothed;
    throw std::invalid_argument("unknown model '" + std::string(text) + "'");
}

std::string_view to_string(Side side) {
    switch (side) {
        case Side::Left: return "left";
        case Side::Right: return "right";
        case Side::Unknown: return "unknown";
    }
    return "unknown";
}

namespace {

void require_approximant(const CutProjectParams& params) {
    if (!params.is_approximant()) {
        throw std::invalid_argument("model: analysis needs a periodic approximant p/q");
    }
}

}  // namespace

Model Model::sturmian(const CutProjectParams& params) {
    require_approximant(params);
    return {params, ModelKind::Sturmian, 0.1, 0.5 / static_cast<double>(params.period()), 0};
}

Model Model::augmented(const CutProjectParams& params) {
    require_approximant(params);
    return {params, ModelKind::Augmented, 0.1, 0.5 / static_cast<double>(params.period()), 0};
}

Model Model::smoothed(const CutProjectParams& params, double epsilon) {
    require_approximant(params);
    if (!(epsilon > 0.0)) throw std::invalid_argument("model: epsilon must be positive");
    return {params, ModelKind::Smoothed, epsilon, 0.5 / static_cast<double>(params.period()), 0};
}

std::int64_t inverse_mod(std::int64_t p, std::int64_t q) {
    std::int64_t r0 = q, r1 = ((p % q) + q) % q;
    std::int64_t s0 = 0, s1 = 1;
    while (r1 != 0) {
        const std::int64_t f = r0 / r1;
        std::tie(r0, r1) = std::make_pair(r1, r0 - f * r1);
        std::tie(s0, s1) = std::make_pair(s1, s0 - f * s1);
    }
    if (r0 != 1) throw std::invalid_argument("inverse_mod: p and q are not coprime");
    return ((s0 % q) + q) % q;
}

// ------------------------------ words ---------------------------------------

namespace {

// One period [0, q-1] of the periodic word at a bulk parameter.
Word bulk_word(const Model& model, double param) {
    const Window window{0, model.period() - 1};
    switch (model.kind) {
        case ModelKind::Sturmian:
            return generate_word({model.params, SturmianKind{param}, window});
        case ModelKind::Smoothed:
            return generate_word({model.params, SmoothedKind{param, model.epsilon}, window});
        case ModelKind::Augmented:
            return generate_word({model.params, AugmentedKind{model.k, param}, window});
    }
    throw std::logic_error("bulk_word");
}

// Reference word of a model: the one boundary sweeps shift around.
Word reference_word(const Model& model) {
    return bulk_word(model, model.kind == ModelKind::Augmented ? 0.5 : model.phi0);
}

// Word over [-r, q-1+r] at the sweep coordinate u, plus the parameter it stands for.
Word flow_word(const Model& model, double u, int r, FlowPoint& meta) {
    const std::int64_t q = model.period();
    const Window window{-r, q - 1 + r};
    meta.u = u;
    if (model.kind == ModelKind::Smoothed) {
        meta.kind = ParamKind::Phi;
        meta.param = u;
        return generate_word({model.params, SmoothedKind{u, model.epsilon}, window});
    }
    if (model.kind != ModelKind::Augmented) {
        throw IllDefinedFlow(
            "spectral flow of the Sturmian model is ill-defined: its Dirichlet eigenvalues jump "
            "at every singular intercept, so no winding number can be read off; use the "
            "smoothed or augmented model");
    }
    const auto j = static_cast<std::int64_t>(std::floor(u));
    const double t = u - static_cast<double>(j);
    if (t == 0.0) {
        // arc between the flips j-1 and j; equals t = 0 of flip j
        meta.kind = ParamKind::Phi;
        meta.param = frac((static_cast<double>(j) - 0.5) / static_cast<double>(q));
        meta.k = 0;
        return sturmian_letters(model.params, meta.param, window);
    }
    const std::int64_t k =
        static_cast<std::int64_t>((static_cast<__int128>(((j % q) + q) % q) *
                                   inverse_mod(model.params.numerator(), q)) % q);
    meta.kind = ParamKind::T;
    meta.k = k;
    meta.param = t;
    const OneSidedLimits limits = one_sided_limits(model.params, k, window);
    return interpolate(limits.minus, limits.plus, t);
}

}  // namespace

// ------------------------------ bulk & gaps ---------------------------------

std::size_t BulkSpectrum::count_below(double energy) const {
    return static_cast<std::size_t>(std::lower_bound(all.begin(), all.end(), energy) - all.begin());
}

BulkSpectrum bulk_spectrum(const Model& model, const OperatorSpec& spec, std::size_t grid,
                           const AnalysisTolerances& tol, std::size_t threads) {
    if (grid == 0) throw std::invalid_argument("bulk_spectrum: empty grid");
    std::vector<double> params;
    switch (model.kind) {
        case ModelKind::Sturmian:
            params.push_back(model.phi0);
            break;
        case ModelKind::Smoothed:
            for (std::size_t j = 0; j < grid; ++j) {
                params.push_back(static_cast<double>(j) / static_cast<double>(grid));
            }
            break;
        case ModelKind::Augmented:
            if (grid == 1) {
                params.push_back(0.5);
            } else {
                for (std::size_t j = 0; j < grid; ++j) {
                    params.push_back(static_cast<double>(j) / static_cast<double>(grid - 1));
                }
            }
            break;
    }
    BulkSpectrum out;
    out.samples.resize(params.size());
    out.L = static_cast<std::size_t>(model.period());
    out.tol = tol.tol_spec;
    parallel_for(params.size(), threads, [&](std::size_t i) {
        const Word w = bulk_word(model, params[i]);
        const HamiltonianMatrix m = build_hamiltonian(w, spec, Boundary::Periodic);
        out.samples[i] = {params[i], full_spectrum(m, tol.tol_spec).eigenvalues};
    });
    for (const auto& s : out.samples) out.all.insert(out.all.end(), s.eigenvalues.begin(), s.eigenvalues.end());
    std::sort(out.all.begin(), out.all.end());
    for (double e : out.all) {
        if (!out.cover.empty() && e - tol.res_E <= out.cover.back().second) {
            out.cover.back().second = e + tol.res_E;
        } else {
            out.cover.emplace_back(e - tol.res_E, e + tol.res_E);
        }
    }
    return out;
}

double ids(const Spectrum& spectrum, double energy) {
    if (spectrum.L == 0) return 0.0;
    const auto c = std::lower_bound(spectrum.eigenvalues.begin(), spectrum.eigenvalues.end(), energy) -
                   spectrum.eigenvalues.begin();
    return static_cast<double>(c) / static_cast<double>(spectrum.L);
}

double ids(const BulkSpectrum& bulk, double energy) {
    if (bulk.L == 0 || bulk.samples.empty()) return 0.0;
    return static_cast<double>(bulk.count_below(energy)) /
           (static_cast<double>(bulk.L) * static_cast<double>(bulk.samples.size()));
}

std::vector<Gap> find_gaps(const BulkSpectrum& bulk, double min_width) {
    if (bulk.all.empty()) throw std::invalid_argument("find_gaps: empty spectrum");
    std::vector<Gap> gaps;
    for (std::size_t i = 0; i + 1 < bulk.cover.size(); ++i) {
        Gap g;
        // eigenvalue edges rather than the padded cover
        const auto hi = std::upper_bound(bulk.all.begin(), bulk.all.end(), bulk.cover[i].second);
        const auto lo = std::lower_bound(bulk.all.begin(), bulk.all.end(), bulk.cover[i + 1].first);
        g.E0 = *(hi - 1);
        g.E1 = *lo;
        if (g.width() < min_width) continue;
        g.ids = ids(bulk, g.mid());
        gaps.push_back(g);
    }
    return gaps;
}

GapLabel gap_label(double ids_value, double theta, int m_max, double label_tol) {
    if (!(ids_value >= 0.0 && ids_value <= 1.0)) {
        throw std::invalid_argument("gap_label: ids must lie in [0,1]");
    }
    constexpr double slack = 1e-12;
    GapLabel best{0, 0, INFINITY, false};
    bool found = false;
    for (int am = 0; am <= m_max; ++am) {
        for (int sign : {1, -1}) {
            if (am == 0 && sign < 0) continue;
            const int m = sign * am;
            const double base = ids_value - m * theta;
            for (double nn : {std::floor(base), std::floor(base) + 1.0}) {
                const int n = static_cast<int>(nn);
                if (n < -m_max || n > m_max + 1) continue;
                const double value = n + m * theta;
                if (value < -slack || value > 1.0 + slack) continue;
                const double r = std::abs(ids_value - value);
                // strict improvement required, so |m| ties keep the smaller |m|
                if (!found || r < best.residual - 1e-15) {
                    best = {n, m, r, true};
                    found = true;
                }
            }
        }
    }
    best.reliable = found && best.residual <= label_tol;
    return best;
}

void label_gaps(std::vector<Gap>& gaps, const CutProjectParams& params, int m_max) {
    const double label_tol =
        params.is_approximant() ? 10.0 / static_cast<double>(params.period()) : 1e-6;
    for (Gap& g : gaps) g.label = gap_label(std::clamp(g.ids, 0.0, 1.0), params.theta(), m_max, label_tol);
}

std::vector<std::size_t> prominent_gaps(const std::vector<Gap>& gaps, std::size_t count) {
    std::vector<std::size_t> order(gaps.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return gaps[a].width() > gaps[b].width();
    });
    if (order.size() > count) order.resize(count);
    std::sort(order.begin(), order.end());
    return order;
}

// ------------------------------ boundary ------------------------------------

Side edge_side(std::span<const double> psi, double side_frac) {
    const std::size_t L = psi.size();
    if (L == 0) return Side::Unknown;
    const std::size_t quarter = (L + 3) / 4;
    double left = 0.0, right = 0.0, total = 0.0;
    for (std::size_t i = 0; i < L; ++i) {
        const double w = psi[i] * psi[i];
        total += w;
        if (i < quarter) left += w;
        if (i + quarter >= L) right += w;
    }
    if (total > 0.0) {
        left /= total;
        right /= total;
    }
    if (left >= side_frac) return Side::Left;
    if (right >= side_frac) return Side::Right;
    return Side::Unknown;
}

namespace {

struct Weights {
    double left{0.0};
    double right{0.0};
};

Weights quarter_weights(std::span<const double> v) {
    const std::size_t L = v.size();
    const std::size_t quarter = (L + 3) / 4;
    Weights w;
    for (std::size_t i = 0; i < quarter; ++i) w.left += v[i] * v[i];
    for (std::size_t i = L - quarter; i < L; ++i) w.right += v[i] * v[i];
    return w;
}

Side side_of(const Weights& w, double side_frac) {
    if (w.left >= side_frac) return Side::Left;
    if (w.right >= side_frac) return Side::Right;
    return Side::Unknown;
}

double rayleigh(const HamiltonianMatrix& m, std::span<const double> v) {
    const std::vector<double> mv = multiply(m, v);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        num += v[i] * mv[i];
        den += v[i] * v[i];
    }
    return num / den;
}

struct Localised {
    InGapState state;
    std::vector<double> v;
};

// Rotates a nearly degenerate eigenspace into its most left- and
// right-localised combinations.
std::vector<Localised> localise(const HamiltonianMatrix& m,
                                const std::vector<std::vector<double>>& basis, double side_frac) {
    const std::size_t k = basis.size();
    const std::size_t L = m.size();
    const std::size_t quarter = (L + 3) / 4;
    std::vector<double> p(k * k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = 0.0;
            for (std::size_t n = 0; n < quarter; ++n) s += basis[i][n] * basis[j][n];
            p[i * k + j] = p[j * k + i] = s;
        }
    }
    const EigenPairs rot = symmetric_eigen_small(p, k);
    std::vector<Localised> out;
    for (std::size_t c = 0; c < k; ++c) {
        std::vector<double> v(L, 0.0);
        for (std::size_t i = 0; i < k; ++i) {
            for (std::size_t n = 0; n < L; ++n) v[n] += rot.vectors[c][i] * basis[i][n];
        }
        double nv = 0.0;
        for (double x : v) nv += x * x;
        nv = std::sqrt(nv);
        for (double& x : v) x /= nv;
        const Weights w = quarter_weights(v);
        out.push_back({{rayleigh(m, v), side_of(w, side_frac), w.left, w.right}, std::move(v)});
    }
    return out;
}

}  // namespace

std::vector<InGapState> in_gap_states(const HamiltonianMatrix& m, const Gap& gap,
                                      const AnalysisTolerances& tol) {
    std::vector<double> vals = eigenvalues_in(m, gap.E0, gap.E1, tol.tol_spec);
    vals.erase(std::remove_if(vals.begin(), vals.end(),
                              [&](double e) { return !(e > gap.E0 && e < gap.E1); }),
               vals.end());
    const double cluster = 20.0 * tol.tol_spec;
    const double mix = std::max(1e-4 * gap.width(), cluster);
    std::vector<Localised> items;
    std::size_t i = 0;
    while (i < vals.size()) {
        std::size_t j = i + 1;
        while (j < vals.size() && vals[j] - vals[j - 1] <= mix) ++j;
        std::vector<std::vector<double>> basis;
        bool degenerate = false;
        for (std::size_t a = i; a < j && !degenerate; ++a) {
            try {
                basis.push_back(eigenvector(m, vals[a], tol.tol_spec));
            } catch (const ClusteredEigenvalueError&) {
                degenerate = true;
            }
        }
        if (degenerate) {
            basis = cluster_subspace(m, vals[i] - 10.0 * tol.tol_spec,
                                     vals[j - 1] + 10.0 * tol.tol_spec, tol.tol_spec)
                        .vectors;
        }
        if (basis.size() == 1) {
            const Weights w = quarter_weights(basis[0]);
            items.push_back({{vals[i], side_of(w, tol.side_frac), w.left, w.right}, std::move(basis[0])});
        } else {
            for (Localised& l : localise(m, basis, tol.side_frac)) items.push_back(std::move(l));
        }
        i = j;
    }
    auto by_energy = [](const Localised& a, const Localised& b) { return a.state.energy < b.state.energy; };
    std::stable_sort(items.begin(), items.end(), by_energy);

    // A left and a right edge state that hybridise near a crossing are both
    // unsided; rotating the pair recovers the two edge branches.
    for (std::size_t a = 0; a < items.size(); ++a) {
        if (items[a].state.side != Side::Unknown) continue;
        std::size_t b = items.size();
        double best = tol.jump_tol * gap.width();
        for (std::size_t c : {a - 1, a + 1}) {
            if (c >= items.size()) continue;
            const double d = std::abs(items[c].state.energy - items[a].state.energy);
            if (d <= best) {
                best = d;
                b = c;
            }
        }
        if (b == items.size()) continue;
        std::vector<Localised> pair = localise(m, {items[a].v, items[b].v}, tol.side_frac);
        if (pair[0].state.side == Side::Unknown || pair[1].state.side == Side::Unknown) continue;
        items[a] = std::move(pair[0]);
        items[b] = std::move(pair[1]);
    }
    std::stable_sort(items.begin(), items.end(), by_energy);
    std::vector<InGapState> out;
    out.reserve(items.size());
    for (const Localised& l : items) out.push_back(l.state);
    return out;
}

std::vector<FlowPoint> boundary_sweep(const Model& model, const OperatorSpec& spec,
                                      const std::vector<Gap>& gaps, std::size_t shifts,
                                      const AnalysisTolerances& tol, std::size_t threads) {
    if (shifts == 0) throw std::invalid_argument("boundary_sweep: need at least one shift");
    const Word base = reference_word(model);
    const auto q = static_cast<std::int64_t>(base.size());
    const int r = spec.max_range();
    std::vector<std::vector<FlowPoint>> per_shift(shifts);
    parallel_for(shifts, threads, [&](std::size_t s) {
        const auto n = static_cast<std::int64_t>(s);
        Word w;
        w.offset = -r;
        w.letters.resize(static_cast<std::size_t>(q + 2 * r));
        for (std::int64_t i = 0; i < q + 2 * r; ++i) {
            w.letters[static_cast<std::size_t>(i)] =
                base.letters[static_cast<std::size_t>((((i + n - r) % q) + q) % q)];
        }
        const HamiltonianMatrix m = build_hamiltonian(w, spec, Boundary::Dirichlet);
        const double phi = model.params.phase(model.phi0, n);
        for (std::size_t g = 0; g < gaps.size(); ++g) {
            for (const InGapState& st : in_gap_states(m, gaps[g], tol)) {
                FlowPoint p;
                p.shift = n;
                p.kind = ParamKind::Phi;
                p.param = phi;
                p.u = phi;
                p.energy = st.energy;
                p.side = st.side;
                p.gap_id = static_cast<int>(g);
                per_shift[s].push_back(p);
            }
        }
    });
    std::vector<FlowPoint> out;
    for (auto& v : per_shift) out.insert(out.end(), v.begin(), v.end());
    return out;
}

double gap_coverage(const std::vector<FlowPoint>& points, const Gap& gap, double radius) {
    if (!(radius > 0.0)) throw std::invalid_argument("gap_coverage: radius must be positive");
    std::vector<std::pair<double, double>> iv;
    for (const FlowPoint& p : points) {
        if (!(p.energy > gap.E0 && p.energy < gap.E1)) continue;
        iv.emplace_back(std::max(gap.E0, p.energy - radius), std::min(gap.E1, p.energy + radius));
    }
    std::sort(iv.begin(), iv.end());
    double covered = 0.0;
    double lo = 0.0, hi = 0.0;
    bool open = false;
    for (const auto& [a, b] : iv) {
        if (open && a <= hi) {
            hi = std::max(hi, b);
        } else {
            if (open) covered += hi - lo;
            lo = a;
            hi = b;
            open = true;
        }
    }
    if (open) covered += hi - lo;
    return covered / gap.width();
}

// ------------------------------ spectral flow -------------------------------

namespace {

struct Sample {
    FlowPoint meta;
    std::vector<std::vector<InGapState>> states;  // per requested gap
};

Sample evaluate(const Model& model, const OperatorSpec& spec, double u,
                const std::vector<Gap>& gaps, const AnalysisTolerances& tol) {
    Sample s;
    const Word w = flow_word(model, u, spec.max_range(), s.meta);
    const HamiltonianMatrix m = build_hamiltonian(w, spec, Boundary::Dirichlet);
    s.states.reserve(gaps.size());
    for (const Gap& g : gaps) s.states.push_back(in_gap_states(m, g, tol));
    return s;
}

std::vector<double> left_energies(const std::vector<InGapState>& states) {
    std::vector<double> e;
    for (const auto& st : states) {
        if (st.side == Side::Left) e.push_back(st.energy);
    }
    return e;
}

struct Node {
    FlowPoint meta;
    std::vector<InGapState> states;
    std::vector<double> left;
};

struct MatchResult {
    bool ok{false};
    bool split{false};
    std::vector<int> succ;
};

// Order-preserving assignment of Left energies between neighbouring samples.
// States may appear or vanish only at the ends of the list and near a gap edge.
MatchResult match(const std::vector<double>& A, const std::vector<double>& B, const Gap& gap,
                  const AnalysisTolerances& tol, bool final_level) {
    const double W = gap.width();
    const double jump = tol.jump_tol * W;
    const double edge = tol.edge_snap * W;
    const double confirm = 0.02 * W;
    const int nA = static_cast<int>(A.size());
    const int nB = static_cast<int>(B.size());

    struct Candidate {
        int unmatched;
        double max_jump;
        double edge_distance;
        int a0, b0, c;
    };
    std::vector<Candidate> cands;
    for (int a0 = 0; a0 <= std::min(2, nA); ++a0) {
        for (int a1 = 0; a1 <= std::min(2, nA - a0); ++a1) {
            for (int b0 = 0; b0 <= std::min(2, nB); ++b0) {
                for (int b1 = 0; b1 <= std::min(2, nB - b0); ++b1) {
                    const int c = nA - a0 - a1;
                    if (c != nB - b0 - b1) continue;
                    bool valid = true;
                    double far = 0.0;
                    auto low = [&](double e) {
                        far = std::max(far, e - gap.E0);
                        return e - gap.E0 <= edge;
                    };
                    auto high = [&](double e) {
                        far = std::max(far, gap.E1 - e);
                        return gap.E1 - e <= edge;
                    };
                    for (int i = 0; i < a0 && valid; ++i) valid = low(A[i]);
                    for (int i = nA - a1; i < nA && valid; ++i) valid = high(A[i]);
                    for (int i = 0; i < b0 && valid; ++i) valid = low(B[i]);
                    for (int i = nB - b1; i < nB && valid; ++i) valid = high(B[i]);
                    double mj = 0.0;
                    for (int i = 0; i < c && valid; ++i) {
                        const double d = std::abs(A[a0 + i] - B[b0 + i]);
                        mj = std::max(mj, d);
                        valid = d <= jump;
                    }
                    if (valid) cands.push_back({a0 + a1 + b0 + b1, mj, far, a0, b0, c});
                }
            }
        }
    }
    MatchResult res;
    res.succ.assign(A.size(), -1);
    if (cands.empty()) {
        if (final_level) {
            res.ok = true;
            res.split = true;
        }
        return res;
    }
    std::stable_sort(cands.begin(), cands.end(), [](const Candidate& x, const Candidate& y) {
        if (x.unmatched != y.unmatched) return x.unmatched < y.unmatched;
        return x.max_jump < y.max_jump;
    });
    const Candidate& best = cands.front();
    const bool tie = cands.size() > 1 && cands[1].unmatched == best.unmatched;
    const bool unconfirmed = best.unmatched > 0 && best.edge_distance > confirm;
    if ((tie || unconfirmed) && !final_level) return res;
    for (int i = 0; i < best.c; ++i) res.succ[static_cast<std::size_t>(best.a0 + i)] = best.b0 + i;
    res.ok = true;
    return res;
}

class SweepBuilder {
public:
    SweepBuilder(const Model& model, const OperatorSpec& spec, const Gap& gap,
                 const AnalysisTolerances& tol)
        : model_(model), spec_(spec), gap_(gap), tol_(tol) {}

    Node make_node(const FlowPoint& meta, std::vector<InGapState> states) const {
        Node n{meta, std::move(states), {}};
        n.left = left_energies(n.states);
        return n;
    }

    Node evaluate_at(double u) const {
        Sample s = evaluate(model_, spec_, u, {gap_}, tol_);
        return make_node(s.meta, std::move(s.states[0]));
    }

    // Appends the nodes strictly after chain.back() up to b (b itself unless it
    // is the seam back to chain[0]) and the links between them.
    void resolve(Node b, double ub, bool seam, int depth) {
        const Node& a = chain_.back();
        const double ua = a.meta.u;
        const bool final_level = depth >= tol_.max_depth;
        MatchResult r = match(a.left, b.left, gap_, tol_, final_level);
        if (r.ok) {
            split_ = split_ || r.split;
            succ_.push_back(std::move(r.succ));
            if (!seam) chain_.push_back(std::move(b));
            return;
        }
        const double um = 0.5 * (ua + ub);
        Node mid = evaluate_at(um);
        resolve(std::move(mid), um, false, depth + 1);
        resolve(std::move(b), ub, seam, depth + 1);
    }

    void run(const std::vector<Node>& base, double period) {
        chain_.push_back(base[0]);
        for (std::size_t s = 0; s < base.size(); ++s) {
            const bool seam = s + 1 == base.size();
            const Node& b = seam ? base[0] : base[s + 1];
            const double ub = seam ? base[0].meta.u + period : b.meta.u;
            resolve(b, ub, seam, 0);
        }
    }

    const std::vector<Node>& chain() const { return chain_; }
    const std::vector<std::vector<int>>& succ() const { return succ_; }
    bool split() const { return split_; }

private:
    const Model& model_;
    const OperatorSpec& spec_;
    const Gap& gap_;
    const AnalysisTolerances& tol_;
    std::vector<Node> chain_;
    std::vector<std::vector<int>> succ_;
    bool split_{false};
};

std::vector<FlowCurve> extract_curves(const std::vector<Node>& chain,
                                      const std::vector<std::vector<int>>& succ, int gap_id) {
    const std::size_t N = chain.size();
    std::vector<std::vector<bool>> has_pred(N), seen(N);
    for (std::size_t s = 0; s < N; ++s) {
        has_pred[s].assign(chain[s].left.size(), false);
        seen[s].assign(chain[s].left.size(), false);
    }
    for (std::size_t s = 0; s < N; ++s) {
        for (int t : succ[s]) {
            if (t >= 0) has_pred[(s + 1) % N][static_cast<std::size_t>(t)] = true;
        }
    }
    auto point = [&](std::size_t s, std::size_t i) {
        FlowPoint p = chain[s].meta;
        p.shift = static_cast<std::int64_t>(s);
        p.energy = chain[s].left[i];
        p.side = Side::Left;
        p.gap_id = gap_id;
        return p;
    };
    std::vector<FlowCurve> curves;
    auto walk = [&](std::size_t s, std::size_t i, bool closed) {
        FlowCurve c;
        c.gap_id = gap_id;
        c.closed = closed;
        while (!seen[s][i]) {
            seen[s][i] = true;
            c.points.push_back(point(s, i));
            const int t = succ[s][i];
            if (t < 0) break;
            s = (s + 1) % N;
            i = static_cast<std::size_t>(t);
        }
        curves.push_back(std::move(c));
    };
    for (std::size_t s = 0; s < N; ++s) {
        for (std::size_t i = 0; i < chain[s].left.size(); ++i) {
            if (!has_pred[s][i] && !seen[s][i]) walk(s, i, false);
        }
    }
    for (std::size_t s = 0; s < N; ++s) {
        for (std::size_t i = 0; i < chain[s].left.size(); ++i) {
            if (!seen[s][i]) walk(s, i, true);
        }
    }
    return curves;
}

}  // namespace

std::vector<FlowSweep> spectral_flow(const Model& model, const OperatorSpec& spec,
                                     const std::vector<Gap>& gaps, const FlowOptions& options,
                                     const AnalysisTolerances& tol) {
    if (model.kind == ModelKind::Sturmian) {
        FlowPoint dummy;
        (void)flow_word(model, 0.0, 0, dummy);  // throws IllDefinedFlow
    }
    std::vector<double> us;
    double period = 1.0;
    if (model.kind == ModelKind::Smoothed) {
        if (options.grid < 2) throw std::invalid_argument("spectral_flow: grid must be >= 2");
        for (std::size_t j = 0; j < options.grid; ++j) {
            us.push_back(static_cast<double>(j) / static_cast<double>(options.grid));
        }
    } else {
        const std::int64_t q = model.period();
        const std::size_t T = std::max<std::size_t>(options.t_per_flip, 1);
        period = static_cast<double>(q);
        for (std::int64_t j = 0; j < q; ++j) {
            for (std::size_t i = 0; i < T; ++i) {
                us.push_back(static_cast<double>(j) + static_cast<double>(i) / static_cast<double>(T));
            }
        }
    }

    std::vector<Sample> base(us.size());
    parallel_for(us.size(), options.threads,
                 [&](std::size_t i) { base[i] = evaluate(model, spec, us[i], gaps, tol); });

    std::vector<FlowSweep> out(gaps.size());
    parallel_for(gaps.size(), options.threads, [&](std::size_t g) {
        SweepBuilder builder(model, spec, gaps[g], tol);
        std::vector<Node> nodes;
        nodes.reserve(base.size());
        for (const Sample& s : base) nodes.push_back(builder.make_node(s.meta, s.states[g]));
        builder.run(nodes, period);

        FlowSweep& sweep = out[g];
        sweep.gap_id = static_cast<int>(g);
        sweep.gap = gaps[g];
        sweep.split = builder.split();
        sweep.samples = builder.chain().size();
        for (std::size_t s = 0; s < builder.chain().size(); ++s) {
            const Node& n = builder.chain()[s];
            for (const InGapState& st : n.states) {
                FlowPoint p = n.meta;
                p.shift = static_cast<std::int64_t>(s);
                p.energy = st.energy;
                p.side = st.side;
                p.gap_id = static_cast<int>(g);
                sweep.points.push_back(p);
            }
        }
        sweep.curves = extract_curves(builder.chain(), builder.succ(), static_cast<int>(g));
    });
    return out;
}

// ------------------------------ windings ------------------------------------

namespace {

int crossings_at(const std::vector<FlowCurve>& curves, double level, bool& touched) {
    int total = 0;
    touched = false;
    for (const FlowCurve& c : curves) {
        const std::size_t n = c.points.size();
        if (n == 0) continue;
        for (const FlowPoint& p : c.points) touched = touched || p.energy == level;
        const std::size_t steps = c.closed ? n : n - 1;
        for (std::size_t i = 0; i < steps; ++i) {
            const double a = c.points[i].energy - level;
            const double b = c.points[(i + 1) % n].energy - level;
            if (a < 0.0 && b > 0.0) ++total;
            if (a > 0.0 && b < 0.0) --total;
        }
    }
    return total;
}

}  // namespace

int winding_crossings(const std::vector<FlowCurve>& curves, const Gap& gap) {
    double level = gap.mid();
    bool touched = false;
    int w = crossings_at(curves, level, touched);
    while (touched) {
        level += 1e-9 * gap.width();
        w = crossings_at(curves, level, touched);
    }
    return w;
}

double displacement_sum(const std::vector<FlowCurve>& curves, const Gap& gap, double edge_snap) {
    const double W = gap.width();
    double total = 0.0;
    for (const FlowCurve& c : curves) {
        const std::size_t n = c.points.size();
        if (n == 0) continue;
        for (std::size_t i = 0; i + 1 < n; ++i) total += c.points[i + 1].energy - c.points[i].energy;
        if (c.closed) {
            total += c.points.front().energy - c.points.back().energy;
            continue;
        }
        const double start = c.points.front().energy;
        const double end = c.points.back().energy;
        const double start_edge = start - gap.E0 <= gap.E1 - start ? gap.E0 : gap.E1;
        const double end_edge = end - gap.E0 <= gap.E1 - end ? gap.E0 : gap.E1;
        if (std::abs(start - start_edge) <= edge_snap * W) total += start - start_edge;
        if (std::abs(end - end_edge) <= edge_snap * W) total += end_edge - end;
    }
    return total / W;
}

int winding_displacement(const std::vector<FlowCurve>& curves, const Gap& gap, double wind_tol,
                         double edge_snap) {
    const double raw = displacement_sum(curves, gap, edge_snap);
    const double rounded = std::round(raw);
    if (std::abs(raw - rounded) > wind_tol) {
        throw UnderResolvedSweep(raw, "under-resolved sweep; refine grid (displacement " +
                                          io::format_double(raw) + ")");
    }
    return static_cast<int>(rounded);
}

// ------------------------------ verification --------------------------------

bool CorrespondenceReport::all_pass() const {
    if (gaps.empty()) return false;
    return std::all_of(gaps.begin(), gaps.end(), [](const GapReport& g) { return g.pass; });
}

bool CorrespondenceReport::numerical_failure() const {
    return std::any_of(gaps.begin(), gaps.end(), [](const GapReport& g) { return !g.error.empty(); });
}

CorrespondenceReport verify_correspondence(const Model& model, const OperatorSpec& spec,
                                           std::string hamiltonian_name,
                                           const VerifyOptions& options) {
    const BulkSpectrum bulk =
        bulk_spectrum(model, spec, options.bulk_grid, options.tol, options.flow.threads);
    std::vector<Gap> gaps = find_gaps(bulk, options.min_width);
    label_gaps(gaps, model.params, options.tol.m_max);

    int orientation = -1;
    for (std::size_t i = 0; i < gaps.size(); ++i) {
        const auto& l = gaps[i].label;
        if (l && l->reliable && l->n == 0 && l->m == 1) {
            orientation = static_cast<int>(i);
            break;
        }
    }
    if (orientation < 0) {
        throw OrientationGapMissing("orientation gap with ids = theta (label (0,1)) not found "
                                    "above min_width");
    }
    std::vector<std::size_t> chosen = prominent_gaps(gaps, options.max_gaps);
    if (std::find(chosen.begin(), chosen.end(), static_cast<std::size_t>(orientation)) == chosen.end()) {
        chosen.push_back(static_cast<std::size_t>(orientation));
        std::sort(chosen.begin(), chosen.end());
    }
    std::vector<Gap> selected;
    for (std::size_t i : chosen) selected.push_back(gaps[i]);

    const std::vector<FlowSweep> sweeps =
        spectral_flow(model, spec, selected, options.flow, options.tol);

    CorrespondenceReport report{model, std::move(hamiltonian_name), options, orientation, 0, {}};
    for (std::size_t s = 0; s < selected.size(); ++s) {
        GapReport g;
        g.gap_id = static_cast<int>(chosen[s]);
        g.gap = selected[s];
        g.split = sweeps[s].split;
        g.w_crossings = winding_crossings(sweeps[s].curves, selected[s]);
        g.displacement_raw = displacement_sum(sweeps[s].curves, selected[s], options.tol.edge_snap);
        try {
            g.w_displacement = winding_displacement(sweeps[s].curves, selected[s],
                                                    options.tol.wind_tol, options.tol.edge_snap);
        } catch (const UnderResolvedSweep& e) {
            g.error = e.what();
        }
        report.gaps.push_back(std::move(g));
    }

    for (const GapReport& g : report.gaps) {
        if (g.gap_id == orientation && g.w_displacement && g.w_crossings == *g.w_displacement &&
            std::abs(g.w_crossings) == 1) {
            report.orientation_sign = -g.w_crossings;
        }
    }
    for (GapReport& g : report.gaps) {
        const bool agree = g.w_displacement && g.w_crossings == *g.w_displacement;
        const bool labelled = g.gap.label && g.gap.label->reliable;
        g.pass = agree && labelled && report.orientation_sign != 0 &&
                 report.orientation_sign * g.w_crossings == -g.gap.label->m;
    }
    return report;
}

void write_report_json(std::ostream& out, const CorrespondenceReport& report) {
    using json = nlohmann::ordered_json;
    const CutProjectParams& p = report.model.params;
    json meta;
    meta["theta"] = std::to_string(p.numerator()) + "/" + std::to_string(p.period());
    meta["p"] = p.numerator();
    meta["q"] = p.period();
    meta["L"] = p.period();
    meta["model"] = std::string(to_string(report.model.kind));
    if (report.model.kind == ModelKind::Smoothed) {
        meta["epsilon"] = report.model.epsilon;
    } else {
        meta["epsilon"] = nullptr;
    }
    meta["hamiltonian"] = report.hamiltonian;
    meta["min_width"] = report.options.min_width;
    meta["max_gaps"] = report.options.max_gaps;
    meta["grid"] = {{"bulk", report.options.bulk_grid},
                    {"flow", report.options.flow.grid},
                    {"t_per_flip", report.options.flow.t_per_flip}};
    const AnalysisTolerances& t = report.options.tol;
    meta["tolerances"] = {{"tol_spec", t.tol_spec}, {"res_E", t.res_E},
                          {"label_tol", 10.0 / static_cast<double>(p.period())},
                          {"m_max", t.m_max}, {"side_frac", t.side_frac},
                          {"jump_tol", t.jump_tol}, {"max_depth", t.max_depth},
                          {"wind_tol", t.wind_tol}, {"edge_snap", t.edge_snap}};
    meta["orientation"] = {{"gap_id", report.orientation_gap},
                           {"sign", report.orientation_sign},
                           {"convention", "sign s chosen so that s*W = -1 on the (0,1) gap; "
                                          "pass means s*W = -m"}};

    json gaps = json::array();
    for (const GapReport& g : report.gaps) {
        json row;
        row["E0"] = g.gap.E0;
        row["E1"] = g.gap.E1;
        row["ids"] = g.gap.ids;
        row["n"] = g.gap.label ? json(g.gap.label->n) : json(nullptr);
        row["m"] = g.gap.label ? json(g.gap.label->m) : json(nullptr);
        row["w_crossings"] = g.w_crossings;
        row["w_displacement"] = g.w_displacement ? json(*g.w_displacement) : json(nullptr);
        row["pass"] = g.pass;
        row["gap_id"] = g.gap_id;
        row["width"] = g.gap.width();
        row["label_reliable"] = g.gap.label && g.gap.label->reliable;
        row["displacement_raw"] = g.displacement_raw;
        row["split"] = g.split;
        if (!g.error.empty()) row["error"] = g.error;
        gaps.push_back(std::move(row));
    }
    json doc;
    doc["metadata"] = std::move(meta);
    doc["all_pass"] = report.all_pass();
    doc["gaps"] = std::move(gaps);
    out << doc.dump(2) << '\n';
}

void write_flow_csv(std::ostream& out, const std::vector<FlowPoint>& points) {
    out << "shift,param_kind,k,param,energy,side,gap_id\n";
    for (const FlowPoint& p : points) {
        out << p.shift << ',' << (p.kind == ParamKind::Phi ? "phi" : "t") << ',';
        if (p.kind == ParamKind::T) out << p.k;
        out << ',' << io::format_double(p.param) << ',' << io::format_double(p.energy) << ','
            << to_string(p.side) << ',' << p.gap_id << '\n';
    }
}

}  // namespace sturmian
