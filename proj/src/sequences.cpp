#include "sturmian/sequences.hpp"

#include "sturmian/io.hpp"

#include <cmath>
#include <cstring>
#include <numeric>
#include <string>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <unordered_set>

namespace sturmian {

double frac(double r) {
    const double f = r - std::floor(r);
    // r = -1e-20 gives 1.0 after rounding
    return f >= 1.0 ? 0.0 : f;
}

Approximant continued_fraction_approximant(double theta, std::int64_t q_max) {
    if (!(theta > 0.0 && theta < 1.0)) {
        throw std::invalid_argument("continued_fraction_approximant: theta must lie in (0,1)");
    }
    if (q_max < 1) {
        throw std::invalid_argument("continued_fraction_approximant: q_max must be >= 1");
    }
    constexpr double exact_tol = 4.0 * std::numeric_limits<double>::epsilon();

    // convergents h/k, seeded with a0 = floor(theta) = 0
    std::int64_t h_prev = 1, k_prev = 0;
    std::int64_t h = 0, k = 1;
    Approximant best{0, 1, false};
    double x = theta;
    for (int iter = 0; iter < 64; ++iter) {
        const double rem = x - std::floor(x);
        if (rem == 0.0) break;
        x = 1.0 / rem;
        const auto a = static_cast<std::int64_t>(std::floor(x));
        const std::int64_t h_next = a * h + h_prev;
        const std::int64_t k_next = a * k + k_prev;
        if (k_next > q_max || k_next <= 0) break;
        h_prev = h;
        k_prev = k;
        h = h_next;
        k = k_next;
        best = {h, k, false};
        if (std::abs(theta - static_cast<double>(h) / static_cast<double>(k)) <= exact_tol) {
            best.rational_input = true;
            break;
        }
    }
    return best;
}

// ---------------------------------------------------------------------------

CutProjectParams::CutProjectParams(double theta, double gamma, double l0, std::int64_t p,
                                   std::int64_t q)
    : theta_(theta), gamma_(gamma), l0_(l0), p_(p), q_(q) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) {
        throw std::invalid_argument("CutProjectParams: gamma must be positive");
    }
    if (!std::isfinite(l0)) {
        throw std::invalid_argument("CutProjectParams: l0 must be finite");
    }
}

CutProjectParams CutProjectParams::irrational(double theta, double gamma, double l0,
                                              std::int64_t q_guard) {
    if (!(theta > 0.0 && theta < 1.0)) {
        throw std::invalid_argument("CutProjectParams: theta must lie in (0,1)");
    }
    if (q_guard >= 1) {
        const Approximant ap = continued_fraction_approximant(theta, q_guard);
        if (ap.rational_input) {
            throw std::invalid_argument("CutProjectParams: theta equals " + std::to_string(ap.p) +
                                        "/" + std::to_string(ap.q) +
                                        " (use CutProjectParams::approximant)");
        }
    }
    return CutProjectParams(theta, gamma, l0, 0, 0);
}

CutProjectParams CutProjectParams::approximant(std::int64_t p, std::int64_t q, double gamma,
                                               double l0) {
    if (q < 2 || p <= 0 || p >= q) {
        throw std::invalid_argument("CutProjectParams: approximant needs 0 < p < q");
    }
    if (std::gcd(p, q) != 1) {
        throw std::invalid_argument("CutProjectParams: p/q must be reduced");
    }
    return CutProjectParams(static_cast<double>(p) / static_cast<double>(q), gamma, l0, p, q);
}

double CutProjectParams::phase(double phi, std::int64_t n) const {
    if (q_ > 0) {
        const std::int64_t nm = ((n % q_) + q_) % q_;
        const auto r = static_cast<std::int64_t>((static_cast<__int128>(nm) * p_) % q_);
        return frac(frac(phi) + static_cast<double>(r) / static_cast<double>(q_));
    }
    // n*theta = prod + err exactly; prod - floor(prod) is exact below 2^52
    const double nd = static_cast<double>(n);
    const double prod = nd * theta_;
    const double err = std::fma(nd, theta_, -prod);
    const double whole = std::floor(prod);
    return frac(frac(phi) + ((prod - whole) + err));
}

double CutProjectParams::singular_intercept(std::int64_t k) const {
    if (q_ > 0) {
        const std::int64_t km = ((k % q_) + q_) % q_;
        const auto r = static_cast<std::int64_t>((static_cast<__int128>(km) * p_) % q_);
        return static_cast<double>(r) / static_cast<double>(q_);
    }
    return phase(0.0, k);
}

// ---------------------------------------------------------------------------

namespace {

double circle_distance(double x, double y) {
    const double d = std::abs(x - y);
    return std::min(d, 1.0 - d);
}

void require_window(Window window) {
    if (window.n1 < window.n0) {
        throw std::invalid_argument("window: n1 < n0");
    }
}

}  // namespace

std::optional<std::int64_t> find_singular_index(const CutProjectParams& params, double phi,
                                                Window window) {
    require_window(window);
    // letter n reads phases n-1 and n
    for (std::int64_t n = window.n0 - 1; n <= window.n1; ++n) {
        const double ph = params.phase(phi, n);
        if (circle_distance(ph, params.theta()) < singular_tol ||
            circle_distance(ph, 0.0) < singular_tol) {
            return n;
        }
    }
    return std::nullopt;
}

double smooth_step(double x, double epsilon) { return 0.5 * (1.0 + std::tanh(x / epsilon)); }

Word sturmian_letters(const CutProjectParams& params, double phi, Window window) {
    require_window(window);
    Word word;
    word.offset = window.n0;
    word.letters.reserve(static_cast<std::size_t>(window.size()));
    const double theta = params.theta();
    const double a = params.a();
    const double b = params.b();
    double prev = params.phase(phi, window.n0 - 1);
    for (std::int64_t n = window.n0; n <= window.n1; ++n) {
        const double cur = params.phase(phi, n);
        const int wrap = cur < prev ? 1 : 0;
        const int chi_cur = cur > theta ? 1 : 0;
        const int chi_prev = prev > theta ? 1 : 0;
        // letter = l0 + gamma (theta + c), c in {-1, 0}
        const int c = -wrap - chi_cur + chi_prev;
        word.letters.push_back(c == 0 ? b : a);
        prev = cur;
    }
    if (params.is_approximant() && window.size() == params.period()) {
        word.period = params.period();
    }
    return word;
}

namespace {

Word smoothed_letters(const CutProjectParams& params, double phi, double epsilon, Window window) {
    if (!(epsilon > 0.0)) {
        throw std::invalid_argument("generate_word: smoothing epsilon must be positive");
    }
    Word word;
    word.offset = window.n0;
    word.letters.reserve(static_cast<std::size_t>(window.size()));
    const double theta = params.theta();
    double prev = params.phase(phi, window.n0 - 1);
    double s_prev = smooth_step(prev - theta, epsilon);
    for (std::int64_t n = window.n0; n <= window.n1; ++n) {
        const double cur = params.phase(phi, n);
        const double s_cur = smooth_step(cur - theta, epsilon);
        const double wrap = cur < prev ? 1.0 : 0.0;
        word.letters.push_back(params.l0() + params.gamma() * (theta - wrap - s_cur + s_prev));
        prev = cur;
        s_prev = s_cur;
    }
    if (params.is_approximant() && window.size() == params.period()) {
        word.period = params.period();
    }
    return word;
}

}  // namespace

OneSidedLimits one_sided_limits(const CutProjectParams& params, std::int64_t k, Window window) {
    require_window(window);
    const double phi = params.singular_intercept(k);

    double spacing = 1.0;
    if (params.is_approximant()) {
        spacing = 1.0 / static_cast<double>(params.period());
    } else {
        // the discontinuity of w_m sits at phi = {(1 - m) theta}
        const std::int64_t own = 1 - k;
        for (std::int64_t m = window.n0 - 1; m <= window.n1 + 1; ++m) {
            if (m == own) continue;
            spacing = std::min(spacing, circle_distance(phi, params.singular_intercept(1 - m)));
        }
    }
    const double delta = 1e-9 * spacing;

    OneSidedLimits out;
    out.minus = sturmian_letters(params, phi - delta, window);
    out.plus = sturmian_letters(params, phi + delta, window);
    for (std::size_t i = 0; i < out.minus.size(); ++i) {
        if (out.minus.letters[i] != out.plus.letters[i]) {
            out.flip_in_window = true;
            out.flip_index = out.minus.offset + static_cast<std::int64_t>(i);
            break;
        }
    }
    return out;
}

Word interpolate(const Word& minus, const Word& plus, double t) {
    if (minus.size() != plus.size() || minus.offset != plus.offset) {
        throw std::invalid_argument("interpolate: words cover different windows");
    }
    if (!(t >= 0.0 && t <= 1.0)) {
        throw std::invalid_argument("interpolate: t must lie in [0,1]");
    }
    Word out = minus;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (minus.letters[i] != plus.letters[i]) {
            out.letters[i] = (1.0 - t) * minus.letters[i] + t * plus.letters[i];
        }
    }
    return out;
}

Word generate_word(const SequenceSpec& spec) {
    require_window(spec.window);
    return std::visit(
        [&](const auto& kind) -> Word {
            using K = std::decay_t<decltype(kind)>;
            if constexpr (std::is_same_v<K, SturmianKind>) {
                if (auto n = find_singular_index(spec.params, kind.phi, spec.window)) {
                    throw SingularInterceptError(
                        *n, "generate_word: intercept is singular at n = " + std::to_string(*n) +
                                "; use the augmented kind or one_sided_limits");
                }
                return sturmian_letters(spec.params, kind.phi, spec.window);
            } else if constexpr (std::is_same_v<K, AugmentedKind>) {
                const auto limits = one_sided_limits(spec.params, kind.k, spec.window);
                return interpolate(limits.minus, limits.plus, kind.t);
            } else {
                return smoothed_letters(spec.params, kind.phi, kind.epsilon, spec.window);
            }
        },
        spec.kind);
}

// ---------------------------------------------------------------------------

std::size_t word_complexity(const Word& word, std::size_t n) {
    if (n == 0 || n > word.size()) {
        throw std::invalid_argument("word_complexity: factor length must be in [1, window length]");
    }
    std::map<double, std::uint32_t> ids;
    std::vector<std::uint32_t> symbols;
    symbols.reserve(word.size());
    for (double x : word.letters) {
        auto [it, inserted] = ids.try_emplace(x, static_cast<std::uint32_t>(ids.size()));
        symbols.push_back(it->second);
    }
    std::unordered_set<std::string> factors;
    std::string key(n * sizeof(std::uint32_t), '\0');
    for (std::size_t i = 0; i + n <= symbols.size(); ++i) {
        std::memcpy(key.data(), symbols.data() + i, n * sizeof(std::uint32_t));
        factors.insert(key);
    }
    return factors.size();
}

double sequence_metric(const Word& x, const Word& y) {
    const Window wx = x.window();
    const Window wy = y.window();
    const std::int64_t half = std::min({wx.n1, wy.n1, -wx.n0, -wy.n0});
    if (x.size() == 0 || y.size() == 0 || half < 0) {
        throw std::invalid_argument("sequence_metric: windows share no symmetric range around 0");
    }
    // D_j = max_{|k|<=j} |x_k - y_k|; for eps in (1/(j+1), 1/j] the condition is D_j <= eps
    double best = INFINITY;
    double running = 0.0;
    for (std::int64_t j = 0; j <= half; ++j) {
        running = std::max({running, std::abs(x.at(j) - y.at(j)), std::abs(x.at(-j) - y.at(-j))});
        if (j > 0 && running > 1.0 / static_cast<double>(j)) break;
        best = std::min(best, std::max(running, 1.0 / static_cast<double>(j + 1)));
    }
    return best;
}

double hausdorff_distance(std::span<const double> lhs, std::span<const double> rhs) {
    if (lhs.empty() || rhs.empty()) {
        throw std::invalid_argument("hausdorff_distance: empty set");
    }
    std::vector<double> a(lhs.begin(), lhs.end());
    std::vector<double> b(rhs.begin(), rhs.end());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    auto directed = [](const std::vector<double>& from, const std::vector<double>& to) {
        double worst = 0.0;
        for (double v : from) {
            auto it = std::lower_bound(to.begin(), to.end(), v);
            double best = INFINITY;
            if (it != to.end()) best = *it - v;
            if (it != to.begin()) best = std::min(best, v - *std::prev(it));
            worst = std::max(worst, best);
        }
        return worst;
    };
    return std::max(directed(a, b), directed(b, a));
}

void write_word_csv(std::ostream& out, const Word& word) {
    out << "index,letter\n";
    for (std::size_t i = 0; i < word.size(); ++i) {
        out << word.offset + static_cast<std::int64_t>(i) << ','
            << io::format_double(word.letters[i]) << '\n';
    }
}

Word read_word_csv(std::istream& in) {
    const io::CsvTable table = io::read_csv(in);
    const std::size_t ci = table.column("index");
    const std::size_t cl = table.column("letter");
    Word word;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto index = static_cast<std::int64_t>(std::stoll(table.rows[r][ci]));
        if (r == 0) {
            word.offset = index;
        } else if (index != word.offset + static_cast<std::int64_t>(r)) {
            throw std::invalid_argument("read_word_csv: indices must be consecutive");
        }
        word.letters.push_back(io::parse_double(table.rows[r][cl]));
    }
    return word;
}

}  // namespace sturmian
