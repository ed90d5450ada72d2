// sequences.hpp: cut & project Sturmian words, their augmented and smoothed
// variants, and the metric tools used to compare words and spectra.

#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace sturmian {

/// Fractional part r - floor(r), always in [0, 1).
double frac(double r);

struct Approximant {
    std::int64_t p{0};
    std::int64_t q{1};
    bool rational_input{false};  // theta itself is p'/q' with q' <= q_max
};

/// Continued-fraction convergent of theta with the largest denominator <= q_max.
Approximant continued_fraction_approximant(double theta, std::int64_t q_max);

// ------------------------------ geometry -----------------------------------

/// Cut & project data. Letters are a = l0 + gamma (theta - 1), b = l0 + gamma theta.
///
/// Two flavours exist. `irrational` refuses any theta that coincides with a
/// fraction of small denominator (the subshift would not be minimal).
/// `approximant` stores theta = p/q exactly and makes all phase arithmetic
/// integer-exact, which is what periodic boundary conditions need.
class CutProjectParams {
public:
    static constexpr std::int64_t default_q_guard = 1'000'000;

    static CutProjectParams irrational(double theta, double gamma = 1.0, double l0 = 1.0,
                                       std::int64_t q_guard = default_q_guard);
    static CutProjectParams approximant(std::int64_t p, std::int64_t q, double gamma = 1.0,
                                        double l0 = 1.0);

    double theta() const noexcept { return theta_; }
    double gamma() const noexcept { return gamma_; }
    double l0() const noexcept { return l0_; }
    double a() const noexcept { return l0_ + gamma_ * (theta_ - 1.0); }
    double b() const noexcept { return l0_ + gamma_ * theta_; }

    bool is_approximant() const noexcept { return q_ > 0; }
    std::int64_t numerator() const noexcept { return p_; }
    /// Period q of an approximant, 0 for irrational theta.
    std::int64_t period() const noexcept { return q_; }

    /// {phi + n theta}, computed without loss for large |n|.
    double phase(double phi, std::int64_t n) const;

    /// The singular intercept {k theta}.
    double singular_intercept(std::int64_t k) const;

private:
    CutProjectParams(double theta, double gamma, double l0, std::int64_t p, std::int64_t q);

    double theta_;
    double gamma_;
    double l0_;
    std::int64_t p_{0};
    std::int64_t q_{0};
};

/// Inclusive index range [n0, n1].
struct Window {
    std::int64_t n0{0};
    std::int64_t n1{0};

    std::int64_t size() const noexcept { return n1 - n0 + 1; }
    bool contains(std::int64_t n) const noexcept { return n >= n0 && n <= n1; }
};

struct SturmianKind {
    double phi{0.0};
};
struct AugmentedKind {
    std::int64_t k{0};
    double t{0.0};
};
struct SmoothedKind {
    double phi{0.0};
    double epsilon{0.1};
};

struct SequenceSpec {
    CutProjectParams params;
    std::variant<SturmianKind, AugmentedKind, SmoothedKind> kind;
    Window window;
};

/// Finite window of real-valued letters; letters[i] sits at index offset + i.
struct Word {
    std::vector<double> letters;
    std::int64_t offset{0};
    /// Period of the underlying sequence when it is a full period of an approximant.
    std::int64_t period{0};

    std::size_t size() const noexcept { return letters.size(); }
    double at(std::int64_t n) const { return letters.at(static_cast<std::size_t>(n - offset)); }
    Window window() const noexcept {
        return {offset, offset + static_cast<std::int64_t>(letters.size()) - 1};
    }
};

class SingularInterceptError : public std::domain_error {
public:
    SingularInterceptError(std::int64_t index, const std::string& what)
        : std::domain_error(what), index_(index) {}
    std::int64_t index() const noexcept { return index_; }

private:
    std::int64_t index_;
};

inline constexpr double singular_tol = 1e-12;

/// Index n in the window where {phi + n theta} is within singular_tol of 0 or theta.
std::optional<std::int64_t> find_singular_index(const CutProjectParams& params, double phi,
                                                Window window);

/// Letters of the requested kind. Throws SingularInterceptError for a Sturmian
/// word whose intercept hits the discontinuity inside the window.
Word generate_word(const SequenceSpec& spec);

/// Sturmian letters without the singularity guard (used for one-sided limits).
Word sturmian_letters(const CutProjectParams& params, double phi, Window window);

/// Smooth step 1/2 (1 + tanh(x / epsilon)).
double smooth_step(double x, double epsilon);

struct OneSidedLimits {
    Word minus;  // phi -> {k theta} from below
    Word plus;   // phi -> {k theta} from above
    bool flip_in_window{false};
    std::optional<std::int64_t> flip_index;  // first index of the changed pair
};

OneSidedLimits one_sided_limits(const CutProjectParams& params, std::int64_t k, Window window);

/// Elementwise (1 - t) minus + t plus.
Word interpolate(const Word& minus, const Word& plus, double t);

/// Number of distinct factors of length n (exact letter comparison).
std::size_t word_complexity(const Word& word, std::size_t n);

/// d(x, y) = inf{eps > 0 : |x_k - y_k| <= eps for all |k| <= 1/eps}, over the
/// symmetric window both words cover. The result never drops below
/// 1 / (half_length + 1), since nothing beyond the window is known.
double sequence_metric(const Word& x, const Word& y);

template <class T>
using Metric = std::function<double(const T&, const T&)>;

template <class T>
double hausdorff_distance(std::span<const T> lhs, std::span<const T> rhs, const Metric<T>& dist) {
    if (lhs.empty() || rhs.empty()) {
        throw std::invalid_argument("hausdorff_distance: empty set");
    }
    auto directed = [&](std::span<const T> from, std::span<const T> to) {
        double worst = 0.0;
        for (const T& x : from) {
            double best = dist(x, to.front());
            for (const T& y : to.subspan(1)) {
                if (best <= worst) break;
                best = std::min(best, dist(x, y));
            }
            worst = std::max(worst, best);
        }
        return worst;
    };
    return std::max(directed(lhs, rhs), directed(rhs, lhs));
}

/// Hausdorff distance of finite real sets, O(n log n).
double hausdorff_distance(std::span<const double> lhs, std::span<const double> rhs);

/// CSV with header "index,letter"; letters are written in shortest round-trip form.
void write_word_csv(std::ostream& out, const Word& word);
Word read_word_csv(std::istream& in);

}  // namespace sturmian
