#include "sturmian/eigensolve.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

namespace sturmian {

namespace {

constexpr std::size_t kLanes = 8;

double pivot_floor(const HamiltonianMatrix& m) {
    double e2 = 1.0;
    for (int k = 1; k <= m.bandwidth(); ++k) {
        for (double e : m.band(k)) e2 = std::max(e2, e * e);
    }
    return std::numeric_limits<double>::min() * e2;
}

// Tridiagonal recurrences, one energy per lane. Lanes share the matrix reads.
void count_tridiagonal(const HamiltonianMatrix& m, const double* energy, std::size_t* count,
                       bool* bad, double piv) {
    const std::span<const double> a = m.diagonal();
    const std::span<const double> e = m.band(1);
    const std::size_t L = m.size();
    const bool periodic = m.boundary() == Boundary::Periodic;
    const std::size_t n = periodic ? L - 1 : L;

    std::array<double, kLanes> d{}, inv{}, y{}, s{};
    std::array<std::size_t, kLanes> neg{};
    std::array<bool, kLanes> flag{};
    for (std::size_t l = 0; l < kLanes; ++l) {
        d[l] = a[0] - energy[l];
        neg[l] = d[l] < 0.0;
        flag[l] = std::abs(d[l]) <= piv;
        inv[l] = 1.0 / d[l];
    }
    if (!periodic) {
        for (std::size_t i = 1; i < n; ++i) {
            const double ai = a[i];
            const double e2 = e[i - 1] * e[i - 1];
            for (std::size_t l = 0; l < kLanes; ++l) {
                d[l] = ai - energy[l] - e2 * inv[l];
                inv[l] = 1.0 / d[l];
                neg[l] += d[l] < 0.0;
                flag[l] = flag[l] || std::abs(d[l]) <= piv;
            }
        }
    } else {
        // bordered elimination with index L-1 as the border; err bounds the
        // rounding in the Schur complement so doubtful lanes can be redone
        const double corner = e[L - 1];
        std::array<double, kLanes> err{};
        for (std::size_t l = 0; l < kLanes; ++l) {
            y[l] = corner;
            s[l] = corner * corner * inv[l];
            err[l] = std::abs(s[l]);
        }
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double ai = a[i];
            const double ep = e[i - 1];
            for (std::size_t l = 0; l < kLanes; ++l) {
                const double lij = ep * inv[l];
                d[l] = ai - energy[l] - lij * ep;
                inv[l] = 1.0 / d[l];
                y[l] = -lij * y[l];
                const double t = y[l] * y[l] * inv[l];
                s[l] += t;
                err[l] += std::abs(t);
                neg[l] += d[l] < 0.0;
                flag[l] = flag[l] || std::abs(d[l]) <= piv;
            }
        }
        {
            const std::size_t i = n - 1;
            const double ep = e[i - 1];
            const double ci = e[n - 1];
            for (std::size_t l = 0; l < kLanes; ++l) {
                const double lij = ep * inv[l];
                d[l] = a[i] - energy[l] - lij * ep;
                inv[l] = 1.0 / d[l];
                const double mag = std::abs(ci) + std::abs(lij * y[l]);
                y[l] = ci - lij * y[l];
                s[l] += y[l] * y[l] * inv[l];
                err[l] += mag * mag * std::abs(inv[l]);
                neg[l] += d[l] < 0.0;
                flag[l] = flag[l] || std::abs(d[l]) <= piv;
            }
        }
        const double growth = 8.0 * std::numeric_limits<double>::epsilon() * static_cast<double>(n + 8);
        for (std::size_t l = 0; l < kLanes; ++l) {
            const double schur = a[L - 1] - energy[l] - s[l];
            neg[l] += schur < 0.0;
            const double bound = growth * (std::abs(a[L - 1]) + std::abs(energy[l]) + err[l]);
            flag[l] = flag[l] || !(std::abs(schur) > bound);
        }
    }
    for (std::size_t l = 0; l < kLanes; ++l) {
        count[l] = neg[l];
        bad[l] = flag[l] || !std::isfinite(d[l]);
    }
}

// Periodic tridiagonal count with 1x1 / 2x2 pivots on the interior (Bunch's
// criterion), so small pivots cannot spoil the bordered Schur complement.
std::optional<std::size_t> count_periodic_pivoted(const HamiltonianMatrix& m, double energy,
                                                  double piv) {
    const std::span<const double> a = m.diagonal();
    const std::span<const double> e = m.band(1);
    const std::size_t L = m.size();
    const std::size_t n = L - 1;
    auto border = [&](std::size_t i) {
        double c = 0.0;
        if (i == 0) c += e[L - 1];
        if (i == n - 1) c += e[n - 1];
        return c;
    };
    double sigma = 0.0;
    for (std::size_t i = 0; i < L; ++i) {
        sigma = std::max({sigma, std::abs(a[i] - energy), std::abs(e[i])});
    }
    const double alpha = 0.5 * (std::sqrt(5.0) - 1.0);

    std::size_t neg = 0;
    double schur = a[L - 1] - energy;
    double p = a[0] - energy;  // updated diagonal at i
    double g = border(0);      // updated border coupling at i
    std::size_t i = 0;
    while (i < n) {
        const bool last = i + 1 == n;
        if (last || std::abs(p) * sigma >= alpha * e[i] * e[i]) {
            if (!(std::abs(p) > piv)) return std::nullopt;
            neg += p < 0.0;
            schur -= g * g / p;
            if (last) break;
            const double l = e[i] / p;
            const double p_next = a[i + 1] - energy - l * e[i];
            g = border(i + 1) - l * g;
            p = p_next;
            i += 1;
        } else {
            const double q = a[i + 1] - energy;
            const double c = border(i + 1);
            const double det = p * q - e[i] * e[i];
            if (!(std::abs(det) > piv * sigma)) return std::nullopt;
            if (det < 0.0) {
                neg += 1;
            } else if (p < 0.0) {
                neg += 2;
            }
            schur -= (q * g * g - 2.0 * e[i] * g * c + p * c * c) / det;
            if (i + 2 == n) break;
            // second entry of B^{-1} (g, c)
            const double w1 = (-e[i] * g + p * c) / det;
            const double ee = e[i + 1];
            p = a[i + 2] - energy - ee * ee * p / det;
            g = border(i + 2) - ee * w1;
            i += 2;
        }
    }
    if (!(std::abs(schur) > piv)) return std::nullopt;
    neg += schur < 0.0;
    return neg;
}

// General bandwidth: banded LDL^T without pivoting, bordered for periodic matrices.
std::optional<std::size_t> count_banded(const HamiltonianMatrix& m, double energy, double piv) {
    const std::size_t L = m.size();
    const auto K = static_cast<std::size_t>(m.bandwidth());
    const bool periodic = m.boundary() == Boundary::Periodic && K > 0;
    const std::size_t n = periodic ? L - K : L;

    std::vector<double> lmat(n * std::max<std::size_t>(K, 1), 0.0);
    std::vector<double> d(n, 0.0);
    std::vector<double> ymat(periodic ? n * K : 0, 0.0);
    std::vector<double> schur(periodic ? K * K : 0, 0.0);
    if (periodic) {
        for (std::size_t b1 = 0; b1 < K; ++b1) {
            for (std::size_t b2 = 0; b2 < K; ++b2) {
                schur[b1 * K + b2] = m.entry(n + b1, n + b2) - (b1 == b2 ? energy : 0.0);
            }
        }
    }
    auto l_at = [&](std::size_t i, std::size_t j) -> double& { return lmat[i * K + (i - j - 1)]; };

    std::size_t neg = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j0 = i > K ? i - K : 0;
        for (std::size_t j = j0; j < i; ++j) {
            double w = m.band(static_cast<int>(i - j), j);
            for (std::size_t k = j0; k < j; ++k) w -= l_at(i, k) * d[k] * l_at(j, k);
            l_at(i, j) = w / d[j];
        }
        double di = m.diagonal(i) - energy;
        for (std::size_t k = j0; k < i; ++k) di -= l_at(i, k) * l_at(i, k) * d[k];
        if (!(std::abs(di) > piv)) return std::nullopt;
        d[i] = di;
        neg += di < 0.0;
        if (periodic) {
            double* yi = &ymat[i * K];
            if (i < K || i + K >= n) {
                for (std::size_t b = 0; b < K; ++b) yi[b] = m.entry(i, n + b);
            }
            for (std::size_t k = j0; k < i; ++k) {
                const double lik = l_at(i, k);
                for (std::size_t b = 0; b < K; ++b) yi[b] -= lik * ymat[k * K + b];
            }
            for (std::size_t b1 = 0; b1 < K; ++b1) {
                for (std::size_t b2 = 0; b2 < K; ++b2) schur[b1 * K + b2] -= yi[b1] * yi[b2] / di;
            }
        }
    }
    if (periodic) {
        const EigenPairs ev = symmetric_eigen_small(schur, K);
        for (double v : ev.values) {
            if (!(std::abs(v) > piv)) return std::nullopt;
            neg += v < 0.0;
        }
    }
    return neg;
}

}  // namespace

double breakdown_shift(double energy) { return 1e-13 * (1.0 + std::abs(energy)); }

std::optional<std::size_t> try_count_below(const HamiltonianMatrix& m, double energy) {
    if (m.size() == 0) return 0;
    const double piv = pivot_floor(m);
    if (m.bandwidth() == 1 && m.size() >= 3) {
        std::array<double, kLanes> e;
        e.fill(energy);
        std::array<std::size_t, kLanes> c{};
        std::array<bool, kLanes> bad{};
        count_tridiagonal(m, e.data(), c.data(), bad.data(), piv);
        if (!bad[0]) return c[0];
        if (m.boundary() == Boundary::Periodic) return count_periodic_pivoted(m, energy, piv);
        return std::nullopt;
    }
    return count_banded(m, energy, piv);
}

std::size_t count_below(const HamiltonianMatrix& m, double energy) {
    double e = energy;
    for (int attempt = 0; attempt <= 3; ++attempt) {
        if (auto c = try_count_below(m, e)) return *c;
        e += breakdown_shift(e);
    }
    throw FactorizationBreakdown(e, breakdown_shift(e));
}

void count_below(const HamiltonianMatrix& m, std::span<const double> energies,
                 std::span<std::size_t> counts) {
    if (counts.size() != energies.size()) {
        throw std::invalid_argument("count_below: size mismatch");
    }
    if (m.bandwidth() != 1 || m.size() < 3) {
        for (std::size_t i = 0; i < energies.size(); ++i) counts[i] = count_below(m, energies[i]);
        return;
    }
    const double piv = pivot_floor(m);
    std::array<double, kLanes> e{};
    std::array<std::size_t, kLanes> c{};
    std::array<bool, kLanes> bad{};
    for (std::size_t base = 0; base < energies.size(); base += kLanes) {
        const std::size_t nb = std::min(kLanes, energies.size() - base);
        for (std::size_t l = 0; l < kLanes; ++l) e[l] = energies[base + std::min(l, nb - 1)];
        count_tridiagonal(m, e.data(), c.data(), bad.data(), piv);
        for (std::size_t l = 0; l < nb; ++l) {
            if (!bad[l]) {
                counts[base + l] = c[l];
            } else if (m.boundary() == Boundary::Periodic) {
                auto pc = count_periodic_pivoted(m, e[l], piv);
                counts[base + l] = pc ? *pc : count_below(m, e[l]);
            } else {
                counts[base + l] = count_below(m, e[l]);
            }
        }
    }
}

// ---------------------------------------------------------------------------

std::vector<double> Spectrum::distinct() const {
    std::vector<double> out;
    std::size_t i = 0;
    while (i < eigenvalues.size()) {
        std::size_t j = i + 1;
        double sum = eigenvalues[i];
        while (j < eigenvalues.size() && eigenvalues[j] - eigenvalues[j - 1] <= tol) {
            sum += eigenvalues[j];
            ++j;
        }
        out.push_back(sum / static_cast<double>(j - i));
        i = j;
    }
    return out;
}

std::vector<double> eigenvalues_in(const HamiltonianMatrix& m, double lo, double hi, double tol) {
    if (!(lo < hi)) throw std::invalid_argument("eigenvalues_in: need lo < hi");
    if (!(tol > 0.0)) throw std::invalid_argument("eigenvalues_in: tol must be positive");

    struct Node {
        double lo, hi;
        std::size_t clo, chi;
    };
    std::vector<double> out;
    std::vector<Node> work;
    {
        std::array<double, 2> e{lo, hi};
        std::array<std::size_t, 2> c{};
        count_below(m, e, c);
        if (c[1] > c[0]) work.push_back({lo, hi, c[0], c[1]});
    }
    std::vector<Node> next;
    std::vector<double> mids;
    std::vector<std::size_t> cm;
    while (!work.empty()) {
        next.clear();
        mids.clear();
        for (const Node& node : work) {
            const double mid = 0.5 * (node.lo + node.hi);
            if (node.hi - node.lo <= tol || mid <= node.lo || mid >= node.hi) {
                out.insert(out.end(), node.chi - node.clo, mid);
            } else {
                next.push_back(node);
                mids.push_back(mid);
            }
        }
        cm.assign(mids.size(), 0);
        count_below(m, mids, cm);
        work.clear();
        for (std::size_t i = 0; i < next.size(); ++i) {
            const Node& node = next[i];
            const std::size_t c = std::clamp(cm[i], node.clo, node.chi);
            if (c > node.clo) work.push_back({node.lo, mids[i], node.clo, c});
            if (node.chi > c) work.push_back({mids[i], node.hi, c, node.chi});
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

Spectrum full_spectrum(const HamiltonianMatrix& m, double tol) {
    Spectrum s;
    s.tol = tol;
    s.L = m.size();
    if (m.size() == 0) return s;
    const auto [glo, ghi] = m.gershgorin();
    const double pad = 1e-8 * (1.0 + std::max(std::abs(glo), std::abs(ghi)));
    s.eigenvalues = eigenvalues_in(m, glo - pad, ghi + pad, tol);
    return s;
}

std::vector<double> multiply(const HamiltonianMatrix& m, std::span<const double> x) {
    const std::size_t L = m.size();
    if (x.size() != L) throw std::invalid_argument("multiply: size mismatch");
    std::vector<double> y(L);
    for (std::size_t i = 0; i < L; ++i) y[i] = m.diagonal(i) * x[i];
    for (int k = 1; k <= m.bandwidth(); ++k) {
        const auto ku = static_cast<std::size_t>(k);
        for (std::size_t i = 0; i < L; ++i) {
            if (m.boundary() == Boundary::Dirichlet && i + ku >= L) break;
            const std::size_t j = (i + ku) % L;
            const double v = m.band(k, i);
            y[i] += v * x[j];
            y[j] += v * x[i];
        }
    }
    return y;
}

// ---------------------------------------------------------------------------

namespace {

// Banded LU with partial pivoting of an n x n matrix with kl = ku = K.
class BandLU {
public:
    BandLU(std::size_t n, std::size_t K) : n_(n), K_(K), w_(3 * K + 1),
        ab_(n * (3 * K + 1), 0.0), mult_(n * std::max<std::size_t>(K, 1), 0.0), piv_(n, 0) {}

    double& at(std::size_t r, std::size_t c) { return ab_[r * w_ + (c + K_ - r)]; }

    void factor(double tiny) {
        for (std::size_t c = 0; c < n_; ++c) {
            const std::size_t rmax = std::min(n_ - 1, c + K_);
            const std::size_t cmax = std::min(n_ - 1, c + 2 * K_);
            std::size_t p = c;
            for (std::size_t r = c + 1; r <= rmax; ++r) {
                if (std::abs(at(r, c)) > std::abs(at(p, c))) p = r;
            }
            piv_[c] = p;
            if (p != c) {
                for (std::size_t j = c; j <= cmax; ++j) std::swap(at(c, j), at(p, j));
            }
            if (std::abs(at(c, c)) < tiny) at(c, c) = at(c, c) < 0.0 ? -tiny : tiny;
            const double pivot = at(c, c);
            for (std::size_t r = c + 1; r <= rmax; ++r) {
                const double f = at(r, c) / pivot;
                mult_[c * K_ + (r - c - 1)] = f;
                at(r, c) = 0.0;
                if (f == 0.0) continue;
                for (std::size_t j = c + 1; j <= cmax; ++j) at(r, j) -= f * at(c, j);
            }
        }
    }

    void solve(std::span<double> b) {
        for (std::size_t c = 0; c < n_; ++c) {
            if (piv_[c] != c) std::swap(b[c], b[piv_[c]]);
            const std::size_t rmax = std::min(n_ - 1, c + K_);
            for (std::size_t r = c + 1; r <= rmax; ++r) b[r] -= mult_[c * K_ + (r - c - 1)] * b[c];
        }
        for (std::size_t c = n_; c-- > 0;) {
            const std::size_t cmax = std::min(n_ - 1, c + 2 * K_);
            double v = b[c];
            for (std::size_t j = c + 1; j <= cmax; ++j) v -= at(c, j) * b[j];
            b[c] = v / at(c, c);
        }
    }

private:
    std::size_t n_, K_, w_;
    std::vector<double> ab_;
    std::vector<double> mult_;
    std::vector<std::size_t> piv_;
};

std::vector<double> dense_solve(std::vector<double> a, std::vector<double> b, std::size_t n,
                                double tiny) {
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t p = c;
        for (std::size_t r = c + 1; r < n; ++r) {
            if (std::abs(a[r * n + c]) > std::abs(a[p * n + c])) p = r;
        }
        if (p != c) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a[c * n + j], a[p * n + j]);
            std::swap(b[c], b[p]);
        }
        if (std::abs(a[c * n + c]) < tiny) a[c * n + c] = tiny;
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = a[r * n + c] / a[c * n + c];
            for (std::size_t j = c; j < n; ++j) a[r * n + j] -= f * a[c * n + j];
            b[r] -= f * b[c];
        }
    }
    for (std::size_t c = n; c-- > 0;) {
        double v = b[c];
        for (std::size_t j = c + 1; j < n; ++j) v -= a[c * n + j] * b[j];
        b[c] = v / a[c * n + c];
    }
    return b;
}

// Solves (M - sigma I) x = b. Periodic matrices use the last K indices as border.
class ShiftedSolver {
public:
    ShiftedSolver(const HamiltonianMatrix& m, double sigma)
        : L_(m.size()), K_(static_cast<std::size_t>(m.bandwidth())),
          periodic_(m.boundary() == Boundary::Periodic && K_ > 0),
          n_(periodic_ ? L_ - K_ : L_), lu_(n_, K_) {
        tiny_ = std::numeric_limits<double>::epsilon() * (1.0 + m.norm_bound() + std::abs(sigma));
        for (std::size_t i = 0; i < n_; ++i) {
            lu_.at(i, i) = m.diagonal(i) - sigma;
            for (std::size_t k = 1; k <= K_ && i + k < n_; ++k) {
                const double v = m.band(static_cast<int>(k), i);
                lu_.at(i, i + k) = v;
                lu_.at(i + k, i) = v;
            }
        }
        lu_.factor(tiny_);
        if (!periodic_) return;

        // Z = T^{-1} C, S = B - C^T Z
        c_.assign(K_, std::vector<double>(n_, 0.0));
        z_.assign(K_, std::vector<double>(n_, 0.0));
        for (std::size_t b = 0; b < K_; ++b) {
            for (std::size_t i = 0; i < n_; ++i) {
                if (i < K_ || i + K_ >= n_) c_[b][i] = m.entry(i, n_ + b);
            }
            z_[b] = c_[b];
            lu_.solve(z_[b]);
        }
        schur_.assign(K_ * K_, 0.0);
        for (std::size_t b1 = 0; b1 < K_; ++b1) {
            for (std::size_t b2 = 0; b2 < K_; ++b2) {
                double v = m.entry(n_ + b1, n_ + b2) - (b1 == b2 ? sigma : 0.0);
                for (std::size_t i = 0; i < n_; ++i) v -= c_[b1][i] * z_[b2][i];
                schur_[b1 * K_ + b2] = v;
            }
        }
    }

    void solve(std::span<double> x) {
        if (!periodic_) {
            lu_.solve(x);
            return;
        }
        std::span<double> h = x.first(n_);
        lu_.solve(h);
        std::vector<double> g(K_);
        for (std::size_t b = 0; b < K_; ++b) {
            double v = x[n_ + b];
            for (std::size_t i = 0; i < n_; ++i) v -= c_[b][i] * h[i];
            g[b] = v;
        }
        const std::vector<double> z = dense_solve(schur_, g, K_, tiny_);
        for (std::size_t b = 0; b < K_; ++b) {
            x[n_ + b] = z[b];
            for (std::size_t i = 0; i < n_; ++i) h[i] -= z_[b][i] * z[b];
        }
    }

private:
    std::size_t L_, K_;
    bool periodic_;
    std::size_t n_;
    BandLU lu_;
    double tiny_{0.0};
    std::vector<std::vector<double>> c_, z_;
    std::vector<double> schur_;
};

double norm2(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

void scale(std::span<double> x, double f) {
    for (double& v : x) v *= f;
}

double residual(const HamiltonianMatrix& m, std::span<const double> x, double mu) {
    std::vector<double> y = multiply(m, x);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] -= mu * x[i];
    return norm2(y);
}

std::vector<double> start_vector(std::size_t n, std::size_t seed) {
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double u = 0.6180339887498949 * static_cast<double>(i + 1 + 7 * seed);
        x[i] = 0.5 + (u - std::floor(u));
    }
    return x;
}

void fix_sign(std::span<double> x) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < x.size(); ++i) {
        if (std::abs(x[i]) > std::abs(x[best])) best = i;
    }
    if (!x.empty() && x[best] < 0.0) scale(x, -1.0);
}

}  // namespace

std::vector<double> eigenvector(const HamiltonianMatrix& m, double mu, double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("eigenvector: tol must be positive");
    const std::size_t L = m.size();
    const std::size_t nearby = count_below(m, mu + 10.0 * tol) - count_below(m, mu - 10.0 * tol);
    if (nearby != 1) {
        throw ClusteredEigenvalueError("clustered eigenvalue: " + std::to_string(nearby) +
                                       " eigenvalues within 10 tol of mu");
    }
    ShiftedSolver solver(m, mu);
    std::vector<double> x = start_vector(L, 0);
    scale(x, 1.0 / norm2(x));
    double res = INFINITY;
    for (int it = 0; it < 8; ++it) {
        solver.solve(x);
        const double nx = norm2(x);
        if (!(nx > 0.0) || !std::isfinite(nx)) break;
        scale(x, 1.0 / nx);
        res = residual(m, x, mu);
        if (res <= tol && it >= 1) break;
    }
    if (!(res <= 100.0 * tol)) {
        throw std::runtime_error("eigenvector: inverse iteration did not converge (residual " +
                                 std::to_string(res) + ")");
    }
    fix_sign(x);
    return x;
}

EigenPairs symmetric_eigen_small(std::vector<double> a, std::size_t n) {
    std::vector<double> v(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0, total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                total += a[i * n + j] * a[i * n + j];
                if (i != j) off += a[i * n + j] * a[i * n + j];
            }
        }
        if (off <= 1e-30 * total || off == 0.0) break;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a[p * n + q];
                if (apq == 0.0) continue;
                const double theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a[k * n + p], akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a[p * n + k], aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v[k * n + p], vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return a[x * n + x] < a[y * n + y]; });
    EigenPairs out;
    for (std::size_t j : order) {
        out.values.push_back(a[j * n + j]);
        std::vector<double> col(n);
        for (std::size_t k = 0; k < n; ++k) col[k] = v[k * n + j];
        out.vectors.push_back(std::move(col));
    }
    return out;
}

EigenPairs cluster_subspace(const HamiltonianMatrix& m, double lo, double hi, double tol) {
    if (!(lo < hi)) throw std::invalid_argument("cluster_subspace: need lo < hi");
    const std::size_t L = m.size();
    const std::size_t k = count_below(m, hi) - count_below(m, lo);
    EigenPairs out;
    if (k == 0) return out;
    const double sigma = lo + 0.5123 * (hi - lo);
    ShiftedSolver solver(m, sigma);

    std::vector<std::vector<double>> x(k);
    for (std::size_t j = 0; j < k; ++j) x[j] = start_vector(L, j);
    auto orthonormalize = [&]() {
        for (std::size_t j = 0; j < k; ++j) {
            for (int pass = 0; pass < 2; ++pass) {
                for (std::size_t i = 0; i < j; ++i) {
                    double dot = 0.0;
                    for (std::size_t n = 0; n < L; ++n) dot += x[i][n] * x[j][n];
                    for (std::size_t n = 0; n < L; ++n) x[j][n] -= dot * x[i][n];
                }
            }
            const double nx = norm2(x[j]);
            if (!(nx > 0.0)) throw std::runtime_error("cluster_subspace: basis collapsed");
            scale(x[j], 1.0 / nx);
        }
    };
    orthonormalize();
    for (int it = 0; it < 4; ++it) {
        for (auto& col : x) solver.solve(col);
        orthonormalize();
    }

    // Rayleigh-Ritz on the block
    std::vector<std::vector<double>> mx(k);
    for (std::size_t j = 0; j < k; ++j) mx[j] = multiply(m, x[j]);
    std::vector<double> h(k * k);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            double dot = 0.0;
            for (std::size_t n = 0; n < L; ++n) dot += x[i][n] * mx[j][n];
            h[i * k + j] = dot;
        }
    }
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < i; ++j) h[i * k + j] = h[j * k + i] = 0.5 * (h[i * k + j] + h[j * k + i]);
    }
    const EigenPairs ritz = symmetric_eigen_small(h, k);
    out.values = ritz.values;
    for (std::size_t j = 0; j < k; ++j) {
        std::vector<double> v(L, 0.0);
        for (std::size_t i = 0; i < k; ++i) {
            const double c = ritz.vectors[j][i];
            for (std::size_t n = 0; n < L; ++n) v[n] += c * x[i][n];
        }
        scale(v, 1.0 / norm2(v));
        fix_sign(v);
        if (residual(m, v, out.values[j]) > 100.0 * std::max(tol, hi - lo)) {
            throw std::runtime_error("cluster_subspace: block iteration did not converge");
        }
        out.vectors.push_back(std::move(v));
    }
    return out;
}

}  // namespace sturmian
