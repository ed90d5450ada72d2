#include "sturmian/operators.hpp"

#include "sturmian/io.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

namespace sturmian {

SlidingBlockCode SlidingBlockCode::constant(double value) {
    return {0, [value](std::span<const double>) { return value; }};
}

OperatorSpec OperatorSpec::kohmoto(const CutProjectParams& params) {
    const double mid = 0.5 * (params.a() + params.b());
    OperatorSpec spec;
    spec.hopping.emplace(1, SlidingBlockCode::constant(1.0));
    spec.onsite = {0, [mid](std::span<const double> x) { return x[0] > mid ? 1.0 : 0.0; }};
    return spec;
}

OperatorSpec OperatorSpec::normalized(const CutProjectParams& params) {
    const double a = params.a();
    const double scale = 2.0 / (params.b() - params.a());
    OperatorSpec spec;
    spec.hopping.emplace(1, SlidingBlockCode::constant(1.0));
    spec.onsite = {0, [a, scale](std::span<const double> x) { return (x[0] - a) * scale; }};
    return spec;
}

int OperatorSpec::bandwidth() const {
    int k = 0;
    for (const auto& [offset, code] : hopping) k = std::max(k, offset);
    return k;
}

int OperatorSpec::max_range() const {
    int r = onsite.range;
    for (const auto& [offset, code] : hopping) r = std::max(r, code.range);
    return r;
}

// ---------------------------------------------------------------------------

HamiltonianMatrix::HamiltonianMatrix(std::size_t size, int bandwidth, Boundary bc)
    : diag_(size, 0.0), band_(static_cast<std::size_t>(std::max(bandwidth, 0)),
                              std::vector<double>(size, 0.0)),
      bc_(bc) {
    if (bc == Boundary::Periodic && size < 2 * static_cast<std::size_t>(bandwidth) + 1) {
        throw std::invalid_argument("HamiltonianMatrix: periodic size must be >= 2*bandwidth+1");
    }
}

void HamiltonianMatrix::set_band(int k, std::size_t i, double v) {
    if (bc_ == Boundary::Dirichlet && i + static_cast<std::size_t>(k) >= size()) {
        throw std::out_of_range("HamiltonianMatrix: coupling leaves a Dirichlet matrix");
    }
    band_[static_cast<std::size_t>(k - 1)][i] = v;
}

double HamiltonianMatrix::entry(std::size_t i, std::size_t j) const {
    if (i >= size() || j >= size()) throw std::out_of_range("HamiltonianMatrix::entry");
    if (i == j) return diag_[i];
    const std::size_t lo = std::min(i, j);
    const std::size_t hi = std::max(i, j);
    const std::size_t K = band_.size();
    if (hi - lo <= K) return band_[hi - lo - 1][lo];
    if (bc_ == Boundary::Periodic && size() - (hi - lo) <= K) {
        return band_[size() - (hi - lo) - 1][hi];
    }
    return 0.0;
}

std::vector<double> HamiltonianMatrix::dense() const {
    const std::size_t L = size();
    std::vector<double> out(L * L, 0.0);
    for (std::size_t i = 0; i < L; ++i) {
        out[i * L + i] = diag_[i];
        for (std::size_t k = 1; k <= band_.size(); ++k) {
            if (bc_ == Boundary::Dirichlet && i + k >= L) break;
            const std::size_t j = (i + k) % L;
            out[i * L + j] = band_[k - 1][i];
            out[j * L + i] = band_[k - 1][i];
        }
    }
    return out;
}

std::pair<double, double> HamiltonianMatrix::gershgorin() const {
    const std::size_t L = size();
    std::vector<double> radius(L, 0.0);
    for (std::size_t k = 1; k <= band_.size(); ++k) {
        for (std::size_t i = 0; i < L; ++i) {
            if (bc_ == Boundary::Dirichlet && i + k >= L) break;
            const double v = std::abs(band_[k - 1][i]);
            radius[i] += v;
            radius[(i + k) % L] += v;
        }
    }
    double lo = INFINITY, hi = -INFINITY;
    for (std::size_t i = 0; i < L; ++i) {
        lo = std::min(lo, diag_[i] - radius[i]);
        hi = std::max(hi, diag_[i] + radius[i]);
    }
    return {lo, hi};
}

double HamiltonianMatrix::norm_bound() const {
    const auto [lo, hi] = gershgorin();
    return std::max(std::abs(lo), std::abs(hi));
}

// ---------------------------------------------------------------------------

HamiltonianMatrix build_hamiltonian(const Word& word, const OperatorSpec& spec, Boundary bc) {
    const int K = spec.bandwidth();
    const int r = spec.max_range();
    if (!spec.onsite.eval) throw std::invalid_argument("build_hamiltonian: onsite code missing");
    for (const auto& [k, code] : spec.hopping) {
        if (k <= 0) throw std::invalid_argument("build_hamiltonian: hopping offsets must be > 0");
        if (!code.eval) throw std::invalid_argument("build_hamiltonian: hopping code missing");
    }
    const auto W = static_cast<std::int64_t>(word.size());
    const std::int64_t L = bc == Boundary::Periodic ? W : W - 2 * r;
    if (W <= 2 * r + 1 || L < 1) {
        throw std::invalid_argument("build_hamiltonian: word of length " + std::to_string(W) +
                                    " is too short for code range " + std::to_string(r));
    }
    if (bc == Boundary::Periodic && L < 2 * K + 1) {
        throw std::invalid_argument("build_hamiltonian: periodic word shorter than 2*bandwidth+1");
    }

    HamiltonianMatrix m(static_cast<std::size_t>(L), K, bc);
    if (bc == Boundary::Periodic) m.set_approximant_warning(word.period != W);

    std::vector<double> block;
    auto fill_block = [&](std::int64_t site, int range) {
        block.resize(static_cast<std::size_t>(2 * range + 1));
        for (int j = -range; j <= range; ++j) {
            std::int64_t idx;
            if (bc == Boundary::Periodic) {
                idx = ((site + j) % W + W) % W;
            } else {
                idx = site + r + j;
            }
            block[static_cast<std::size_t>(j + range)] = word.letters[static_cast<std::size_t>(idx)];
        }
        return std::span<const double>(block);
    };

    for (std::int64_t n = 0; n < L; ++n) {
        m.set_diagonal(static_cast<std::size_t>(n), spec.onsite.eval(fill_block(n, spec.onsite.range)));
        for (const auto& [k, code] : spec.hopping) {
            if (bc == Boundary::Dirichlet && n + k >= L) continue;
            m.set_band(k, static_cast<std::size_t>(n), code.eval(fill_block(n, code.range)));
        }
    }
    return m;
}

Word cyclic_shift(const Word& word, std::int64_t s) {
    Word out = word;
    const auto L = static_cast<std::int64_t>(word.size());
    if (L == 0) return out;
    const std::int64_t shift = ((s % L) + L) % L;
    std::rotate(out.letters.begin(), out.letters.begin() + shift, out.letters.end());
    return out;
}

Word reversed(const Word& word) {
    Word out = word;
    std::reverse(out.letters.begin(), out.letters.end());
    return out;
}

void write_matrix_csv(std::ostream& out, const HamiltonianMatrix& m) {
    out << "i,j,value\n";
    const std::size_t L = m.size();
    for (std::size_t i = 0; i < L; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            const double v = m.entry(i, j);
            if (v != 0.0 || i == j) {
                out << i << ',' << j << ',' << io::format_double(v) << '\n';
            }
        }
    }
}

}  // namespace sturmian
