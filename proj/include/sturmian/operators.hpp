// operators.hpp: pattern-equivariant tight-binding matrices built from words
// through sliding block codes.

#pragma once

#include "sturmian/sequences.hpp"

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <utility>
#include <vector>

namespace sturmian {

/// Local rule of range r: maps the 2r+1 letters centred at n to a real number.
struct SlidingBlockCode {
    int range{0};
    std::function<double(std::span<const double>)> eval;

    static SlidingBlockCode constant(double value);
};

/// H = sum_k (b_k T^k + h.c.) + v with offsets k > 0.
struct OperatorSpec {
    std::map<int, SlidingBlockCode> hopping;
    SlidingBlockCode onsite;

    /// Laplacian plus potential 0 on a, 1 on b; letters are thresholded at (a+b)/2.
    static OperatorSpec kohmoto(const CutProjectParams& params);
    /// Laplacian plus potential 2 (x - a) / (b - a); 0 on a and 2 on b.
    static OperatorSpec normalized(const CutProjectParams& params);

    int bandwidth() const;
    int max_range() const;
};

enum class Boundary { Periodic, Dirichlet };

/// Real symmetric (cyclic-)banded matrix. band(k, i) is the coupling between i
/// and i + k, taken mod L for periodic matrices.
class HamiltonianMatrix {
public:
    HamiltonianMatrix() = default;
    HamiltonianMatrix(std::size_t size, int bandwidth, Boundary bc);

    std::size_t size() const noexcept { return diag_.size(); }
    int bandwidth() const noexcept { return static_cast<int>(band_.size()); }
    Boundary boundary() const noexcept { return bc_; }

    double diagonal(std::size_t i) const { return diag_[i]; }
    double band(int k, std::size_t i) const { return band_[static_cast<std::size_t>(k - 1)][i]; }
    void set_diagonal(std::size_t i, double v) { diag_[i] = v; }
    void set_band(int k, std::size_t i, double v);

    std::span<const double> diagonal() const noexcept { return diag_; }
    std::span<const double> band(int k) const { return band_[static_cast<std::size_t>(k - 1)]; }

    double entry(std::size_t i, std::size_t j) const;
    /// Row-major dense copy.
    std::vector<double> dense() const;
    /// Gershgorin interval containing the whole spectrum.
    std::pair<double, double> gershgorin() const;
    double norm_bound() const;

    /// Set when a periodic matrix was built from a word that is not one full period.
    bool approximant_warning() const noexcept { return warning_; }
    void set_approximant_warning(bool w) noexcept { warning_ = w; }

private:
    std::vector<double> diag_;
    std::vector<std::vector<double>> band_;
    Boundary bc_{Boundary::Dirichlet};
    bool warning_{false};
};

/// Periodic: the word is one period, matrix size = word length. Dirichlet: the
/// word carries max_range() padding letters on each side that feed the codes
/// but are not sites of the compressed matrix.
HamiltonianMatrix build_hamiltonian(const Word& word, const OperatorSpec& spec, Boundary bc);

/// letters'[i] = letters[(i + s) mod L]; the offset is kept.
Word cyclic_shift(const Word& word, std::int64_t s);
Word reversed(const Word& word);

/// Lower triangle as "i,j,value" rows.
void write_matrix_csv(std::ostream& out, const HamiltonianMatrix& m);

}  // namespace sturmian
