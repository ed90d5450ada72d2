// eigensolve.hpp: inertia counting, bisection and inverse iteration for real
// symmetric banded and cyclic-banded matrices.

#pragma once

#include "sturmian/operators.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace sturmian {

/// Raised when M - E I has a (numerically) zero pivot and retries ran out.
class FactorizationBreakdown : public std::runtime_error {
public:
    FactorizationBreakdown(double energy, double suggested_shift)
        : std::runtime_error("factorization breakdown; shift E and retry"),
          energy_(energy), shift_(suggested_shift) {}
    double energy() const noexcept { return energy_; }
    double suggested_shift() const noexcept { return shift_; }

private:
    double energy_;
    double shift_;
};

class ClusteredEigenvalueError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shift used after a breakdown: 1e-13 (1 + |E|).
double breakdown_shift(double energy);

/// Number of eigenvalues strictly below E, or nullopt on a zero pivot.
std::optional<std::size_t> try_count_below(const HamiltonianMatrix& m, double energy);

/// As above but retries at E + breakdown_shift(E) (up to 3 times) before throwing.
/// The count then refers to the shifted energy.
std::size_t count_below(const HamiltonianMatrix& m, double energy);

/// Counts for several energies in one sweep over the matrix.
void count_below(const HamiltonianMatrix& m, std::span<const double> energies,
                 std::span<std::size_t> counts);

struct Spectrum {
    std::vector<double> eigenvalues;  // sorted, repeated according to multiplicity
    double tol{0.0};
    std::size_t L{0};

    /// Eigenvalues with duplicates closer than tol merged.
    std::vector<double> distinct() const;
};

/// Eigenvalues in [lo, hi), each bracketed to width <= tol.
std::vector<double> eigenvalues_in(const HamiltonianMatrix& m, double lo, double hi, double tol);

Spectrum full_spectrum(const HamiltonianMatrix& m, double tol = 1e-12);

/// Unit eigenvector for an isolated eigenvalue mu, residual <= 100 tol.
/// The entry of largest magnitude is positive.
std::vector<double> eigenvector(const HamiltonianMatrix& m, double mu, double tol);

struct EigenPairs {
    std::vector<double> values;
    std::vector<std::vector<double>> vectors;
};

/// Orthonormal basis of the invariant subspace of all eigenvalues in [lo, hi),
/// with Ritz values. Meant for tight clusters.
EigenPairs cluster_subspace(const HamiltonianMatrix& m, double lo, double hi, double tol);

/// Dense symmetric eigensolver (cyclic Jacobi) for small n; a is row-major n x n.
/// Values ascending; vectors[j] belongs to values[j].
EigenPairs symmetric_eigen_small(std::vector<double> a, std::size_t n);

/// y = M x.
std::vector<double> multiply(const HamiltonianMatrix& m, std::span<const double> x);

}  // namespace sturmian
