// analysis.hpp: bulk spectra, gap labels, boundary spectra, spectral flow and
// winding numbers for periodic approximants of the cut & project models.

#pragma once

#include "sturmian/eigensolve.hpp"
#include "sturmian/operators.hpp"
#include "sturmian/sequences.hpp"

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sturmian {

struct AnalysisTolerances {
    double tol_spec{1e-10};   // eigenvalue bracket width
    double res_E{5e-10};      // covering-interval radius for gap detection
    int m_max{50};            // label search range
    double side_frac{0.5};    // weight needed on a boundary quarter
    double jump_tol{0.2};     // max energy jump per step, in gap widths
    int max_depth{12};        // adaptive bisection depth of the sweep
    double wind_tol{0.1};     // distance of the displacement sum to an integer
    double edge_snap{0.25};   // curve ends closer than this (in gap widths) close to an edge
};

// ------------------------------- models ------------------------------------

enum class ModelKind { Sturmian, Augmented, Smoothed };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view text);

/// One periodic approximant family. phi0 is the intercept of the Sturmian
/// member and the origin of boundary sweeps; k selects the singular intercept
/// {k theta} whose flip the augmented bulk union interpolates.
struct Model {
    CutProjectParams params;
    ModelKind kind{ModelKind::Sturmian};
    double epsilon{0.1};
    double phi0{0.0};
    std::int64_t k{0};

    static Model sturmian(const CutProjectParams& params);
    static Model augmented(const CutProjectParams& params);
    static Model smoothed(const CutProjectParams& params, double epsilon);

    std::int64_t period() const { return params.period(); }
};

/// Modular inverse of p mod q.
std::int64_t inverse_mod(std::int64_t p, std::int64_t q);

// ------------------------------ bulk & gaps --------------------------------

struct BulkSample {
    double param{0.0};  // phi (Sturmian, Smoothed) or t (Augmented)
    std::vector<double> eigenvalues;
};

struct BulkSpectrum {
    std::vector<BulkSample> samples;
    std::vector<double> all;                          // sorted union
    std::vector<std::pair<double, double>> cover;     // merged [e - res_E, e + res_E]
    std::size_t L{0};
    double tol{0.0};

    std::size_t count_below(double energy) const;
};

/// Periodic-boundary spectra over a parameter grid. Sturmian uses the single
/// intercept phi0 (all intercepts give the same spectrum); Smoothed samples
/// phi = j / grid; Augmented samples t = j / (grid - 1) at the flip of k.
BulkSpectrum bulk_spectrum(const Model& model, const OperatorSpec& spec, std::size_t grid,
                           const AnalysisTolerances& tol = {}, std::size_t threads = 1);

/// Fraction of eigenvalues below E.
double ids(const Spectrum& spectrum, double energy);
double ids(const BulkSpectrum& bulk, double energy);

struct GapLabel {
    int n{0};
    int m{0};
    double residual{0.0};
    bool reliable{true};
};

struct Gap {
    double E0{0.0};
    double E1{0.0};
    double ids{0.0};
    std::optional<GapLabel> label;

    double width() const noexcept { return E1 - E0; }
    double mid() const noexcept { return 0.5 * (E0 + E1); }
};

/// Open intervals between covering intervals with width >= min_width, in
/// energy order, with the IDS at the midpoint.
std::vector<Gap> find_gaps(const BulkSpectrum& bulk, double min_width);

/// (n, m) minimising |ids - (n + m theta)| with |m| <= m_max and n + m theta in
/// [0, 1]; ties go to smaller |m|. Flagged unreliable if the residual exceeds label_tol.
GapLabel gap_label(double ids_value, double theta, int m_max, double label_tol);

/// Labels every gap with label_tol = 10 / q.
void label_gaps(std::vector<Gap>& gaps, const CutProjectParams& params, int m_max = 50);

/// Indices (into gaps) of the `count` widest gaps, returned in energy order.
std::vector<std::size_t> prominent_gaps(const std::vector<Gap>& gaps, std::size_t count = 6);

// ------------------------------ boundary -----------------------------------

enum class Side { Left, Right, Unknown };
std::string_view to_string(Side side);

/// Left if the first ceil(L/4) sites carry >= side_frac of the weight, Right
/// for the last ceil(L/4) sites, Unknown otherwise.
Side edge_side(std::span<const double> psi, double side_frac = 0.5);

enum class ParamKind { Phi, T };

struct FlowPoint {
    std::int64_t shift{0};   // cyclic shift (boundary sweep) or sample ordinal (flow)
    ParamKind kind{ParamKind::Phi};
    std::int64_t k{0};       // singular index for t-samples
    double param{0.0};       // phi or t
    double u{0.0};           // sweep coordinate
    double energy{0.0};
    Side side{Side::Unknown};
    int gap_id{0};
};

struct InGapState {
    double energy{0.0};
    Side side{Side::Unknown};
    double left_weight{0.0};
    double right_weight{0.0};
};

/// In-gap eigenvalues of a Dirichlet matrix with their boundary sides. Nearly
/// degenerate groups are resolved by diagonalising the left-quarter weight
/// inside their common eigenspace.
std::vector<InGapState> in_gap_states(const HamiltonianMatrix& m, const Gap& gap,
                                      const AnalysisTolerances& tol = {});

/// Dirichlet spectra of the cyclic shifts n = 0..N-1 of the length-q word of
/// the model (shifts wrap mod q). Only in-gap eigenvalues are reported.
std::vector<FlowPoint> boundary_sweep(const Model& model, const OperatorSpec& spec,
                                      const std::vector<Gap>& gaps, std::size_t shifts,
                                      const AnalysisTolerances& tol = {}, std::size_t threads = 1);

/// Measure of the union of [E - radius, E + radius] ∩ (E0, E1) over in-gap
/// points, divided by the gap width.
double gap_coverage(const std::vector<FlowPoint>& points, const Gap& gap, double radius);

// ------------------------------ spectral flow ------------------------------

struct FlowCurve {
    int gap_id{0};
    std::vector<FlowPoint> points;
    bool closed{false};
};

struct FlowOptions {
    std::size_t grid{512};       // Smoothed: samples of phi in [0, 1)
    std::size_t t_per_flip{2};   // Augmented: samples per flip, t = j / t_per_flip
    std::size_t threads{1};
};

struct FlowSweep {
    int gap_id{0};
    Gap gap;
    std::vector<FlowPoint> points;   // every in-gap state at every sample, in sweep order
    std::vector<FlowCurve> curves;   // Left-side trajectories
    bool split{false};               // some step could not be resolved at max depth
    std::size_t samples{0};
};

class IllDefinedFlow : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Sweep of the Dirichlet problem on the length-q window: phi in [0, 1) for
/// Smoothed; for Augmented the coordinate u in [0, q) visits the flips in phi
/// order, u = j + t at phi = j / q. Sturmian is refused (IllDefinedFlow).
std::vector<FlowSweep> spectral_flow(const Model& model, const OperatorSpec& spec,
                                     const std::vector<Gap>& gaps, const FlowOptions& options = {},
                                     const AnalysisTolerances& tol = {});

class UnderResolvedSweep : public std::runtime_error {
public:
    UnderResolvedSweep(double raw, const std::string& what)
        : std::runtime_error(what), raw_(raw) {}
    double raw() const noexcept { return raw_; }

private:
    double raw_;
};

/// Signed crossings of the gap midline along the curves.
int winding_crossings(const std::vector<FlowCurve>& curves, const Gap& gap);

/// Sum of energy increments along the curves, open ends closed to the nearest
/// edge within edge_snap widths, divided by the gap width (not rounded).
double displacement_sum(const std::vector<FlowCurve>& curves, const Gap& gap,
                        double edge_snap = 0.25);

/// Rounded displacement sum; throws UnderResolvedSweep beyond wind_tol.
int winding_displacement(const std::vector<FlowCurve>& curves, const Gap& gap,
                         double wind_tol = 0.1, double edge_snap = 0.25);

// ------------------------------ verification -------------------------------

struct VerifyOptions {
    double min_width{0.01};
    std::size_t max_gaps{6};
    std::size_t bulk_grid{128};
    FlowOptions flow{};
    AnalysisTolerances tol{};
};

struct GapReport {
    int gap_id{0};
    Gap gap;
    int w_crossings{0};
    std::optional<int> w_displacement;
    double displacement_raw{0.0};
    bool pass{false};
    bool split{false};
    std::string error;
};

struct CorrespondenceReport {
    Model model;
    std::string hamiltonian;
    VerifyOptions options;
    int orientation_gap{-1};
    int orientation_sign{0};
    std::vector<GapReport> gaps;

    bool all_pass() const;
    bool numerical_failure() const;
};

class OrientationGapMissing : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// For each prominent gap: windings from both estimators and the check
/// s W = -m, with the sign s fixed once so that the (0, 1) gap has s W = -1.
CorrespondenceReport verify_correspondence(const Model& model, const OperatorSpec& spec,
                                           std::string hamiltonian_name,
                                           const VerifyOptions& options = {});

void write_report_json(std::ostream& out, const CorrespondenceReport& report);

/// Columns shift, param_kind, k, param, energy, side, gap_id.
void write_flow_csv(std::ostream& out, const std::vector<FlowPoint>& points);

}  // namespace sturmian
