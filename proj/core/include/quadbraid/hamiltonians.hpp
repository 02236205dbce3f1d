#pragma once

#include "quadbraid/chains.hpp"

#include <string>
#include <vector>

namespace quadbraid {

struct FdOptions {
    double step = 1e-4;      // finite-difference step in the auxiliary parameter
    bool richardson = true;  // one extrapolation level on the 4th-order stencil
    double tolerance = 1e-6;
};

/// t'(0) t(0)^{-1} by central differences. For a semidynamical chain whose
/// coefficients are lambda-independent the operator is restricted to
/// lambda-constant functions first (the shifts act trivially there).
DiffOp log_derivative(const ChainSpec& chain, const FdOptions& fd = {});

/// Right variant t(0)^{-1} t'(0).
DiffOp log_derivative_right(const ChainSpec& chain, const FdOptions& fd = {});

/// Per-factor decomposition: one term per u-dependent factor of the
/// double-row product, term_k = tr_0(F_1 ... F_k' ... F_m) t(0)^{-1}.
/// The terms sum to log_derivative exactly (up to stencil error).
std::vector<std::pair<std::string, DiffOp>> log_derivative_terms(const ChainSpec& chain,
                                                                 const FdOptions& fd = {});

/// Difference of two Richardson levels at the probe points; an empirical
/// convergence certificate for the stencil.
double fd_convergence(const ChainSpec& chain, const FdOptions& fd, std::span<const Lambda> probes);

/// Logarithmic u-derivative of a placed two-leg family at zero arguments:
/// d/du M_ab(u, 0) |_0 * M_ab(0,0)^{-1}.
LambdaMap curly(const DynamicalMatrix& m, int a, int b, double h = 1e-4);

/// P_ab M_ab: the permuted matrix whose curly letter drives the bulk terms.
LambdaMap check_matrix(const DynamicalMatrix& m, int a, int b, Cplx u1, Cplx u2);

/// Ad(A) . B = A B A^{-1} pointwise in lambda.
LambdaMap ad(const LambdaMap& a, const LambdaMap& b);

/// tr_0( P_0k e^{-D_k} B_0k e^{+D_0} chi_0^{SC t} ) as a difference operator;
/// with diagonal chi it collapses to the shift-conjugated diagonal X.
DiffOp boundary_X_full(const ModelSpec& m, int leg, Cplx u, bool with_chi);

struct HamiltonianTerm {
    std::string label;
    DiffOp op;
    std::vector<int> window;     // legs with non-diagonal action
    std::vector<int> tail;       // legs with diagonal (weight-basis) action only
    std::string locality_class;  // bulk-2site | boundary | abelian-tail | nonlocal
    double closed_residual = -1.0;  // vs the matching closed-form term, when paired
};

struct HamiltonianReport {
    std::vector<HamiltonianTerm> terms;
    DiffOp total;
    double residual_vs_numeric = -1.0;   // closed-form total vs numeric derivative
    double bulk_residual = -1.0;         // bulk part only, when separable
    double boundary_residual = -1.0;     // boundary part only, when separable
    double left_right_agreement = -1.0;  // |t' t^-1 - t^-1 t'|
    double fd_convergence = -1.0;
    bool locality_pass = false;
    std::string note;
};

/// Assembles the displayed closed form for the chain's flavor/boundary and
/// compares it term by term (SP) or in total (alternating chains) against
/// the numeric logarithmic derivative.
HamiltonianReport closed_form_H(const ChainSpec& chain, const FdOptions& fd,
                                std::span<const Lambda> samples);

/// The explicit model's printed closed forms: nearest-neighbour bulk weight
/// h(lambda) with coth brackets, boundary weights f, g and the inverse
/// boundary trace.
DenseOperator gl2_bulk_h(const Lambda& lambda, Cplx gamma);
Cplx gl2_f(const Lambda& lambda, Cplx gamma, Cplx xi);
Cplx gl2_g(const Lambda& lambda, Cplx gamma, Cplx xi);
Cplx gl2_tr_chi_sc_inv(const Lambda& lambda, Cplx gamma, Cplx xi);

/// End-to-end reproduction of the explicit model's Hamiltonian: numeric
/// derivative of the SP chain with the diagonal boundary solution, compared
/// against the printed bulk and boundary closed forms. Bulk residuals must
/// vanish; boundary residuals are reported with both values (transcription
/// risk in the printed weights).
HamiltonianReport gl2_example_H(int N, Cplx gamma, Cplx xi, const FdOptions& fd,
                                std::span<const Lambda> samples);

enum class LegAction { Identity, Diagonal, General };

/// Per-leg action classification of a pure operator at one lambda.
std::vector<LegAction> classify_legs(const DenseOperator& op, const std::vector<int>& legs,
                                     double tol = 1e-9);

struct LocalityReport {
    bool pass = false;
    int window_bound = 2;
    std::vector<HamiltonianTerm> terms;
    std::string note;
};

/// Locality audit: every term must act non-trivially on a contiguous window
/// of at most `window_bound` legs, diagonally (weight basis) everywhere
/// else; terms whose window is the last site count as boundary terms.
LocalityReport locality_report(const std::vector<std::pair<std::string, DiffOp>>& terms,
                               int total_legs, int window_bound, std::span<const Lambda> samples);

/// Eigenvalues sorted by real part (ties by imaginary part), plus the
/// commutation residual with one probe transfer matrix as a conserved-charge
/// consistency number. H must have zero shift part at the given lambda.
struct SpectrumResult {
    std::vector<Cplx> eigenvalues;
    double probe_commutation = -1.0;
};

SpectrumResult spectrum(const DiffOp& H, const Lambda& lambda, const ChainSpec& chain, Cplx probe_v);

}  // namespace quadbraid
