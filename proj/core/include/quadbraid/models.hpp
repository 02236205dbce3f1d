#pragma once

#include "quadbraid/shift.hpp"

#include <functional>
#include <string>

namespace quadbraid {

enum class Flavor { NonDynamical, SemiDynamical, FullyDynamical };
enum class Boundary { SP, SNP };
enum class ChiMode { Identity, Diagonal, NonDiagonal };

std::string to_string(Flavor f);
std::string to_string(Boundary b);
std::string to_string(ChiMode c);

/// A named bundle of structure data for one quadratic exchange algebra.
///
/// The four structure matrices and the dual four live on template legs
/// {1,2} with two spectral arguments each; the scalar representations T and
/// chi live on leg {1} with one spectral argument. Every DynamicalMatrix in
/// the bundle carries step = shift_sign * gamma, the lambda-translation
/// quantum used by all shift machinery, so a model whose printed relations
/// shift by -gamma h just sets shift_sign = -1.
struct ModelSpec {
    std::string name;
    int n = 2;
    Cplx gamma{0.2, 0.0};
    Cplx xi{1.1, 0.0};
    Flavor flavor = Flavor::NonDynamical;
    Boundary boundary = Boundary::SP;
    ChiMode chi_mode = ChiMode::Identity;
    int shift_sign = 1;
    bool chi_diagonal = true;

    DynamicalMatrix A, B, C, D;                      // exchange relation, arity 2
    DynamicalMatrix Adual, Bdual, Cdual, Ddual;      // dual exchange relation, arity 2
    DynamicalMatrix T, chi;                          // scalar representations, arity 1

    std::function<bool(const Lambda&)> lambda_guard;
    std::function<bool(Cplx)> u_guard;  // guard on a single spectral combination

    Cplx step() const { return static_cast<double>(shift_sign) * gamma; }
    bool dynamical() const { return flavor != Flavor::NonDynamical; }
};

/// Entry functions of the rank-two trigonometric solution used by the
/// explicit model: weights alpha, beta and their lambda-parity partners.
Cplx gl2_alpha(const Lambda& lambda, Cplx u, Cplx gamma);
Cplx gl2_beta(const Lambda& lambda, Cplx u, Cplx gamma);

/// R, dual R and the diagonal boundary solution of the explicit model.
DenseOperator gl2_R(const Lambda& lambda, Cplx u, Cplx gamma);
DenseOperator gl2_R_dual(const Lambda& lambda, Cplx u, Cplx gamma);
DenseOperator gl2_chi(const Lambda& lambda, Cplx u, Cplx gamma, Cplx xi);
DenseOperator gl2_T();

/// Full catalog entries.
ModelSpec gl2_model(Cplx gamma = Cplx(0.2, 0.0), Cplx xi = Cplx(1.1, 0.0),
                    ChiMode chi_mode = ChiMode::Diagonal);

/// Trigonometric six-vertex control model, lambda-independent. `eta` plays
/// the role of the deformation parameter.
DenseOperator sixvertex_R(Cplx u, Cplx eta);
ModelSpec sixvertex_model(Cplx eta = Cplx(0.2, 0.0), Boundary boundary = Boundary::SP);

/// The control model routed through the semidynamical machinery; all entry
/// functions are lambda-independent, so the semidynamical exchange relation
/// degenerates to the non-dynamical one.
ModelSpec sixvertex_semidynamical(Cplx eta = Cplx(0.2, 0.0));

/// A non-scalar constant solution of the control model's dual relation
/// (antidiagonal); used by the conjugation covariance checks.
DenseOperator sixvertex_dual_chi(Cplx eta = {});

/// Parse a model configuration (JSON text). Recognized fields:
///   schema (optional, must be 1), name ("gl2" | "sixvertex"), n, gamma,
///   xi, flavor, boundary, chi ("identity"|"diagonal"|"nondiagonal"),
///   shift_sign. Unknown fields are rejected.
ModelSpec load_model_json(const std::string& text);
ModelSpec load_model_file(const std::string& path);

/// Copy of the model with noise of size eps injected into A's entries
/// (seeded, deterministic). Used as a falsifiability control.
ModelSpec perturbed(const ModelSpec& m, double eps, std::uint64_t seed = 17);

}  // namespace quadbraid
