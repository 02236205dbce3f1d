#pragma once

#include "quadbraid/models.hpp"
#include "quadbraid/verifier.hpp"

#include <functional>
#include <string>
#include <vector>

namespace quadbraid {

/// An open chain built on quantum legs 1..N (SP) or 1..2N (SNP/semidynamical)
/// plus the auxiliary leg 0.
struct ChainSpec {
    ModelSpec model;
    int N = 2;  // number of sites (SNP chains use 2N legs)
    ChiMode chi_mode = ChiMode::Identity;
    std::vector<Cplx> site_u;  // per-leg quantum spectral parameters, default 0

    bool alternating() const {
        return model.boundary == Boundary::SNP || model.flavor == Flavor::SemiDynamical;
    }
    int leg_count() const { return alternating() ? 2 * N : N; }
    Cplx site_parameter(int leg) const {
        return leg - 1 < static_cast<int>(site_u.size()) ? site_u[leg - 1] : Cplx(0.0);
    }
};

ChainSpec make_chain(const ModelSpec& model, int N);

struct TransferMatrix {
    Cplx u{};
    DiffOp op;  // on the quantum legs; collapses to a pure operator when all shifts cancel
};

enum class FactorKind { ChiLeft, ExpMinus, A, C, T, D, B, ExpPlus, ChiRight };

/// One factor of the ordered double-row product, as a function of the
/// auxiliary spectral parameter.
struct ChainFactor {
    FactorKind kind;
    int site = -1;  // quantum leg for A/B/C/D, -1 otherwise
    std::string label;
    bool u_dependent = false;
    std::function<DiffOp(Cplx)> at;
};

/// The ordered factor sequence of the chain's double-row transfer matrix.
std::vector<ChainFactor> chain_factors(const ChainSpec& chain);

/// Product of the factors at auxiliary parameter u, traced over leg 0.
TransferMatrix transfer(const ChainSpec& chain, Cplx u);

/// Named builders (each checks the chain matches its flavor/boundary).
TransferMatrix transfer_nondyn_sp(const ChainSpec& chain, Cplx u);
TransferMatrix transfer_nondyn_snp(const ChainSpec& chain, Cplx u);
TransferMatrix transfer_semidyn(const ChainSpec& chain, Cplx u);
TransferMatrix transfer_fulldyn_sp(const ChainSpec& chain, Cplx u);
TransferMatrix transfer_fulldyn_snp(const ChainSpec& chain, Cplx u);

/// The displayed closed form of t(0) (all spectral parameters zero).
DiffOp closed_t0(const ChainSpec& chain);

/// The boundary matrix X_k = tr_0 P_0k B_0k(u, 0) on leg k.
LambdaMap boundary_X(const ModelSpec& m, int leg, Cplx u);

/// chi-conjugation: absorbs the scalar dual solution into the structure
/// matrices; the returned model carries the redefined bundle, T~ = chi^t T
/// and the trivial chi~ = 1. In the fully dynamical flavor chi must be
/// diagonal.
ModelSpec chi_conjugate(const ModelSpec& m, bool verify_dual = true,
                        const VerifyOptions& opt = {});

/// The product of boundary factors conjugating the original transfer matrix
/// into the one built from the chi-conjugated model.
LambdaMap conjugation_operator(const ChainSpec& chain);

struct CommutationScan {
    struct Entry {
        Cplx u, v;
        double residual;
    };
    std::vector<Entry> grid;
    double max_residual = 0.0;
    int points = 0;
    int skipped = 0;  // singular evaluation points
};

/// Max residual of [t(u), t(v)] over the grid, compared as difference
/// operators grouped by exact shift vector.
CommutationScan commutation_scan(const ChainSpec& chain, std::span<const Cplx> us,
                                 std::span<const Cplx> vs, std::span<const Lambda> lambdas);

}  // namespace quadbraid
