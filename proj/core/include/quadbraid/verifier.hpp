#pragma once

#include "quadbraid/models.hpp"
#include "quadbraid/sampling.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace quadbraid {

/// One named, sampled residual check: pass iff max residual < tolerance.
struct VerificationReport {
    std::string identity;
    std::string flavor;
    int samples = 0;
    double max_residual = 0.0;
    double tolerance = 1e-9;
    bool pass = false;
    std::vector<Cplx> worst_u;
    Lambda worst_lambda;
    std::string note;
};

nlohmann::ordered_json to_json(const VerificationReport& r);

struct VerifyOptions {
    int samples = 20;
    double tolerance = 1e-9;
    std::uint64_t seed = 7;
    int max_retries = 5;  // resampling factor near singular points
};

/// A_12 = A_21^{-1}, B_12 = C_21, D_12 = D_21^{-1} at sampled arguments.
VerificationReport check_unitarity(const ModelSpec& m, const VerifyOptions& opt = {});

/// A_12 A_13 A_23 = A_23 A_13 A_12 at fixed lambda (no shifts).
VerificationReport check_pure_ybe(const ModelSpec& m, const VerifyOptions& opt = {});

/// Shifted three-leg equation
///   M_12(l + s h_3) M_13(l) M_23(l + s h_1) = M_23(l) M_13(l + s h_2) M_12(l)
/// with s the family's own step. `swap_pattern` exchanges h_3 and h_1 on the
/// left side (a wrong-convention control that must fail).
VerificationReport check_gnf(const DynamicalMatrix& family, const ModelSpec& m,
                             const std::string& label, bool swap_pattern = false,
                             const VerifyOptions& opt = {});

/// The flavor's two-sided exchange relation for a scalar representation T.
VerificationReport check_exchange(const ModelSpec& m, const DynamicalMatrix& T,
                                  const VerifyOptions& opt = {});

/// The flavor's dual exchange relation for a scalar representation chi.
VerificationReport check_dual_exchange(const ModelSpec& m, const DynamicalMatrix& chi,
                                       const VerifyOptions& opt = {});

enum class ComodulePair { AB, CD, MixedAD };

/// The four comodule relations for (L, R) drawn from the structure matrices,
/// then the exchange relation for T' = L T(shifted) R.
VerificationReport check_comodule(const ModelSpec& m, ComodulePair pair,
                                  const VerifyOptions& opt = {});

enum class WeightMode { Total, Partial };

/// Total: [M, h_i (x) 1 + 1 (x) h_i] = 0 for all i. Partial: commutation
/// with h_i on the first leg only.
VerificationReport check_zero_weight(const DynamicalMatrix& family, const ModelSpec& m,
                                     const std::string& label, WeightMode mode,
                                     const VerifyOptions& opt = {});

/// Whether sum_ij T_ij K_ij, with both entry functions row-shifted by the
/// step, is independent of lambda (restriction criterion for the associated
/// difference-operator Hamiltonian).
VerificationReport check_lambda_independence(const ModelSpec& m, const DynamicalMatrix& T,
                                             const DynamicalMatrix& K,
                                             const VerifyOptions& opt = {});

/// The full identity suite for a cataloged model (8 named identities).
std::vector<VerificationReport> verify_suite(const ModelSpec& m, const VerifyOptions& opt = {});

/// Seeded admissible samples for a model.
std::vector<Lambda> sample_lambdas(const ModelSpec& m, int count, std::uint64_t seed,
                                   int max_retries = 5);
std::vector<std::pair<Cplx, Cplx>> sample_u_pairs(const ModelSpec& m, int count, std::uint64_t seed,
                                                  int max_retries = 5);

}  // namespace quadbraid
