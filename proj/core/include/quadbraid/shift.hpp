#pragma once

#include "quadbraid/tensor.hpp"

#include <functional>
#include <map>
#include <utility>

namespace quadbraid {

/// Matrix-valued function of the dynamical parameter lambda in C^n.
struct LambdaMap {
    std::vector<int> legs;
    int n = 0;
    std::function<DenseOperator(const Lambda&)> eval;
};

LambdaMap constant_map(const DenseOperator& op);
LambdaMap lambda_sum(const LambdaMap& a, const LambdaMap& b);
LambdaMap lambda_product(const LambdaMap& a, const LambdaMap& b);
LambdaMap lambda_scale(const LambdaMap& a, Cplx s);
LambdaMap lambda_inverse(const LambdaMap& a, double cond_threshold = 1e12);
LambdaMap lambda_transpose(const LambdaMap& a, const std::vector<int>& legs);
LambdaMap lambda_shift_arg(const LambdaMap& a, const Lambda& offset);

/// Matrix-valued function of (spectral arguments, lambda). `step` is the
/// lambda-translation quantum used by every shift construction applied to
/// this family (weight embedding, column/row shifts, exp factors).
struct DynamicalMatrix {
    std::vector<int> legs;
    int arity = 0;  // number of spectral arguments: 0, 1 or 2
    int n = 0;
    Cplx step{};
    std::function<DenseOperator(std::span<const Cplx>, const Lambda&)> eval;

    LambdaMap bind(std::vector<Cplx> us) const;
};

/// Weight-shifted argument embedding: returns the operator on
/// legs(M) + shift legs equal to
///   sum over weight indices w of  M(lambda + step * sum_k sign_k e_{w_k})
///     (x) prod_k E_{w_k w_k} on the shift legs.
/// Realizes M(lambda + gamma h_a + ...) blockwise; the shift legs must be
/// disjoint from M's legs.
LambdaMap weight_shift_embed(const LambdaMap& m, const std::vector<std::pair<int, int>>& shift_legs,
                             Cplx step);

/// DynamicalMatrix-level wrapper: same shift on every spectral evaluation.
DynamicalMatrix weight_shift_embed(const DynamicalMatrix& m,
                                   const std::vector<std::pair<int, int>>& shift_legs);

enum class ShiftIndex { Column, Row };

/// Entrywise shift of the lambda argument keyed by the column (or row)
/// index on the named legs: entry (..i.., ..j..) of the result is the same
/// entry of M evaluated at lambda - sign * step * e_j (Column) or e_i (Row),
/// one contribution per named leg.
LambdaMap sc_shift(const LambdaMap& m, ShiftIndex mode, int sign, const std::vector<int>& legs,
                   Cplx step);
DynamicalMatrix sc_shift(const DynamicalMatrix& m, ShiftIndex mode, int sign,
                         const std::vector<int>& legs);

/// Place a two-leg family on legs (a, b) with spectral arguments (ua, ub);
/// the result lives on the canonically ordered pair.
LambdaMap place2(const DynamicalMatrix& m, int a, int b, Cplx ua, Cplx ub);

/// Place a one-leg family on leg a with spectral argument u.
LambdaMap place1(const DynamicalMatrix& m, int a, Cplx u);

/// Weight-shift embed with +1 signs on every listed leg.
LambdaMap shifted_up(const LambdaMap& m, const std::vector<int>& legs, Cplx step);

/// Finite sum of (lambda-dependent coefficient) x (lambda translation by
/// step * s), s in Z^n. Acting on a function f of lambda:
///   (X f)(lambda) = sum_s M_s(lambda) f(lambda + step * s).
/// Shift vectors are exact integer keys; the composition law
///   (M_s S_s)(M_r S_r) = M_s(lambda) M_r(lambda + step*s) S_{s+r}
/// holds by construction.
class DiffOp {
public:
    DiffOp() = default;
    DiffOp(int n, Cplx step) : n_(n), step_(step) {}

    int n() const { return n_; }
    Cplx step() const { return step_; }
    const std::map<std::vector<int>, LambdaMap>& terms() const { return terms_; }
    bool empty() const { return terms_.empty(); }

    void add_term(const std::vector<int>& shift, const LambdaMap& coeff);

    /// Coefficients evaluated at one lambda; keys with norm below tol
    /// (relative to the largest coefficient) are pruned.
    std::map<std::vector<int>, DenseOperator> evaluate(const Lambda& lambda,
                                                       double prune_tol = 1e-13) const;

    /// Sum of all coefficients at fixed lambda: the action on lambda-constant
    /// functions.
    DenseOperator collapse(const Lambda& lambda) const;

private:
    int n_ = 0;
    Cplx step_{};
    std::map<std::vector<int>, LambdaMap> terms_;
};

DiffOp diffop_from(const LambdaMap& coeff, int n, Cplx step);
DiffOp diffop_from(const DenseOperator& op, int n, Cplx step);
DiffOp diffop_identity(int n, Cplx step);

/// sum_i E_ii on the leg x translation by sign * e_i. Realizes the
/// exponential of (sign * step * sum_i h_i d/d lambda_i) attached to a leg.
DiffOp exp_shift(int leg, int sign, int n, Cplx step);

DiffOp diffop_mul(const DiffOp& x, const DiffOp& y);
DiffOp diffop_add(const DiffOp& x, const DiffOp& y);
DiffOp diffop_sub(const DiffOp& x, const DiffOp& y);
DiffOp diffop_scale(const DiffOp& x, Cplx s);
DiffOp diffop_trace(const DiffOp& x, int leg);
DiffOp diffop_commutator(const DiffOp& x, const DiffOp& y);

/// Max over samples and shift vectors of the coefficient difference in the
/// Frobenius norm. Missing keys count as zero coefficients.
double diffop_residual(const DiffOp& x, const DiffOp& y, std::span<const Lambda> samples);

/// Residual of X against the zero operator.
double diffop_norm(const DiffOp& x, std::span<const Lambda> samples);

/// True when every nonzero coefficient across the samples sits at shift 0.
bool diffop_is_pure(const DiffOp& x, std::span<const Lambda> samples, double tol = 1e-11);

/// The zero-shift coefficient as a lambda function (other keys ignored).
LambdaMap diffop_pure_part(const DiffOp& x);

}  // namespace quadbraid
