#include "quadbraid/chains.hpp"

#include <algorithm>

namespace quadbraid {

ChainSpec make_chain(const ModelSpec& model, int N) {
    ChainSpec c;
    c.model = model;
    c.N = N;
    c.chi_mode = model.chi_mode;
    return c;
}

namespace {

// Shift set for a factor whose largest own quantum index is `own`: all
// quantum legs above it, restricted to odd labels in the semidynamical
// flavor.
std::vector<int> tail_legs(const ChainSpec& chain, int own) {
    std::vector<int> out;
    for (int k = own + 1; k <= chain.leg_count(); ++k) {
        if (chain.model.flavor == Flavor::SemiDynamical && k % 2 == 0) continue;
        out.push_back(k);
    }
    return out;
}

ChainFactor matrix_factor(const ChainSpec& chain, FactorKind kind, const DynamicalMatrix& m,
                          int site, const std::string& label) {
    const Cplx step = chain.model.step();
    const bool dynamical_tail = chain.model.flavor != Flavor::NonDynamical;
    const std::vector<int> tail = dynamical_tail ? tail_legs(chain, site) : std::vector<int>{};
    const Cplx usite = chain.site_parameter(site);
    const int n = chain.model.n;
    auto at = [m, site, usite, tail, step, n](Cplx u) {
        return diffop_from(shifted_up(place2(m, 0, site, u, usite), tail, step), n, step);
    };
    return ChainFactor{kind, site, label, true, at};
}

ChainFactor t_factor(const ChainSpec& chain) {
    const Cplx step = chain.model.step();
    const bool dynamical_tail = chain.model.flavor != Flavor::NonDynamical;
    const std::vector<int> tail = dynamical_tail ? tail_legs(chain, 0) : std::vector<int>{};
    const DynamicalMatrix T = chain.model.T;
    const int n = chain.model.n;
    auto at = [T, tail, step, n](Cplx u) {
        return diffop_from(shifted_up(place1(T, 0, u), tail, step), n, step);
    };
    return ChainFactor{FactorKind::T, -1, "T0", true, at};
}

ChainFactor chi_left_factor(const ChainSpec& chain) {
    const DynamicalMatrix chi = chain.model.chi;
    const int n = chain.model.n;
    const Cplx step = chain.model.step();
    auto at = [chi, n, step](Cplx u) {
        return diffop_from(lambda_transpose(place1(chi, 0, u), {0}), n, step);
    };
    return ChainFactor{FactorKind::ChiLeft, -1, "chi0_t", true, at};
}

ChainFactor chi_right_factor(const ChainSpec& chain) {
    // chi^{SC_0 t_0}: column shift on leg 0, then transpose
    const DynamicalMatrix chi = chain.model.chi;
    const int n = chain.model.n;
    const Cplx step = chain.model.step();
    auto at = [chi, n, step](Cplx u) {
        const LambdaMap sc = sc_shift(place1(chi, 0, u), ShiftIndex::Column, +1, {0}, step);
        return diffop_from(lambda_transpose(sc, {0}), n, step);
    };
    return ChainFactor{FactorKind::ChiRight, -1, "chi0_SCt", true, at};
}

ChainFactor exp_factor(const ChainSpec& chain, int sign) {
    const int n = chain.model.n;
    const Cplx step = chain.model.step();
    auto at = [n, step, sign](Cplx) { return exp_shift(0, sign, n, step); };
    return ChainFactor{sign > 0 ? FactorKind::ExpPlus : FactorKind::ExpMinus, -1,
                       sign > 0 ? "exp(+D0)" : "exp(-D0)", false, at};
}

}  // namespace

std::vector<ChainFactor> chain_factors(const ChainSpec& chain) {
    const ModelSpec& m = chain.model;
    std::vector<ChainFactor> out;
    const bool fully = m.flavor == Flavor::FullyDynamical;
    const bool semi = m.flavor == Flavor::SemiDynamical;
    const bool alternating = chain.alternating();

    if (fully) {
        out.push_back(exp_factor(chain, -1));
    } else if (chain.chi_mode != ChiMode::Identity) {
        out.push_back(chi_left_factor(chain));
    }

    if (!alternating) {
        for (int j = chain.N; j >= 1; --j)
            out.push_back(matrix_factor(chain, FactorKind::A, m.A, j, "A0" + std::to_string(j)));
        out.push_back(t_factor(chain));
        for (int j = 1; j <= chain.N; ++j)
            out.push_back(matrix_factor(chain, FactorKind::B, m.B, j, "B0" + std::to_string(j)));
    } else {
        for (int k = chain.N; k >= 1; --k) {
            out.push_back(
                matrix_factor(chain, FactorKind::A, m.A, 2 * k, "A0" + std::to_string(2 * k)));
            out.push_back(matrix_factor(chain, FactorKind::C, m.C, 2 * k - 1,
                                        "C0" + std::to_string(2 * k - 1)));
        }
        out.push_back(t_factor(chain));
        for (int k = 1; k <= chain.N; ++k) {
            out.push_back(matrix_factor(chain, FactorKind::D, m.D, 2 * k - 1,
                                        "D0" + std::to_string(2 * k - 1)));
            out.push_back(
                matrix_factor(chain, FactorKind::B, m.B, 2 * k, "B0" + std::to_string(2 * k)));
        }
    }

    if (fully) {
        out.push_back(exp_factor(chain, +1));
        if (chain.chi_mode != ChiMode::Identity) out.push_back(chi_right_factor(chain));
    } else if (semi) {
        out.push_back(exp_factor(chain, +1));
    }
    return out;
}

TransferMatrix transfer(const ChainSpec& chain, Cplx u) {
    const auto factors = chain_factors(chain);
    DiffOp prod = factors.front().at(u);
    for (size_t i = 1; i < factors.size(); ++i) prod = diffop_mul(prod, factors[i].at(u));
    return TransferMatrix{u, diffop_trace(prod, 0)};
}

namespace {

void require(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

TransferMatrix transfer_nondyn_sp(const ChainSpec& chain, Cplx u) {
    require(chain.model.flavor == Flavor::NonDynamical && chain.model.boundary == Boundary::SP,
            "chain is not a non-dynamical SP chain");
    return transfer(chain, u);
}

TransferMatrix transfer_nondyn_snp(const ChainSpec& chain, Cplx u) {
    require(chain.model.flavor == Flavor::NonDynamical && chain.model.boundary == Boundary::SNP,
            "chain is not a non-dynamical SNP chain");
    return transfer(chain, u);
}

TransferMatrix transfer_semidyn(const ChainSpec& chain, Cplx u) {
    require(chain.model.flavor == Flavor::SemiDynamical, "chain is not semidynamical");
    return transfer(chain, u);
}

TransferMatrix transfer_fulldyn_sp(const ChainSpec& chain, Cplx u) {
    require(chain.model.flavor == Flavor::FullyDynamical && chain.model.boundary == Boundary::SP,
            "chain is not a fully dynamical SP chain");
    return transfer(chain, u);
}

TransferMatrix transfer_fulldyn_snp(const ChainSpec& chain, Cplx u) {
    require(chain.model.flavor == Flavor::FullyDynamical && chain.model.boundary == Boundary::SNP,
            "chain is not a fully dynamical SNP chain");
    return transfer(chain, u);
}

LambdaMap boundary_X(const ModelSpec& m, int leg, Cplx u) {
    const LambdaMap B = place2(m.B, 0, leg, u, Cplx(0.0));
    const DenseOperator P = permutation(0, leg, {0, leg}, m.n);
    return LambdaMap{{leg}, m.n, [B, P, leg](const Lambda& l) {
                         return partial_trace(P * B.eval(l), 0);
                     }};
}

namespace {

LambdaMap identity_map(int n) { return constant_map(identity_op({}, n)); }

LambdaMap chain_product(std::vector<LambdaMap> factors, int n) {
    if (factors.empty()) return identity_map(n);
    LambdaMap acc = factors.front();
    for (size_t i = 1; i < factors.size(); ++i) acc = lambda_product(acc, factors[i]);
    return acc;
}

}  // namespace

DiffOp closed_t0(const ChainSpec& chain) {
    const ModelSpec& m = chain.model;
    const int n = m.n;
    const Cplx step = m.step();

    if (!chain.alternating()) {
        // soliton-preserving closed forms at u = u_i = 0
        if (m.flavor == Flavor::NonDynamical) {
            // tr(chi^t(0)) T_1(0)
            const LambdaMap chi0 = lambda_transpose(place1(m.chi, 1, Cplx(0.0)), {1});
            const LambdaMap T1 = place1(m.T, 1, Cplx(0.0));
            LambdaMap val{{1}, n, [chi0, T1](const Lambda& l) {
                              return T1.eval(l) * trace(chi0.eval(l));
                          }};
            if (chain.chi_mode == ChiMode::Identity)
                val = lambda_scale(T1, Cplx(static_cast<double>(n)));
            return diffop_from(val, n, step);
        }
        // fully dynamical SP
        std::vector<int> tail;
        for (int k = 2; k <= chain.N; ++k) tail.push_back(k);
        const LambdaMap T1 = shifted_up(place1(m.T, 1, Cplx(0.0)), tail, step);
        if (chain.chi_mode == ChiMode::Identity)
            return diffop_from(lambda_scale(T1, Cplx(static_cast<double>(n))), n, step);
        // T_1(0, h_<) times the scalar trace of the column-shifted chi
        const LambdaMap chi_sc =
            sc_shift(place1(m.chi, 1, Cplx(0.0)), ShiftIndex::Column, +1, {1}, step);
        return diffop_from(LambdaMap{{1}, n,
                                     [T1, chi_sc](const Lambda& l) {
                                         return T1.eval(l) * trace(chi_sc.eval(l));
                                     }},
                           n, step);
    }

    // Alternating chains. Shared pieces: the C-chain, the two permutation
    // chains and the B-chain of the displayed products.
    const int twoN = chain.leg_count();
    const auto all_legs = [&] {
        std::vector<int> v;
        for (int k = 0; k <= twoN; ++k) v.push_back(k);
        return v;
    }();

    auto C_at = [&](int a, int b, const std::vector<int>& tail) {
        return shifted_up(place2(m.C, a, b, Cplx(0.0), Cplx(0.0)), tail, step);
    };
    auto B_at = [&](int a, int b, const std::vector<int>& tail) {
        return shifted_up(place2(m.B, a, b, Cplx(0.0), Cplx(0.0)), tail, step);
    };

    std::vector<LambdaMap> factors;

    if (m.flavor == Flavor::NonDynamical) {
        for (int k = chain.N; k >= 1; --k) factors.push_back(C_at(2 * k, 2 * k - 1, {}));
        for (int k = 1; k + 1 <= chain.N; ++k)
            factors.push_back(constant_map(permutation(2 * k, 2 * k + 2, all_legs, n)));
        for (int k = chain.N - 1; k >= 1; --k)
            factors.push_back(constant_map(permutation(2 * k + 1, 2 * k - 1, all_legs, n)));
        for (int k = 1; k <= chain.N - 1; ++k) factors.push_back(B_at(2 * k + 1, 2 * k, {}));
        factors.push_back(place1(m.T, twoN, Cplx(0.0)));
        factors.push_back(constant_map(permutation(1, twoN, all_legs, n)));
        factors.push_back(boundary_X(m, twoN, Cplx(0.0)));
        return diffop_from(chain_product(factors, n), n, step);
    }

    if (m.flavor == Flavor::SemiDynamical) {
        auto odd_tail = [&](int own) {
            std::vector<int> v;
            for (int k = own + 1; k <= twoN; ++k)
                if (k % 2 == 1) v.push_back(k);
            return v;
        };
        for (int k = chain.N; k >= 1; --k) factors.push_back(C_at(2 * k, 2 * k - 1, odd_tail(2 * k)));
        for (int k = 1; k + 1 <= chain.N; ++k)
            factors.push_back(constant_map(permutation(2 * k, 2 * k + 2, all_legs, n)));
        for (int k = chain.N - 1; k >= 1; --k)
            factors.push_back(constant_map(permutation(2 * k + 1, 2 * k - 1, all_legs, n)));
        for (int k = 1; k <= chain.N - 1; ++k) {
            std::vector<int> tail = odd_tail(2 * k + 1);
            tail.insert(tail.begin(), 1);  // the wrap-around leg enters the shift set
            factors.push_back(B_at(2 * k + 1, 2 * k, tail));
        }
        std::vector<int> odd_all;
        for (int k = 1; k < twoN; k += 2) odd_all.push_back(k);
        factors.push_back(shifted_up(place1(m.T, twoN, Cplx(0.0)), odd_all, step));
        factors.push_back(constant_map(permutation(1, twoN, all_legs, n)));
        // trailing factor: tr_0(P_{0,2N} B_{0,2N} e^{+D_0})
        DiffOp head = diffop_from(chain_product(factors, n), n, step);
        const LambdaMap PB = lambda_product(
            constant_map(permutation(0, twoN, {0, twoN}, n)),
            place2(m.B, 0, twoN, Cplx(0.0), Cplx(0.0)));
        DiffOp tail_op =
            diffop_trace(diffop_mul(diffop_from(PB, n, step), exp_shift(0, +1, n, step)), 0);
        return diffop_mul(head, tail_op);
    }

    // fully dynamical SNP: the wrap permutation P_{1,2N} sits inside the
    // permutation chain, the B-chain shift sets carry leg 1 in place of 2N
    // and the boundary factor is the shift-conjugated diagonal X.
    auto tail_above = [&](int own, bool swap_top) {
        std::vector<int> v;
        for (int k = own + 1; k <= twoN; ++k) {
            if (swap_top && k == twoN) continue;
            v.push_back(k);
        }
        if (swap_top && own + 1 <= twoN) v.insert(v.begin(), 1);
        return v;
    };
    for (int k = chain.N; k >= 1; --k) factors.push_back(C_at(2 * k, 2 * k - 1, tail_above(2 * k, false)));
    for (int k = 1; k + 1 <= chain.N; ++k)
        factors.push_back(constant_map(permutation(2 * k, 2 * k + 2, all_legs, n)));
    for (int k = chain.N - 1; k >= 1; --k)
        factors.push_back(constant_map(permutation(2 * k + 1, 2 * k - 1, all_legs, n)));
    factors.push_back(constant_map(permutation(1, twoN, all_legs, n)));
    for (int k = 1; k <= chain.N - 1; ++k)
        factors.push_back(B_at(2 * k + 1, 2 * k, tail_above(2 * k + 1, true)));
    {
        std::vector<int> tail;
        for (int k = 2; k <= twoN; ++k) tail.push_back(k);
        factors.push_back(shifted_up(place1(m.T, 1, Cplx(0.0)), tail, step));
    }
    // e^{+D_2N} X_2N e^{-D_2N}: for diagonal X this is the blockwise-shifted X
    const LambdaMap X = boundary_X(m, twoN, Cplx(0.0));
    DiffOp head = diffop_from(chain_product(factors, n), n, step);
    DiffOp conj = diffop_mul(diffop_mul(exp_shift(twoN, +1, n, step), diffop_from(X, n, step)),
                             exp_shift(twoN, -1, n, step));
    return diffop_mul(head, conj);
}

ModelSpec chi_conjugate(const ModelSpec& m, bool verify_dual, const VerifyOptions& opt) {
    if (m.flavor == Flavor::FullyDynamical && !m.chi_diagonal)
        throw std::invalid_argument(
            "fully dynamical conjugation requires a diagonal (zero-weight) chi; use the "
            "non-diagonal-chi chain builder instead");
    if (verify_dual) {
        const VerificationReport dual = check_dual_exchange(m, m.chi, opt);
        if (!dual.pass)
            throw std::invalid_argument("chi does not solve the dual relation (residual " +
                                        std::to_string(dual.max_residual) + ")");
    }

    const Cplx step = m.step();
    const DynamicalMatrix chi = m.chi;
    const int n = m.n;

    auto chi_t = [chi, n](int leg, Cplx u) {
        return lambda_transpose(place1(chi, leg, u), {leg});
    };
    auto chi_t_inv = [chi, n](int leg, Cplx u) {
        return lambda_inverse(lambda_transpose(place1(chi, leg, u), {leg}));
    };

    ModelSpec out = m;
    out.name = m.name + "_conj";
    out.chi_mode = ChiMode::Identity;

    auto wrap2 = [n, step](std::function<DenseOperator(std::span<const Cplx>, const Lambda&)> f) {
        DynamicalMatrix d;
        d.legs = {1, 2};
        d.arity = 2;
        d.n = n;
        d.step = step;
        d.eval = std::move(f);
        return d;
    };

    const DynamicalMatrix A = m.A, B = m.B, C = m.C;
    const Flavor flavor = m.flavor;

    out.A = wrap2([=](std::span<const Cplx> u, const Lambda& l) {
        const LambdaMap a = A.bind({u[0], u[1]});
        LambdaMap pre2 = chi_t(2, u[1]);
        LambdaMap post1 = chi_t_inv(1, u[0]);
        if (flavor == Flavor::FullyDynamical) {
            // shift pattern mirrors the dual redefinition row: the second-leg
            // prefix is shifted by h_1, the first-leg suffix by h_2 (fixed by
            // the transfer-matrix covariance test)
            pre2 = weight_shift_embed(pre2, {{1, +1}}, step);
            post1 = weight_shift_embed(post1, {{2, +1}}, step);
        }
        const LambdaMap full = lambda_product(
            lambda_product(lambda_product(lambda_product(chi_t(1, u[0]), pre2), a), post1),
            chi_t_inv(2, u[1]));
        return full.eval(l);
    });
    out.B = wrap2([=](std::span<const Cplx> u, const Lambda& l) {
        const LambdaMap b = B.bind({u[0], u[1]});
        LambdaMap post2 = chi_t_inv(2, u[1]);
        if (flavor != Flavor::NonDynamical)
            post2 = weight_shift_embed(post2, {{1, +1}}, step);
        return lambda_product(lambda_product(chi_t(2, u[1]), b), post2).eval(l);
    });
    out.C = wrap2([=](std::span<const Cplx> u, const Lambda& l) {
        const LambdaMap c = C.bind({u[0], u[1]});
        LambdaMap post1 = chi_t_inv(1, u[0]);
        if (flavor != Flavor::NonDynamical)
            post1 = weight_shift_embed(post1, {{2, +1}}, step);
        return lambda_product(lambda_product(chi_t(1, u[0]), c), post1).eval(l);
    });
    // D is unchanged.

    {
        const DynamicalMatrix T = m.T;
        DynamicalMatrix Tt;
        Tt.legs = {1};
        Tt.arity = 1;
        Tt.n = n;
        Tt.step = step;
        Tt.eval = [T, chi, n](std::span<const Cplx> u, const Lambda& l) {
            const DenseOperator c = partial_transpose(chi.bind({u[0]}).eval(l), {1});
            return c * T.bind({u[0]}).eval(l);
        };
        out.T = Tt;
    }
    {
        DynamicalMatrix one;
        one.legs = {1};
        one.arity = 1;
        one.n = n;
        one.step = step;
        one.eval = [n](std::span<const Cplx>, const Lambda&) { return identity_op({1}, n); };
        out.chi = one;
    }

    // Dual bundle, when present: redefined with inverse conjugations.
    if (m.Adual.eval) {
        const DynamicalMatrix Ad = m.Adual, Bd = m.Bdual, Cd = m.Cdual;
        auto chi_p = [chi](int leg, Cplx u) { return place1(chi, leg, u); };
        auto chi_inv = [chi](int leg, Cplx u) { return lambda_inverse(place1(chi, leg, u)); };
        out.Adual = wrap2([=](std::span<const Cplx> u, const Lambda& l) {
            const LambdaMap a = Ad.bind({u[0], u[1]});
            LambdaMap pre2 = chi_inv(2, u[1]);
            LambdaMap post1 = chi_p(1, u[0]);
            if (flavor == Flavor::FullyDynamical) {
                pre2 = weight_shift_embed(pre2, {{1, +1}}, step);
                post1 = weight_shift_embed(post1, {{2, +1}}, step);
            }
            return lambda_product(
                       lambda_product(lambda_product(lambda_product(chi_inv(1, u[0]), pre2), a),
                                      post1),
                       chi_p(2, u[1]))
                .eval(l);
        });
        out.Bdual = wrap2([=](std::span<const Cplx> u, const Lambda& l) {
            const LambdaMap b = Bd.bind({u[0], u[1]});
            LambdaMap post2 = chi_p(2, u[1]);
            if (flavor != Flavor::NonDynamical)
                post2 = weight_shift_embed(post2, {{1, +1}}, step);
            return lambda_product(lambda_product(chi_inv(2, u[1]), b), post2).eval(l);
        });
        out.Cdual = wrap2([=](std::span<const Cplx> u, const Lambda& l) {
            const LambdaMap c = Cd.bind({u[0], u[1]});
            LambdaMap post1 = chi_p(1, u[0]);
            if (flavor != Flavor::NonDynamical)
                post1 = weight_shift_embed(post1, {{2, +1}}, step);
            return lambda_product(lambda_product(chi_inv(1, u[0]), c), post1).eval(l);
        });
        // Ddual unchanged.
    }
    return out;
}

LambdaMap conjugation_operator(const ChainSpec& chain) {
    const ModelSpec& m = chain.model;
    const Cplx step = m.step();
    const int n = m.n;
    std::vector<LambdaMap> factors;
    const bool even_only = chain.alternating();

    for (int i = 1; i <= chain.leg_count(); ++i) {
        if (even_only && i % 2 != 0) continue;
        LambdaMap c = place1(m.chi, i, chain.site_parameter(i));
        switch (m.flavor) {
            case Flavor::NonDynamical:
                c = lambda_transpose(c, {i});
                break;
            case Flavor::SemiDynamical: {
                c = lambda_transpose(c, {i});
                std::vector<int> tail;
                for (int k = i + 1; k <= chain.leg_count(); ++k)
                    if (k % 2 == 1) tail.push_back(k);
                c = shifted_up(c, tail, step);
                break;
            }
            case Flavor::FullyDynamical: {
                std::vector<int> tail;
                for (int k = i + 1; k <= chain.leg_count(); ++k) tail.push_back(k);
                c = shifted_up(c, tail, step);
                break;
            }
        }
        factors.push_back(c);
    }
    return chain_product(factors, n);
}

CommutationScan commutation_scan(const ChainSpec& chain, std::span<const Cplx> us,
                                 std::span<const Cplx> vs, std::span<const Lambda> lambdas) {
    if (us.empty() || vs.empty() || lambdas.empty())
        throw std::invalid_argument("commutation_scan needs at least one sample in each direction");
    CommutationScan scan;
    for (const Cplx& u : us) {
        const TransferMatrix tu = transfer(chain, u);
        for (const Cplx& v : vs) {
            const TransferMatrix tv = transfer(chain, v);
            const DiffOp comm = diffop_commutator(tu.op, tv.op);
            double res = 0.0;
            bool ok = true;
            try {
                res = diffop_norm(comm, lambdas);
            } catch (const std::exception&) {
                ok = false;
            }
            if (!ok) {
                ++scan.skipped;
                continue;
            }
            scan.grid.push_back({u, v, res});
            scan.max_residual = std::max(scan.max_residual, res);
            ++scan.points;
        }
    }
    return scan;
}

}  // namespace quadbraid
