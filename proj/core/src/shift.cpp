#include "quadbraid/shift.hpp"

#include <algorithm>

namespace quadbraid {

namespace {

std::vector<int> union_legs(const std::vector<int>& a, const std::vector<int>& b) {
    std::vector<int> out;
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

Lambda unit_shift(int n, int i, Cplx scale) {
    Lambda v = Lambda::Zero(n);
    v(i) = scale;
    return v;
}

std::vector<int> add_keys(const std::vector<int>& a, const std::vector<int>& b) {
    std::vector<int> out(a.size());
    for (size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    return out;
}

Lambda key_to_offset(const std::vector<int>& s, Cplx step) {
    Lambda v = Lambda::Zero(static_cast<int>(s.size()));
    for (int i = 0; i < v.size(); ++i) v(i) = step * static_cast<double>(s[i]);
    return v;
}

}  // namespace

LambdaMap constant_map(const DenseOperator& op) {
    return LambdaMap{op.legs(), op.dim(), [op](const Lambda&) { return op; }};
}

LambdaMap lambda_sum(const LambdaMap& a, const LambdaMap& b) {
    return LambdaMap{union_legs(a.legs, b.legs), a.n,
                     [a, b](const Lambda& l) { return a.eval(l) + b.eval(l); }};
}

LambdaMap lambda_product(const LambdaMap& a, const LambdaMap& b) {
    return LambdaMap{union_legs(a.legs, b.legs), a.n,
                     [a, b](const Lambda& l) { return a.eval(l) * b.eval(l); }};
}

LambdaMap lambda_scale(const LambdaMap& a, Cplx s) {
    return LambdaMap{a.legs, a.n, [a, s](const Lambda& l) { return a.eval(l) * s; }};
}

LambdaMap lambda_inverse(const LambdaMap& a, double cond_threshold) {
    return LambdaMap{a.legs, a.n,
                     [a, cond_threshold](const Lambda& l) { return inverse(a.eval(l), cond_threshold); }};
}

LambdaMap lambda_transpose(const LambdaMap& a, const std::vector<int>& legs) {
    return LambdaMap{a.legs, a.n,
                     [a, legs](const Lambda& l) { return partial_transpose(a.eval(l), legs); }};
}

LambdaMap lambda_shift_arg(const LambdaMap& a, const Lambda& offset) {
    return LambdaMap{a.legs, a.n, [a, offset](const Lambda& l) { return a.eval(l + offset); }};
}

LambdaMap DynamicalMatrix::bind(std::vector<Cplx> us) const {
    if (static_cast<int>(us.size()) != arity)
        throw std::invalid_argument("bind: wrong number of spectral arguments");
    auto f = eval;
    return LambdaMap{legs, n, [f, us = std::move(us)](const Lambda& l) {
                         return f(std::span<const Cplx>(us), l);
                     }};
}

LambdaMap weight_shift_embed(const LambdaMap& m, const std::vector<std::pair<int, int>>& shift_legs,
                             Cplx step) {
    if (shift_legs.empty()) return m;
    for (const auto& [leg, sign] : shift_legs)
        if (std::binary_search(m.legs.begin(), m.legs.end(), leg))
            throw std::invalid_argument("weight_shift_embed: shift leg overlaps operator legs");

    std::vector<int> extra;
    for (const auto& [leg, sign] : shift_legs) extra.push_back(leg);
    std::sort(extra.begin(), extra.end());
    const auto all = union_legs(m.legs, extra);

    const int n = m.n;
    return LambdaMap{
        all, n, [m, shift_legs, step, all, n](const Lambda& l) {
            // Built row by row: the sub-block is selected by the weight
            // digits of the shift legs (which the diagonal projectors force
            // to agree between row and column), so no dense products are
            // needed.
            const int S = static_cast<int>(shift_legs.size());
            const int K = static_cast<int>(all.size());
            const int k = static_cast<int>(m.legs.size());
            LegIndexer full(n, K), widx(n, S), sub(n, k);

            std::vector<int> pos_sub(k), pos_shift(S);
            for (int i = 0; i < k; ++i)
                pos_sub[i] = static_cast<int>(
                    std::lower_bound(all.begin(), all.end(), m.legs[i]) - all.begin());
            for (int i = 0; i < S; ++i)
                pos_shift[i] = static_cast<int>(
                    std::lower_bound(all.begin(), all.end(), shift_legs[i].first) - all.begin());

            // evaluate the base once per weight assignment
            std::vector<Matrix> blocks(widx.total);
            std::vector<int> w(S);
            for (int flat = 0; flat < widx.total; ++flat) {
                widx.decode(flat, w);
                Lambda shifted = l;
                for (int i = 0; i < S; ++i)
                    shifted(w[i]) += step * static_cast<double>(shift_legs[i].second);
                blocks[flat] = m.eval(shifted).mat();
            }

            Matrix out = Matrix::Zero(full.total, full.total);
            std::vector<int> dig(K), cdig(K), rsub(k), csub(k);
            for (int R = 0; R < full.total; ++R) {
                full.decode(R, dig);
                for (int i = 0; i < S; ++i) w[i] = dig[pos_shift[i]];
                const Matrix& blk = blocks[widx.encode(w)];
                for (int i = 0; i < k; ++i) rsub[i] = dig[pos_sub[i]];
                const int r = sub.encode(rsub);
                cdig = dig;
                for (int c = 0; c < sub.total; ++c) {
                    sub.decode(c, csub);
                    for (int i = 0; i < k; ++i) cdig[pos_sub[i]] = csub[i];
                    out(R, full.encode(cdig)) = blk(r, c);
                }
            }
            return DenseOperator(all, n, std::move(out));
        }};
}

DynamicalMatrix weight_shift_embed(const DynamicalMatrix& m,
                                   const std::vector<std::pair<int, int>>& shift_legs) {
    std::vector<int> extra;
    for (const auto& [leg, sign] : shift_legs) extra.push_back(leg);
    std::sort(extra.begin(), extra.end());
    DynamicalMatrix out;
    out.legs = union_legs(m.legs, extra);
    out.arity = m.arity;
    out.n = m.n;
    out.step = m.step;
    out.eval = [m, shift_legs](std::span<const Cplx> us, const Lambda& l) {
        std::vector<Cplx> uvec(us.begin(), us.end());
        return weight_shift_embed(m.bind(uvec), shift_legs, m.step).eval(l);
    };
    return out;
}

LambdaMap sc_shift(const LambdaMap& m, ShiftIndex mode, int sign, const std::vector<int>& legs,
                   Cplx step) {
    LambdaMap out = m;
    const int n = m.n;
    for (int leg : legs) {
        LambdaMap base = out;
        out = LambdaMap{base.legs, n, [base, mode, sign, leg, step, n](const Lambda& l) {
                            DenseOperator acc = base.eval(l - unit_shift(n, 0, Cplx(sign) * step));
                            acc = mode == ShiftIndex::Column
                                      ? acc * matrix_unit(0, 0, n, leg)
                                      : matrix_unit(0, 0, n, leg) * acc;
                            for (int j = 1; j < n; ++j) {
                                DenseOperator blk = base.eval(l - unit_shift(n, j, Cplx(sign) * step));
                                acc += mode == ShiftIndex::Column
                                           ? blk * matrix_unit(j, j, n, leg)
                                           : matrix_unit(j, j, n, leg) * blk;
                            }
                            return acc;
                        }};
    }
    return out;
}

DynamicalMatrix sc_shift(const DynamicalMatrix& m, ShiftIndex mode, int sign,
                         const std::vector<int>& legs) {
    DynamicalMatrix out = m;
    out.eval = [m, mode, sign, legs](std::span<const Cplx> us, const Lambda& l) {
        std::vector<Cplx> uvec(us.begin(), us.end());
        return sc_shift(m.bind(uvec), mode, sign, legs, m.step).eval(l);
    };
    return out;
}

LambdaMap place2(const DynamicalMatrix& m, int a, int b, Cplx ua, Cplx ub) {
    LambdaMap bound = m.bind({ua, ub});
    std::vector<int> legs = {std::min(a, b), std::max(a, b)};
    return LambdaMap{legs, m.n, [bound, a, b](const Lambda& l) {
                         return relabel(bound.eval(l), {{1, a}, {2, b}});
                     }};
}

LambdaMap place1(const DynamicalMatrix& m, int a, Cplx u) {
    LambdaMap bound = m.bind({u});
    return LambdaMap{{a}, m.n, [bound, a](const Lambda& l) {
                         return relabel(bound.eval(l), {{1, a}});
                     }};
}

LambdaMap shifted_up(const LambdaMap& m, const std::vector<int>& legs, Cplx step) {
    if (legs.empty()) return m;
    std::vector<std::pair<int, int>> sl;
    for (int l : legs) sl.emplace_back(l, +1);
    return weight_shift_embed(m, sl, step);
}

void DiffOp::add_term(const std::vector<int>& shift, const LambdaMap& coeff) {
    if (static_cast<int>(shift.size()) != n_) throw std::invalid_argument("shift vector has wrong size");
    auto it = terms_.find(shift);
    if (it == terms_.end())
        terms_.emplace(shift, coeff);
    else
        it->second = lambda_sum(it->second, coeff);
}

std::map<std::vector<int>, DenseOperator> DiffOp::evaluate(const Lambda& lambda,
                                                           double prune_tol) const {
    std::map<std::vector<int>, DenseOperator> out;
    double scale = 0.0;
    for (const auto& [s, c] : terms_) {
        DenseOperator v = c.eval(lambda);
        scale = std::max(scale, v.norm());
        out.emplace(s, std::move(v));
    }
    for (auto it = out.begin(); it != out.end();) {
        if (it->second.norm() <= prune_tol * std::max(scale, 1.0))
            it = out.erase(it);
        else
            ++it;
    }
    return out;
}

DenseOperator DiffOp::collapse(const Lambda& lambda) const {
    DenseOperator acc;
    bool first = true;
    for (const auto& [s, c] : terms_) {
        if (first) {
            acc = c.eval(lambda);
            first = false;
        } else {
            acc += c.eval(lambda);
        }
    }
    if (first) throw std::invalid_argument("collapse of empty difference operator");
    return acc;
}

DiffOp diffop_from(const LambdaMap& coeff, int n, Cplx step) {
    DiffOp out(n, step);
    out.add_term(std::vector<int>(n, 0), coeff);
    return out;
}

DiffOp diffop_from(const DenseOperator& op, int n, Cplx step) {
    return diffop_from(constant_map(op), n, step);
}

DiffOp diffop_identity(int n, Cplx step) {
    return diffop_from(identity_op({}, n), n, step);
}

DiffOp exp_shift(int leg, int sign, int n, Cplx step) {
    DiffOp out(n, step);
    for (int i = 0; i < n; ++i) {
        std::vector<int> s(n, 0);
        s[i] = sign;
        out.add_term(s, constant_map(matrix_unit(i, i, n, leg)));
    }
    return out;
}

DiffOp diffop_mul(const DiffOp& x, const DiffOp& y) {
    if (x.n() != y.n() || x.step() != y.step())
        throw std::invalid_argument("difference operators disagree on n or step");
    DiffOp out(x.n(), x.step());
    for (const auto& [s, f] : x.terms()) {
        const Lambda offset = key_to_offset(s, x.step());
        for (const auto& [r, g] : y.terms()) {
            LambdaMap shifted = lambda_shift_arg(g, offset);
            out.add_term(add_keys(s, r), lambda_product(f, shifted));
        }
    }
    return out;
}

DiffOp diffop_add(const DiffOp& x, const DiffOp& y) {
    if (x.n() != y.n() || x.step() != y.step())
        throw std::invalid_argument("difference operators disagree on n or step");
    DiffOp out = x;
    for (const auto& [r, g] : y.terms()) out.add_term(r, g);
    return out;
}

DiffOp diffop_sub(const DiffOp& x, const DiffOp& y) { return diffop_add(x, diffop_scale(y, -1.0)); }

DiffOp diffop_scale(const DiffOp& x, Cplx s) {
    DiffOp out(x.n(), x.step());
    for (const auto& [k, c] : x.terms()) out.add_term(k, lambda_scale(c, s));
    return out;
}

DiffOp diffop_trace(const DiffOp& x, int leg) {
    DiffOp out(x.n(), x.step());
    for (const auto& [k, c] : x.terms()) {
        LambdaMap traced;
        traced.n = c.n;
        traced.legs = c.legs;
        std::erase(traced.legs, leg);
        traced.eval = [c, leg](const Lambda& l) {
            DenseOperator v = c.eval(l);
            if (!v.has_leg(leg)) return v * Cplx(static_cast<double>(v.dim()));
            return partial_trace(v, leg);
        };
        out.add_term(k, traced);
    }
    return out;
}

DiffOp diffop_commutator(const DiffOp& x, const DiffOp& y) {
    return diffop_sub(diffop_mul(x, y), diffop_mul(y, x));
}

double diffop_residual(const DiffOp& x, const DiffOp& y, std::span<const Lambda> samples) {
    if (samples.empty()) throw std::invalid_argument("diffop_residual needs at least one sample");
    double worst = 0.0;
    for (const Lambda& l : samples) {
        auto xs = x.evaluate(l, 0.0);
        auto ys = y.evaluate(l, 0.0);
        for (const auto& [k, v] : xs) {
            auto it = ys.find(k);
            const double d = it == ys.end() ? v.norm() : (v - it->second).norm();
            worst = std::max(worst, d);
        }
        for (const auto& [k, v] : ys)
            if (!xs.count(k)) worst = std::max(worst, v.norm());
    }
    return worst;
}

double diffop_norm(const DiffOp& x, std::span<const Lambda> samples) {
    double worst = 0.0;
    for (const Lambda& l : samples)
        for (const auto& [k, v] : x.evaluate(l, 0.0)) worst = std::max(worst, v.norm());
    return worst;
}

bool diffop_is_pure(const DiffOp& x, std::span<const Lambda> samples, double tol) {
    const std::vector<int> zero(x.n(), 0);
    for (const Lambda& l : samples) {
        double scale = 1.0;
        auto vals = x.evaluate(l, 0.0);
        for (const auto& [k, v] : vals) scale = std::max(scale, v.norm());
        for (const auto& [k, v] : vals)
            if (k != zero && v.norm() > tol * scale) return false;
    }
    return true;
}

LambdaMap diffop_pure_part(const DiffOp& x) {
    const std::vector<int> zero(x.n(), 0);
    auto it = x.terms().find(zero);
    if (it == x.terms().end())
        throw std::invalid_argument("difference operator has no zero-shift part");
    return it->second;
}

}  // namespace quadbraid
