#include "quadbraid/tensor.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <set>

namespace quadbraid {

namespace {

int pow_int(int base, int exp) {
    int r = 1;
    for (int i = 0; i < exp; ++i) r *= base;
    return r;
}

void check_unique(const std::vector<int>& legs) {
    std::set<int> seen(legs.begin(), legs.end());
    if (seen.size() != legs.size()) throw std::invalid_argument("duplicate leg labels");
}

}  // namespace

LegIndexer::LegIndexer(int dim_, int count_) : dim(dim_), count(count_), total(pow_int(dim_, count_)) {}

int LegIndexer::encode(std::span<const int> digits) const {
    int flat = 0;
    for (int k = 0; k < count; ++k) flat = flat * dim + digits[k];
    return flat;
}

void LegIndexer::decode(int flat, std::span<int> digits) const {
    for (int k = count - 1; k >= 0; --k) {
        digits[k] = flat % dim;
        flat /= dim;
    }
}

DenseOperator::DenseOperator(std::vector<int> legs, int dim, Matrix mat)
    : legs_(std::move(legs)), dim_(dim), mat_(std::move(mat)) {
    check_unique(legs_);
    if (!std::is_sorted(legs_.begin(), legs_.end()))
        throw std::invalid_argument("legs must be sorted; use relabel/embed to construct");
    const int expect = pow_int(dim_, static_cast<int>(legs_.size()));
    if (mat_.rows() != expect || mat_.cols() != expect)
        throw std::invalid_argument("matrix size does not match dim^legs");
}

bool DenseOperator::has_leg(int leg) const {
    return std::binary_search(legs_.begin(), legs_.end(), leg);
}

int DenseOperator::leg_position(int leg) const {
    auto it = std::lower_bound(legs_.begin(), legs_.end(), leg);
    if (it == legs_.end() || *it != leg) throw std::invalid_argument("unknown leg label");
    return static_cast<int>(it - legs_.begin());
}

namespace {

std::vector<int> union_legs(const std::vector<int>& a, const std::vector<int>& b) {
    std::vector<int> out;
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

}  // namespace

DenseOperator DenseOperator::operator+(const DenseOperator& rhs) const {
    const auto legs = union_legs(legs_, rhs.legs_);
    DenseOperator a = embed(*this, legs);
    DenseOperator b = embed(rhs, legs);
    return DenseOperator(legs, dim_, a.mat() + b.mat());
}

DenseOperator DenseOperator::operator-(const DenseOperator& rhs) const {
    const auto legs = union_legs(legs_, rhs.legs_);
    DenseOperator a = embed(*this, legs);
    DenseOperator b = embed(rhs, legs);
    return DenseOperator(legs, dim_, a.mat() - b.mat());
}

DenseOperator DenseOperator::operator*(const DenseOperator& rhs) const {
    const auto legs = union_legs(legs_, rhs.legs_);
    DenseOperator a = embed(*this, legs);
    DenseOperator b = embed(rhs, legs);
    return DenseOperator(legs, dim_, a.mat() * b.mat());
}

DenseOperator DenseOperator::operator*(const Cplx& s) const {
    return DenseOperator(legs_, dim_, mat_ * s);
}

DenseOperator& DenseOperator::operator+=(const DenseOperator& rhs) {
    *this = *this + rhs;
    return *this;
}

DenseOperator operator*(const Cplx& s, const DenseOperator& op) { return op * s; }

DenseOperator identity_op(std::vector<int> legs, int dim) {
    std::sort(legs.begin(), legs.end());
    const int sz = pow_int(dim, static_cast<int>(legs.size()));
    return DenseOperator(std::move(legs), dim, Matrix::Identity(sz, sz));
}

DenseOperator matrix_unit(int i, int j, int dim, int leg) {
    Matrix m = Matrix::Zero(dim, dim);
    m(i, j) = 1.0;
    return DenseOperator({leg}, dim, std::move(m));
}

DenseOperator diagonal_op(const Eigen::VectorXcd& d, int leg) {
    const int dim = static_cast<int>(d.size());
    Matrix m = Matrix::Zero(dim, dim);
    m.diagonal() = d;
    return DenseOperator({leg}, dim, std::move(m));
}

DenseOperator embed(const DenseOperator& op, const std::vector<int>& total_legs) {
    std::vector<int> legs = total_legs;
    std::sort(legs.begin(), legs.end());
    check_unique(legs);
    for (int l : op.legs())
        if (!std::binary_search(legs.begin(), legs.end(), l))
            throw std::invalid_argument("embed: operator leg missing from total_legs");
    if (legs == op.legs()) return op;

    const int dim = op.dim();
    const int K = static_cast<int>(legs.size());
    const int k = op.leg_count();
    LegIndexer full(dim, K), sub(dim, k);

    // position of each op leg inside the full leg list
    std::vector<int> pos(k);
    for (int i = 0; i < k; ++i)
        pos[i] = static_cast<int>(std::lower_bound(legs.begin(), legs.end(), op.legs()[i]) - legs.begin());

    Matrix out = Matrix::Zero(full.total, full.total);
    std::vector<int> rdig(K), cdig(K), rsub(k), csub(k);
    for (int R = 0; R < full.total; ++R) {
        full.decode(R, rdig);
        for (int i = 0; i < k; ++i) rsub[i] = rdig[pos[i]];
        const int r = sub.encode(rsub);
        cdig = rdig;  // spectator legs stay equal between row and column
        for (int c = 0; c < sub.total; ++c) {
            sub.decode(c, csub);
            for (int i = 0; i < k; ++i) cdig[pos[i]] = csub[i];
            out(R, full.encode(cdig)) = op.mat()(r, c);
        }
    }
    return DenseOperator(std::move(legs), dim, std::move(out));
}

DenseOperator permutation(int a, int b, const std::vector<int>& context, int dim) {
    if (a == b) throw std::invalid_argument("permutation: legs must differ");
    std::vector<int> legs = context;
    std::sort(legs.begin(), legs.end());
    check_unique(legs);
    const int K = static_cast<int>(legs.size());
    LegIndexer full(dim, K);
    int pa = -1, pb = -1;
    for (int i = 0; i < K; ++i) {
        if (legs[i] == a) pa = i;
        if (legs[i] == b) pb = i;
    }
    if (pa < 0 || pb < 0) throw std::invalid_argument("permutation: leg not in context");

    Matrix out = Matrix::Zero(full.total, full.total);
    std::vector<int> dig(K);
    for (int C = 0; C < full.total; ++C) {
        full.decode(C, dig);
        std::swap(dig[pa], dig[pb]);
        out(full.encode(dig), C) = 1.0;
    }
    return DenseOperator(std::move(legs), dim, std::move(out));
}

DenseOperator partial_trace(const DenseOperator& op, int leg) {
    const int p = op.leg_position(leg);
    const int dim = op.dim();
    const int K = op.leg_count();
    std::vector<int> legs;
    for (int l : op.legs())
        if (l != leg) legs.push_back(l);
    LegIndexer full(dim, K), rest(dim, K - 1);

    Matrix out = Matrix::Zero(rest.total, rest.total);
    std::vector<int> rdig(K), cdig(K), rrest(K - 1), crest(K - 1);
    for (int r = 0; r < rest.total; ++r) {
        rest.decode(r, rrest);
        for (int c = 0; c < rest.total; ++c) {
            rest.decode(c, crest);
            Cplx sum = 0.0;
            for (int t = 0; t < dim; ++t) {
                int ri = 0, ci = 0;
                for (int k0 = 0; k0 < K; ++k0) {
                    if (k0 == p) {
                        rdig[k0] = t;
                        cdig[k0] = t;
                    } else {
                        const int k1 = k0 < p ? k0 : k0 - 1;
                        rdig[k0] = rrest[k1];
                        cdig[k0] = crest[k1];
                    }
                }
                ri = full.encode(rdig);
                ci = full.encode(cdig);
                sum += op.mat()(ri, ci);
            }
            out(r, c) = sum;
        }
    }
    return DenseOperator(std::move(legs), dim, std::move(out));
}

Cplx trace(const DenseOperator& op) { return op.mat().trace(); }

DenseOperator partial_transpose(const DenseOperator& op, const std::vector<int>& transpose_legs) {
    const int dim = op.dim();
    const int K = op.leg_count();
    std::vector<bool> flip(K, false);
    for (int l : transpose_legs) flip[op.leg_position(l)] = true;
    LegIndexer full(dim, K);

    Matrix out = Matrix::Zero(full.total, full.total);
    std::vector<int> rdig(K), cdig(K), rnew(K), cnew(K);
    for (int r = 0; r < full.total; ++r) {
        full.decode(r, rdig);
        for (int c = 0; c < full.total; ++c) {
            full.decode(c, cdig);
            for (int k = 0; k < K; ++k) {
                rnew[k] = flip[k] ? cdig[k] : rdig[k];
                cnew[k] = flip[k] ? rdig[k] : cdig[k];
            }
            out(full.encode(rnew), full.encode(cnew)) = op.mat()(r, c);
        }
    }
    return DenseOperator(op.legs(), dim, std::move(out));
}

DenseOperator leg_swap(const DenseOperator& op, int a, int b) {
    const DenseOperator p = permutation(a, b, op.legs(), op.dim());
    return p * op * p;
}

DenseOperator relabel(const DenseOperator& op, const std::vector<std::pair<int, int>>& leg_map) {
    std::vector<int> new_legs = op.legs();
    for (auto& l : new_legs) {
        for (const auto& [from, to] : leg_map)
            if (l == from) {
                l = to;
                break;
            }
    }
    check_unique(new_legs);
    // sort permutation of positions
    const int K = op.leg_count();
    std::vector<int> order(K);
    for (int i = 0; i < K; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int i, int j) { return new_legs[i] < new_legs[j]; });

    std::vector<int> sorted_legs(K);
    for (int i = 0; i < K; ++i) sorted_legs[i] = new_legs[order[i]];

    const int dim = op.dim();
    LegIndexer full(dim, K);
    Matrix out = Matrix::Zero(full.total, full.total);
    std::vector<int> rdig(K), cdig(K), rnew(K), cnew(K);
    for (int r = 0; r < full.total; ++r) {
        full.decode(r, rdig);
        for (int c = 0; c < full.total; ++c) {
            full.decode(c, cdig);
            for (int k = 0; k < K; ++k) {
                rnew[k] = rdig[order[k]];
                cnew[k] = cdig[order[k]];
            }
            out(full.encode(rnew), full.encode(cnew)) = op.mat()(r, c);
        }
    }
    return DenseOperator(std::move(sorted_legs), dim, std::move(out));
}

DenseOperator inverse(const DenseOperator& op, double cond_threshold) {
    Eigen::JacobiSVD<Matrix> svd(op.mat());
    const auto& sv = svd.singularValues();
    const double smax = sv(0);
    const double smin = sv(sv.size() - 1);
    if (smin <= 0.0 || smax / smin > cond_threshold)
        throw SingularOperator("operator is numerically singular (condition estimate exceeds threshold)");
    return DenseOperator(op.legs(), op.dim(), op.mat().inverse());
}

double commutator_norm(const DenseOperator& a, const DenseOperator& b) {
    return (a * b - b * a).norm();
}

}  // namespace quadbraid
