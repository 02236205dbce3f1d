#pragma once

#include <Eigen/Dense>

#include <complex>
#include <span>
#include <stdexcept>
#include <vector>

namespace quadbraid {

using Cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Lambda = Eigen::VectorXcd;

/// Dense complex operator acting on an ordered set of labeled tensor legs.
///
/// Legs are stored sorted ascending and the flat basis index is big-endian
/// in that order (the first stored leg varies slowest). All binary
/// operations reorder operands to the canonical order first, so leg labels
/// rather than positions carry the meaning.
class DenseOperator {
public:
    DenseOperator() = default;
    DenseOperator(std::vector<int> legs, int dim, Matrix mat);

    const std::vector<int>& legs() const { return legs_; }
    int dim() const { return dim_; }
    int leg_count() const { return static_cast<int>(legs_.size()); }
    int size() const { return static_cast<int>(mat_.rows()); }
    const Matrix& mat() const { return mat_; }
    Matrix& mat() { return mat_; }

    bool has_leg(int leg) const;
    int leg_position(int leg) const;  // throws on unknown label

    double norm() const { return mat_.norm(); }  // Frobenius

    DenseOperator operator+(const DenseOperator& rhs) const;
    DenseOperator operator-(const DenseOperator& rhs) const;
    DenseOperator operator*(const DenseOperator& rhs) const;  // leg-union product
    DenseOperator operator*(const Cplx& s) const;
    DenseOperator& operator+=(const DenseOperator& rhs);

private:
    std::vector<int> legs_;
    int dim_ = 0;
    Matrix mat_;
};

DenseOperator operator*(const Cplx& s, const DenseOperator& op);

/// Identity on the given legs.
DenseOperator identity_op(std::vector<int> legs, int dim);

/// Matrix unit E_ij (0-based) on a single leg.
DenseOperator matrix_unit(int i, int j, int dim, int leg);

/// Diagonal matrix on a single leg.
DenseOperator diagonal_op(const Eigen::VectorXcd& d, int leg);

/// op (x) identity on the remaining legs of total_legs, reordered canonically.
DenseOperator embed(const DenseOperator& op, const std::vector<int>& total_legs);

/// Permutation operator swapping legs a and b inside the given context.
DenseOperator permutation(int a, int b, const std::vector<int>& context, int dim);

/// Trace over one named leg; remaining legs keep their order.
DenseOperator partial_trace(const DenseOperator& op, int leg);

/// Full trace.
Cplx trace(const DenseOperator& op);

/// Transpose the indices of the named legs only. Involutive.
DenseOperator partial_transpose(const DenseOperator& op, const std::vector<int>& transpose_legs);

/// Conjugation by the permutation of legs a and b. Involutive.
DenseOperator leg_swap(const DenseOperator& op, int a, int b);

/// Relabel legs without touching entries; the map must be injective.
/// The matrix is re-sorted to the canonical order of the new labels.
DenseOperator relabel(const DenseOperator& op, const std::vector<std::pair<int, int>>& leg_map);

/// Inverse with a condition-number guard. A condition estimate above the
/// threshold signals a degenerate sample point and throws SingularOperator.
DenseOperator inverse(const DenseOperator& op, double cond_threshold = 1e12);

/// ||AB - BA|| in the Frobenius norm, on the union of the two leg sets.
double commutator_norm(const DenseOperator& a, const DenseOperator& b);

struct SingularOperator : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Mixed-radix helpers for the big-endian flat index.
struct LegIndexer {
    int dim = 0;
    int count = 0;
    int total = 1;

    LegIndexer(int dim_, int count_);
    int encode(std::span<const int> digits) const;
    void decode(int flat, std::span<int> digits) const;
};

}  // namespace quadbraid
