#include "quadbraid/models.hpp"
#include "quadbraid/sampling.hpp"

#include <doctest.h>

#include <cmath>

using namespace quadbraid;
using std::sinh;

namespace {

Lambda lam(double l1, double l2) {
    Lambda l(2);
    l << Cplx(l1, 0.0), Cplx(l2, 0.0);
    return l;
}

}  // namespace

TEST_CASE("entry weights match the explicit sinh ratios") {
    const Cplx g(0.2, 0.0);
    const Lambda l = lam(0.9, 0.2);  // l12 = 0.7
    const Cplx u(0.3, 0.0);
    const Cplx expect = sinh(Cplx(0.5)) * sinh(Cplx(0.3)) / (sinh(Cplx(0.1)) * sinh(Cplx(0.7)));
    CHECK(std::abs(gl2_alpha(l, u, g) - expect) < 1e-15);

    // parity partners: the swapped-weight entries are the same functions at -lambda
    const DenseOperator R = gl2_R(l, u, g);
    const DenseOperator Rm = gl2_R(-l, u, g);
    CHECK(std::abs(R.mat()(2, 2) - Rm.mat()(1, 1)) < 1e-15);  // delta = alpha(-l)
    CHECK(std::abs(R.mat()(2, 1) - Rm.mat()(1, 2)) < 1e-15);  // gamma-hat = beta(-l)
}

TEST_CASE("R degenerates to the permutation at zero argument") {
    const Cplx g(0.2, 0.0);
    const Lambda l = lam(0.53, -0.21);
    const DenseOperator R0 = gl2_R(l, Cplx(0.0), g);
    const DenseOperator P = permutation(1, 2, {1, 2}, 2);
    CHECK((R0 - P).norm() < 1e-14);

    // vanishing deformation parameter: R tends to the identity
    const DenseOperator Rsmall = gl2_R(l, Cplx(0.3), Cplx(1e-9, 0.0));
    CHECK((Rsmall - identity_op({1, 2}, 2)).norm() < 1e-6);
}

TEST_CASE("dual entry weights invert the direct ones") {
    const Cplx g(0.2, 0.0);
    Sampler s(5);
    int checked = 0;
    while (checked < 5) {
        const Lambda l = s.lambda_box(2, nullptr);
        const Cplx u = s.complex_box(0.6, 0.2);
        if (std::abs(sinh(l(0) - l(1))) < 0.1 || std::abs(sinh(u)) < 0.1 ||
            std::abs(sinh(u - g)) < 0.05)
            continue;
        const DenseOperator R = gl2_R(l, u, g);
        const DenseOperator Rd = gl2_R_dual(l, u, g);
        CHECK(std::abs(R.mat()(1, 1) * Rd.mat()(1, 1) - 1.0) < 1e-12);  // alpha * alpha-dual = 1
        ++checked;
    }
}

TEST_CASE("boundary solution entries match the closed form") {
    const Cplx g(0.2, 0.0), xi(1.1, 0.0);
    const Lambda l = lam(0.5, -0.1);
    const Cplx u(0.15, 0.0);
    const Cplx l12 = l(0) - l(1);
    const Cplx chi1 =
        sinh(l12) * sinh(-l(0) + xi - u + g) / (sinh(l12 - g) * sinh(-l(0) + xi + u - g));
    const DenseOperator chi = gl2_chi(l, u, g, xi);
    CHECK(std::abs(chi.mat()(0, 0) - chi1) < 1e-15);
    CHECK(std::abs(chi.mat()(0, 1)) == 0.0);
    CHECK((gl2_T() - identity_op({1}, 2)).norm() == 0.0);
}

TEST_CASE("structure assignment ties the four matrices together") {
    ModelSpec m = gl2_model();
    Sampler s(11);
    const Lambda l = s.lambda_box(2, m.lambda_guard);
    const Cplx u1(0.31, 0.04), u2(-0.42, 0.08);

    // B is the leg-swapped C at the same arguments
    const DenseOperator B = m.B.bind({u1, u2}).eval(l);
    const DenseOperator C = m.C.bind({u1, u2}).eval(l);
    CHECK((B - leg_swap(C, 1, 2)).norm() < 1e-14);

    // A at equal spectral arguments is the permutation
    const DenseOperator Aeq = m.A.bind({u1, u1}).eval(l);
    CHECK((Aeq - permutation(1, 2, {1, 2}, 2)).norm() < 1e-13);

    // D_12(u1,u2) * D_21(u2,u1) = 1 across samples
    for (int k = 0; k < 5; ++k) {
        const Lambda lk = s.lambda_box(2, m.lambda_guard);
        const DenseOperator D12 = m.D.bind({u1, u2}).eval(lk);
        const DenseOperator D21 = leg_swap(m.D.bind({u2, u1}).eval(lk), 1, 2);
        CHECK((D12 * D21 - identity_op({1, 2}, 2)).norm() < 1e-12);
    }
}

TEST_CASE("six-vertex control basics") {
    const Cplx eta(0.2, 0.0);
    CHECK((sixvertex_R(Cplx(0.0), eta) - permutation(1, 2, {1, 2}, 2)).norm() < 1e-15);
    // unitarity of the symmetric R
    const Cplx u(0.37, 0.0);
    const DenseOperator prod = sixvertex_R(u, eta) * sixvertex_R(-u, eta);
    CHECK((prod - identity_op({1, 2}, 2)).norm() < 1e-14);

    ModelSpec m = sixvertex_model(eta);
    CHECK(m.flavor == Flavor::NonDynamical);
    CHECK((m.T.bind({Cplx(0.0)}).eval(lam(0, 0)) - identity_op({1}, 2)).norm() == 0.0);
}

TEST_CASE("boundary matrix of the swap-product is the diagonal entry sum") {
    // tr over the first leg of P B, against an independent entrywise sum
    ModelSpec m = gl2_model();
    const Lambda l = lam(0.9, 0.2);
    // B(u1,u2) depends on u1+u2; pick the sum 0.3
    const DenseOperator B = m.B.bind({Cplx(0.1), Cplx(0.2)}).eval(l);
    const DenseOperator P = permutation(1, 2, {1, 2}, 2);
    const DenseOperator X = partial_trace(P * B, 1);

    LegIndexer idx(2, 2);
    Matrix expect = Matrix::Zero(2, 2);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            Cplx acc = 0.0;
            for (int k = 0; k < 2; ++k) {
                const std::vector<int> row{i, k}, col{k, j};
                acc += B.mat()(idx.encode(row), idx.encode(col));
            }
            expect(i, j) = acc;
        }
    CHECK((X.mat() - expect).norm() < 1e-14);
    CHECK(std::abs(expect(0, 1)) < 1e-15);  // diagonal by the total weight condition
    CHECK(std::abs(expect(1, 0)) < 1e-15);
    // and the explicit value: 1 plus the swap-weight entry
    const Cplx usum(0.3, 0.0);
    const Cplx beta = gl2_beta(l, usum, m.gamma);
    const Cplx ghat = gl2_beta(-l, usum, m.gamma);
    CHECK(std::abs(expect(0, 0) - (1.0 + ghat)) < 1e-14);
    CHECK(std::abs(expect(1, 1) - (1.0 + beta)) < 1e-14);
}

TEST_CASE("model configuration parsing") {
    const ModelSpec m = load_model_json(
        R"({"schema": 1, "name": "gl2", "n": 2, "gamma": 0.25, "xi": 1.3,
            "flavor": "fully_dynamical", "boundary": "SP", "chi": "diagonal", "shift_sign": -1})");
    CHECK(m.name == "gl2");
    CHECK(m.gamma == Cplx(0.25, 0.0));
    CHECK(m.xi == Cplx(1.3, 0.0));
    CHECK(m.shift_sign == -1);

    CHECK_THROWS_AS((void)load_model_json(R"({"name": "gl2", "unknown_field": 3})"),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)load_model_json(R"({"name": "gl2", "flavor": "nondynamical"})"),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)load_model_json(R"({"name": "nosuch"})"), std::invalid_argument);
    CHECK_THROWS_AS((void)load_model_json(R"({"name": "gl2", "schema": 2})"),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)load_model_file("/nonexistent/model.json"), std::runtime_error);

    // complex parameters as [re, im] pairs
    const ModelSpec mc = load_model_json(R"({"name": "sixvertex", "gamma": [0.2, 0.05]})");
    CHECK(mc.gamma == Cplx(0.2, 0.05));
}

TEST_CASE("perturbation injects noise of the requested size") {
    const ModelSpec m = gl2_model();
    const ModelSpec p = perturbed(m, 1e-3);
    const Lambda l = lam(0.9, 0.2);
    // spectral difference away from the sinh pole at gamma
    const DenseOperator a = m.A.bind({Cplx(0.31), Cplx(0.04)}).eval(l);
    const DenseOperator b = p.A.bind({Cplx(0.31), Cplx(0.04)}).eval(l);
    CHECK((a - b).norm() == doctest::Approx(1e-3).epsilon(1e-6));
}
