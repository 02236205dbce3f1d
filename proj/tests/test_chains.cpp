#include "quadbraid/chains.hpp"

#include <doctest.h>

using namespace quadbraid;

namespace {

std::vector<Lambda> guard_lambdas(const ModelSpec& m, int count, std::uint64_t seed = 7) {
    return sample_lambdas(m, count, seed);
}

DynamicalMatrix constant_scalar(const DenseOperator& c, Cplx step) {
    DynamicalMatrix d;
    d.legs = {1};
    d.arity = 1;
    d.n = 2;
    d.step = step;
    d.eval = [c](std::span<const Cplx>, const Lambda&) { return c; };
    return d;
}

ModelSpec control_with_chi(ModelSpec m) {
    m.chi = constant_scalar(sixvertex_dual_chi(), m.step());
    m.chi_diagonal = false;
    m.chi_mode = ChiMode::NonDiagonal;
    return m;
}

}  // namespace

TEST_CASE("zero-argument closed forms match the builders") {
    Sampler s(3);
    // soliton-preserving control: t(0) = n T_1
    {
        ModelSpec m = sixvertex_model();
        ChainSpec chain = make_chain(m, 2);
        const auto lambdas = guard_lambdas(m, 1);
        CHECK(diffop_residual(transfer_nondyn_sp(chain, 0.0).op, closed_t0(chain), lambdas) < 1e-12);
    }
    // alternating control
    {
        ModelSpec m = sixvertex_model(0.2, Boundary::SNP);
        const auto lambdas = guard_lambdas(m, 1);
        for (int N : {1, 2}) {
            ChainSpec chain = make_chain(m, N);
            CHECK(diffop_residual(transfer_nondyn_snp(chain, 0.0).op, closed_t0(chain), lambdas) <
                  1e-12);
        }
    }
    // semidynamical control: a genuine difference operator
    {
        ModelSpec m = sixvertex_semidynamical();
        const auto lambdas = guard_lambdas(m, 1);
        ChainSpec chain = make_chain(m, 2);
        const TransferMatrix t0 = transfer_semidyn(chain, 0.0);
        CHECK(diffop_residual(t0.op, closed_t0(chain), lambdas) < 1e-12);
        CHECK_FALSE(diffop_is_pure(t0.op, lambdas));
    }
    // fully dynamical SP: t(0) = n T_1(h_<) = 2 for T = 1
    {
        ModelSpec m = gl2_model();
        const auto lambdas = guard_lambdas(m, 2);
        ChainSpec chain = make_chain(m, 2);
        chain.chi_mode = ChiMode::Identity;
        const TransferMatrix t0 = transfer_fulldyn_sp(chain, 0.0);
        CHECK(diffop_residual(t0.op, closed_t0(chain), lambdas) < 1e-12);
        CHECK(diffop_residual(
                  t0.op, diffop_from(identity_op({1, 2}, 2) * Cplx(2.0), 2, m.step()), lambdas) <
              1e-12);
        // boundary-solution path: t(0) = T_1(0,h_<) tr chi^SC
        chain.chi_mode = ChiMode::Diagonal;
        CHECK(diffop_residual(transfer_fulldyn_sp(chain, 0.0).op, closed_t0(chain), lambdas) <
              1e-12);
        // the non-diagonal path with the same diagonal chi agrees
        chain.chi_mode = ChiMode::NonDiagonal;
        CHECK(diffop_residual(transfer_fulldyn_sp(chain, 0.0).op, closed_t0(chain), lambdas) <
              1e-12);
    }
    // fully dynamical SNP
    {
        ModelSpec m = gl2_model();
        m.boundary = Boundary::SNP;
        const auto lambdas = guard_lambdas(m, 2);
        for (int N : {1, 2}) {
            ChainSpec chain = make_chain(m, N);
            chain.chi_mode = ChiMode::Identity;
            CHECK(diffop_residual(transfer_fulldyn_snp(chain, 0.0).op, closed_t0(chain), lambdas) <
                  1e-12);
        }
    }
}

TEST_CASE("boundary matrix is diagonal for total-zero-weight structure") {
    ModelSpec m = gl2_model();
    const auto lambdas = guard_lambdas(m, 3);
    const LambdaMap X = boundary_X(m, 2, Cplx(0.31, 0.05));
    for (const Lambda& l : lambdas) {
        const Matrix x = X.eval(l).mat();
        CHECK(std::abs(x(0, 1)) < 1e-13);
        CHECK(std::abs(x(1, 0)) < 1e-13);
    }
}

TEST_CASE("transfer matrices commute along the family") {
    Sampler s(5);
    // control, SP
    {
        ModelSpec m = sixvertex_model();
        ChainSpec chain = make_chain(m, 3);
        const auto lambdas = guard_lambdas(m, 1);
        std::vector<Cplx> us{s.spectral(m.u_guard), s.spectral(m.u_guard)};
        std::vector<Cplx> vs{s.spectral(m.u_guard)};
        const CommutationScan scan = commutation_scan(chain, us, vs, lambdas);
        CHECK(scan.max_residual < 1e-9);
        CHECK(scan.points == 2);
    }
    // control, SNP pairs
    {
        ModelSpec m = sixvertex_model(0.2, Boundary::SNP);
        ChainSpec chain = make_chain(m, 2);
        const auto lambdas = guard_lambdas(m, 1);
        std::vector<Cplx> us{s.spectral(m.u_guard)};
        std::vector<Cplx> vs{s.spectral(m.u_guard)};
        CHECK(commutation_scan(chain, us, vs, lambdas).max_residual < 1e-9);
    }
    // semidynamical control: the lambda-independent chain commutes on the
    // restriction to lambda-constant functions, where it coincides with the
    // non-dynamical alternating chain
    {
        ModelSpec m = sixvertex_semidynamical();
        ChainSpec chain = make_chain(m, 1);
        const auto lambdas = guard_lambdas(m, 1);
        const Cplx u = s.spectral(m.u_guard), v = s.spectral(m.u_guard);
        const DiffOp comm = diffop_commutator(transfer(chain, u).op, transfer(chain, v).op);
        CHECK(comm.collapse(lambdas[0]).norm() < 1e-9);

        ModelSpec nd = sixvertex_model(0.2, Boundary::SNP);
        ChainSpec ndchain = make_chain(nd, 1);
        const double nd_res =
            commutation_scan(ndchain, std::vector<Cplx>{u}, std::vector<Cplx>{v}, lambdas)
                .max_residual;
        CHECK(std::abs(comm.collapse(lambdas[0]).norm() - nd_res) < 1e-9);
    }
    // explicit model with its diagonal boundary solution
    {
        ModelSpec m = gl2_model();
        ChainSpec chain = make_chain(m, 2);
        chain.chi_mode = ChiMode::Diagonal;
        const auto lambdas = guard_lambdas(m, 2);
        std::vector<Cplx> us{s.spectral(m.u_guard)};
        std::vector<Cplx> vs{s.spectral(m.u_guard)};
        CHECK(commutation_scan(chain, us, vs, lambdas).max_residual < 1e-10);
        // u = v commutes exactly
        const CommutationScan diag = commutation_scan(chain, us, us, lambdas);
        CHECK(diag.max_residual < 1e-14);
        // dropping the boundary solution breaks the family (falsifiability)
        chain.chi_mode = ChiMode::Identity;
        CHECK(commutation_scan(chain, us, vs, lambdas).max_residual > 1e-3);
    }
    // alternating explicit-model chain with the boundary solution
    {
        ModelSpec m = gl2_model();
        m.boundary = Boundary::SNP;
        ChainSpec chain = make_chain(m, 1);
        chain.chi_mode = ChiMode::Diagonal;
        const auto lambdas = guard_lambdas(m, 2);
        std::vector<Cplx> us{s.spectral(m.u_guard)};
        std::vector<Cplx> vs{s.spectral(m.u_guard)};
        CHECK(commutation_scan(chain, us, vs, lambdas).max_residual < 1e-10);
    }
    // inhomogeneous quantum parameters keep the family commuting
    {
        ModelSpec m = gl2_model();
        ChainSpec chain = make_chain(m, 2);
        chain.chi_mode = ChiMode::Diagonal;
        chain.site_u = {Cplx(0.07, 0.01), Cplx(-0.13, 0.03)};
        const auto lambdas = guard_lambdas(m, 1);
        std::vector<Cplx> us{s.spectral(m.u_guard)};
        std::vector<Cplx> vs{s.spectral(m.u_guard)};
        CHECK(commutation_scan(chain, us, vs, lambdas).max_residual < 1e-10);
    }
}

TEST_CASE("chi conjugation covariance in all three flavors") {
    Sampler s(9);
    struct Case {
        ModelSpec model;
        int N;
        ChiMode mode;
    };
    std::vector<Case> cases;
    cases.push_back({control_with_chi(sixvertex_model(0.2, Boundary::SP)), 2, ChiMode::NonDiagonal});
    cases.push_back({control_with_chi(sixvertex_model(0.2, Boundary::SNP)), 2, ChiMode::NonDiagonal});
    cases.push_back({control_with_chi(sixvertex_semidynamical()), 2, ChiMode::NonDiagonal});
    cases.push_back({gl2_model(), 2, ChiMode::Diagonal});
    {
        ModelSpec snp = gl2_model();
        snp.boundary = Boundary::SNP;
        cases.push_back({snp, 1, ChiMode::Diagonal});
    }

    VerifyOptions vopt;
    vopt.samples = 4;
    for (const auto& c : cases) {
        ChainSpec orig = make_chain(c.model, c.N);
        orig.chi_mode = c.mode;
        const ModelSpec conj = chi_conjugate(c.model, true, vopt);
        ChainSpec tilde = make_chain(conj, c.N);
        tilde.chi_mode = ChiMode::Identity;

        const auto lambdas = guard_lambdas(c.model, 2);
        const Cplx u = s.spectral(c.model.u_guard);
        const DiffOp t = transfer(orig, u).op;
        const DiffOp tt = transfer(tilde, u).op;
        const LambdaMap Q = conjugation_operator(orig);
        const DiffOp expect =
            diffop_mul(diffop_mul(diffop_from(Q, 2, c.model.step()), t),
                       diffop_from(lambda_inverse(Q), 2, c.model.step()));
        INFO(c.model.name << " " << to_string(c.model.boundary) << " N=" << c.N);
        CHECK(diffop_residual(tt, expect, lambdas) < 1e-10);

        // the conjugated model represents its own exchange relation
        CHECK(check_exchange(conj, conj.T, vopt).pass);
    }
}

TEST_CASE("conjugation preconditions") {
    // non-diagonal chi is rejected in the fully dynamical flavor
    ModelSpec m = gl2_model();
    m.chi_diagonal = false;
    CHECK_THROWS_AS((void)chi_conjugate(m, false), std::invalid_argument);

    // a chi that does not solve the dual relation is rejected
    ModelSpec bad = gl2_model();
    bad.chi = constant_scalar(identity_op({1}, 2), bad.step());
    VerifyOptions vopt;
    vopt.samples = 4;
    CHECK_THROWS_AS((void)chi_conjugate(bad, true, vopt), std::invalid_argument);

    // identity chi on the control leaves the structure matrices unchanged
    ModelSpec ctrl = sixvertex_model();
    const ModelSpec conj = chi_conjugate(ctrl, true, vopt);
    const Lambda l = Lambda::Zero(2);
    const DenseOperator a = ctrl.A.bind({Cplx(0.3), Cplx(0.1)}).eval(l);
    const DenseOperator b = conj.A.bind({Cplx(0.3), Cplx(0.1)}).eval(l);
    CHECK((a - b).norm() < 1e-14);
}

TEST_CASE("derivative of the family commutes with its value") {
    // t'(0) t(0)^{-1} = t(0)^{-1} t'(0) within finite-difference tolerance
    ModelSpec m = sixvertex_model();
    ChainSpec chain = make_chain(m, 2);
    const auto lambdas = guard_lambdas(m, 1);
    const double h = 1e-4;
    const DiffOp tp = diffop_scale(diffop_sub(transfer(chain, h).op, transfer(chain, -h).op),
                                   Cplx(1.0 / (2.0 * h)));
    const DiffOp t0 = transfer(chain, 0.0).op;
    const LambdaMap t0inv{{}, 2, [t0](const Lambda& l) { return inverse(t0.collapse(l)); }};
    const DiffOp left = diffop_mul(tp, diffop_from(t0inv, 2, m.step()));
    const DiffOp right = diffop_mul(diffop_from(t0inv, 2, m.step()), tp);
    CHECK(diffop_residual(left, right, lambdas) < 1e-8);
}
