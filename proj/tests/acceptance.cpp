// Acceptance suite: one pass/fail line per criterion, exit code = number of
// failed criteria. Every tolerance is pinned here, in code.

#include "quadbraid/hamiltonians.hpp"
#include "quadbraid/runner.hpp"

#include <cstdio>
#include <string>
#include <vector>

using namespace quadbraid;

namespace {

int failures = 0;

void line(int idx, const std::string& name, bool pass, const std::string& detail) {
    std::printf("criterion %d (%s): %s — %s\n", idx, name.c_str(), pass ? "PASS" : "FAIL",
                detail.c_str());
    if (!pass) ++failures;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2e", v);
    return buf;
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

// ---- criterion 1: identity suite ----------------------------------------
void criterion_identity_suite() {
    const double tol = 1e-9;
    VerifyOptions opt;
    opt.samples = 20;
    opt.tolerance = tol;
    const ModelSpec m = gl2_model();

    double worst = 0.0;
    bool pass = true;
    std::string failed;
    for (const auto& r : verify_suite(m, opt)) {
        worst = std::max(worst, r.max_residual);
        if (!r.pass) {
            pass = false;
            failed += " " + r.identity;
        }
    }

    // falsifiability: the same suite on a perturbed model must fail
    const ModelSpec noisy = perturbed(m, 1e-3);
    int noisy_failures = 0;
    for (const auto& r : verify_suite(noisy, opt))
        if (!r.pass) ++noisy_failures;
    // noise enters through A: exactly the five A-dependent identities break
    const bool controls = noisy_failures >= 5;

    line(1, "identity suite", pass && controls,
         "8 identities, max residual " + fmt(worst) + " (tol 1e-9); perturbation 1e-3 breaks " +
             std::to_string(noisy_failures) + "/8" + failed);
}

// ---- criterion 2: commuting family ---------------------------------------
void criterion_commuting_family() {
    const double tol = 1e-8;
    double worst = 0.0;
    bool pass = true;
    std::string detail;

    auto scan_case = [&](const ModelSpec& m, int N, ChiMode mode, const std::string& name) {
        ChainSpec chain = make_chain(m, N);
        chain.chi_mode = mode;
        Sampler s(101);
        std::vector<Cplx> us, vs;
        for (int i = 0; i < 3; ++i) us.push_back(s.spectral(m.u_guard));
        for (int i = 0; i < 3; ++i) vs.push_back(s.spectral(m.u_guard));
        const auto lambdas = sample_lambdas(m, 3, 103);
        const CommutationScan scan = commutation_scan(chain, us, vs, lambdas);
        worst = std::max(worst, scan.max_residual);
        if (scan.max_residual >= tol || scan.points != 9) pass = false;
        detail += name + " " + fmt(scan.max_residual) + "; ";
    };

    scan_case(sixvertex_model(0.2, Boundary::SP), 3, ChiMode::Identity, "control SP N=3");
    scan_case(sixvertex_model(0.2, Boundary::SNP), 2, ChiMode::Identity, "control SNP N=2");
    scan_case(gl2_model(), 2, ChiMode::Diagonal, "gl2 SP N=2");
    scan_case(gl2_model(), 3, ChiMode::Diagonal, "gl2 SP N=3");

    line(2, "commuting family", pass, detail + "(tol 1e-8, 3x3x3 grids)");
}

// ---- criterion 3: t(0) closed forms ---------------------------------------
void criterion_t0_closed_forms() {
    const double tol = 1e-12;
    double worst = 0.0;
    auto check = [&](const ChainSpec& chain, const std::vector<Lambda>& lambdas) {
        const double r = diffop_residual(transfer(chain, Cplx(0.0)).op, closed_t0(chain), lambdas);
        worst = std::max(worst, r);
    };

    {
        ModelSpec m = gl2_model();
        const auto lambdas = sample_lambdas(m, 3, 107);
        ChainSpec chain = make_chain(m, 2);
        chain.chi_mode = ChiMode::Identity;  // t(0) = n T_1(h_<) = 2
        check(chain, lambdas);
        const double rid = diffop_residual(
            transfer(chain, Cplx(0.0)).op,
            diffop_from(identity_op({1, 2}, 2) * Cplx(2.0), 2, m.step()), lambdas);
        worst = std::max(worst, rid);
        chain.chi_mode = ChiMode::NonDiagonal;  // t(0) = T_1(0,h_<) tr chi^SC
        check(chain, lambdas);

        ModelSpec snp = gl2_model();
        snp.boundary = Boundary::SNP;
        ChainSpec alt = make_chain(snp, 2);
        alt.chi_mode = ChiMode::Identity;
        check(alt, lambdas);
    }
    {
        ModelSpec m = sixvertex_model(0.2, Boundary::SNP);
        const auto lambdas = sample_lambdas(m, 1, 109);
        check(make_chain(m, 2), lambdas);
    }

    line(3, "t(0) closed forms", worst < tol, "max residual " + fmt(worst) + " (tol 1e-12)");
}

// ---- criterion 4: Hamiltonian consistency ---------------------------------
void criterion_hamiltonian_consistency() {
    FdOptions fd;
    bool pass = true;
    std::string detail;

    {  // control SP display, all terms
        ModelSpec m = sixvertex_model();
        const auto lambdas = sample_lambdas(m, 5, 113);
        ChainSpec chain = make_chain(m, 2);
        const HamiltonianReport rep = closed_form_H(chain, fd, lambdas);
        double per_term = 0.0;
        for (const auto& t : rep.terms) per_term = std::max(per_term, t.closed_residual);
        pass = pass && rep.residual_vs_numeric < 1e-6 && per_term < 1e-6;
        detail += "control-SP total " + fmt(rep.residual_vs_numeric) + ", worst term " +
                  fmt(per_term) + "; ";
        pass = pass && rep.left_right_agreement < 1e-7;
    }
    {  // explicit-model bulk at 5 seeded lambda, H commutes with t(v)
        const Cplx g(0.2, 0.0), xi(1.1, 0.0);
        ModelSpec m = gl2_model(g, xi);
        const auto lambdas = sample_lambdas(m, 5, 127);
        const HamiltonianReport rep = gl2_example_H(2, g, xi, fd, lambdas);
        pass = pass && rep.bulk_residual < 1e-6 && rep.left_right_agreement < 1e-7;
        detail += "gl2 bulk " + fmt(rep.bulk_residual) + ", boundary " +
                  fmt(rep.boundary_residual) + ", left/right " + fmt(rep.left_right_agreement) +
                  "; ";

        ChainSpec chain = make_chain(m, 2);
        const DiffOp H = log_derivative(chain, fd);
        Sampler s(131);
        const SpectrumResult sp = spectrum(H, lambdas[0], chain, s.spectral(m.u_guard));
        pass = pass && sp.probe_commutation < 1e-7;
        detail += "[H,t(v)] " + fmt(sp.probe_commutation);
    }

    line(4, "hamiltonian consistency", pass, detail + " (tol 1e-6 / 1e-7)");
}

// ---- criterion 5: locality -------------------------------------------------
void criterion_locality() {
    ModelSpec m = gl2_model();
    const auto lambdas = sample_lambdas(m, 2, 137);
    FdOptions fd;
    ChainSpec chain = make_chain(m, 3);
    const auto numeric = log_derivative_terms(chain, fd);
    const LocalityReport rep = locality_report(numeric, 3, 2, lambdas);

    bool pass = rep.pass;
    bool boundary_ok = true;
    std::string windows;
    for (const auto& t : rep.terms) {
        windows += t.label + ":" + t.locality_class + " ";
        if (static_cast<int>(t.window.size()) > 2) pass = false;
        // boundary pieces touch only the last site beyond their abelian tail
        if (t.label == "A03" || t.label == "B03" || t.label == "chi0_SCt") {
            for (int w : t.window)
                if (w != 3) boundary_ok = false;
        }
    }
    // the boundary block has the diagonal sigma^z_N structure: verified by
    // the example report at the same tolerance
    const HamiltonianReport ex = gl2_example_H(3, m.gamma, m.xi, fd, lambdas);
    boundary_ok = boundary_ok && ex.boundary_residual < 1e-6;

    line(5, "locality", pass && boundary_ok, windows + "(window bound 2, diagonal tails)");
}

// ---- criterion 6: conjugation covariance -----------------------------------
void criterion_conjugation_covariance() {
    const double tol = 1e-10;
    double worst = 0.0;
    bool pass = true;
    VerifyOptions vopt;
    vopt.samples = 8;

    struct Case {
        ModelSpec model;
        int N;
        ChiMode mode;
        const char* name;
    };
    std::vector<Case> cases;
    cases.push_back(
        {control_with_chi(sixvertex_model(0.2, Boundary::SP)), 2, ChiMode::NonDiagonal, "nondyn"});
    cases.push_back({control_with_chi(sixvertex_semidynamical()), 2, ChiMode::NonDiagonal,
                     "semidyn"});
    cases.push_back({gl2_model(), 2, ChiMode::Diagonal, "fulldyn"});

    std::string detail;
    for (const auto& c : cases) {
        ChainSpec orig = make_chain(c.model, c.N);
        orig.chi_mode = c.mode;
        const ModelSpec conj = chi_conjugate(c.model, true, vopt);
        ChainSpec tilde = make_chain(conj, c.N);
        tilde.chi_mode = ChiMode::Identity;
        const auto lambdas = sample_lambdas(c.model, 2, 139);
        Sampler s(149);
        const Cplx u = s.spectral(c.model.u_guard);
        const DiffOp t = transfer(orig, u).op;
        const DiffOp tt = transfer(tilde, u).op;
        const LambdaMap Q = conjugation_operator(orig);
        const DiffOp expect = diffop_mul(diffop_mul(diffop_from(Q, 2, c.model.step()), t),
                                         diffop_from(lambda_inverse(Q), 2, c.model.step()));
        const double r = diffop_residual(tt, expect, lambdas);
        worst = std::max(worst, r);
        pass = pass && r < tol;
        detail += std::string(c.name) + " " + fmt(r) + "; ";
    }
    line(6, "conjugation covariance", pass, detail + "(tol 1e-10)");
}

// ---- criterion 7: rewriting identities -------------------------------------
void criterion_rewriting() {
    const double tol = 1e-10;
    ModelSpec m = gl2_model();
    const Cplx step = m.step();
    bool pass = true;
    std::string detail;

    {  // the trace rewriting with the diagonal boundary matrix; the combined
       // statement (one trailing exponential, X_ij = delta_ij sum_k B_ikki)
       // holds on the class of structure matrices with both weight
       // symmetries, realized here by a weight-diagonal B
        Matrix b = Matrix::Zero(4, 4);
        b.diagonal() << Cplx(1.3, 0.2), Cplx(0.7, -0.4), Cplx(-0.5, 0.1), Cplx(2.1, 0.0);
        const DenseOperator B({0, 2}, 2, b);
        const DenseOperator P = permutation(0, 2, {0, 2}, 2);
        DiffOp lhs = diffop_mul(diffop_from(P * B, 2, step), exp_shift(0, +1, 2, step));
        lhs = diffop_trace(lhs, 0);

        LegIndexer idx(2, 2);
        Matrix x = Matrix::Zero(2, 2);
        for (int i = 0; i < 2; ++i)
            for (int k = 0; k < 2; ++k) {
                const std::vector<int> row{i, k}, col{k, i};
                x(i, i) += B.mat()(idx.encode(row), idx.encode(col));
            }
        const DiffOp rhs = diffop_mul(exp_shift(2, +1, 2, step),
                                      diffop_from(DenseOperator({2}, 2, x), 2, step));
        const auto lambdas = sample_lambdas(m, 3, 151);
        const double r = diffop_residual(lhs, rhs, lambdas);
        pass = pass && r < tol;
        detail += "trace rewriting " + fmt(r) + "; ";
    }
    {  // X diagonality with the entry-sum formula for the catalog B at
       // generic arguments
        const auto lambdas = sample_lambdas(m, 5, 157);
        Sampler s(163);
        double worst = 0.0;
        for (const Lambda& l : lambdas) {
            const Cplx u = s.spectral(m.u_guard);
            const DenseOperator B = place2(m.B, 0, 2, u, Cplx(0.0)).eval(l);
            const DenseOperator X = partial_trace(permutation(0, 2, {0, 2}, 2) * B, 0);
            LegIndexer idx(2, 2);
            Matrix expect = Matrix::Zero(2, 2);
            for (int i = 0; i < 2; ++i)
                for (int k = 0; k < 2; ++k) {
                    const std::vector<int> row{i, k}, col{k, i};
                    expect(i, i) += B.mat()(idx.encode(row), idx.encode(col));
                }
            worst = std::max(worst, (X.mat() - expect).norm());
            worst = std::max(worst, std::abs(X.mat()(0, 1)));
            worst = std::max(worst, std::abs(X.mat()(1, 0)));
        }
        pass = pass && worst < tol;
        detail += "X diagonality " + fmt(worst) + "; ";
    }
    {  // the boundary rewriting chain: the dressed trace collapses to a pure
       // operator (no shift residue beyond the stated exponential factors)
        const auto lambdas = sample_lambdas(m, 3, 167);
        const DiffOp X = boundary_X_full(m, 2, Cplx(0.27, 0.06), true);
        const bool pure = diffop_is_pure(X, lambdas);
        LambdaMap kern = sc_shift(place2(m.B, 0, 2, Cplx(0.27, 0.06), Cplx(0.0)), ShiftIndex::Row,
                                  +1, {0, 2}, step);
        kern = lambda_product(constant_map(permutation(0, 2, {0, 2}, 2)), kern);
        LambdaMap chi_sct = lambda_transpose(
            sc_shift(place1(m.chi, 0, Cplx(0.27, 0.06)), ShiftIndex::Column, +1, {0}, step), {0});
        chi_sct = weight_shift_embed(chi_sct, {{2, -1}}, step);
        kern = lambda_product(kern, chi_sct);
        LambdaMap Xbar{{2}, 2, [kern](const Lambda& l) { return partial_trace(kern.eval(l), 0); }};
        const DiffOp expect =
            diffop_mul(diffop_mul(exp_shift(2, +1, 2, step), diffop_from(Xbar, 2, step)),
                       exp_shift(2, -1, 2, step));
        const double r = diffop_residual(X, expect, lambdas);
        pass = pass && pure && r < tol;
        detail += std::string("boundary chain pure=") + (pure ? "yes" : "no") + " residual " +
                  fmt(r);
    }

    line(7, "rewriting identities", pass, detail + " (tol 1e-10)");
}

// ---- criterion 8: determinism ----------------------------------------------
void criterion_determinism() {
    RunConfig cfg;
    cfg.command = "verify";
    cfg.model_inline = R"({"name": "gl2"})";
    cfg.samples = 8;
    RunResult a = run_command(cfg);
    RunResult b = run_command(cfg);
    a.report.erase("generated_at");
    b.report.erase("generated_at");
    const bool same = a.report.dump() == b.report.dump();
    line(8, "determinism", same, same ? "two runs byte-identical (timestamp excluded)"
                                      : "reports differ");
}

}  // namespace

int main() {
    criterion_identity_suite();
    criterion_commuting_family();
    criterion_t0_closed_forms();
    criterion_hamiltonian_consistency();
    criterion_locality();
    criterion_conjugation_covariance();
    criterion_rewriting();
    criterion_determinism();

    // boundary closed forms: checked against the numeric derivative above;
    // the grouping in gl2_f/gl2_g is the corrected one (see README).
    std::printf("%s\n", failures == 0 ? "acceptance: ALL CRITERIA PASS"
                                      : "acceptance: FAILURES PRESENT");
    return failures;
}
