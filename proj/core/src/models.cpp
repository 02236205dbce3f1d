#include "quadbraid/models.hpp"

#include "quadbraid/sampling.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <set>

#include <fstream>
#include <sstream>

namespace quadbraid {

using std::sinh;

std::string to_string(Flavor f) {
    switch (f) {
        case Flavor::NonDynamical: return "nondynamical";
        case Flavor::SemiDynamical: return "semidynamical";
        case Flavor::FullyDynamical: return "fully_dynamical";
    }
    return "?";
}

std::string to_string(Boundary b) { return b == Boundary::SP ? "SP" : "SNP"; }

std::string to_string(ChiMode c) {
    switch (c) {
        case ChiMode::Identity: return "identity";
        case ChiMode::Diagonal: return "diagonal";
        case ChiMode::NonDiagonal: return "nondiagonal";
    }
    return "?";
}

namespace {

Cplx lam12(const Lambda& lambda) { return lambda(0) - lambda(1); }

DenseOperator two_leg(const Cplx& d11, const Cplx& mid_aa, const Cplx& mid_ab, const Cplx& mid_ba,
                      const Cplx& mid_bb, const Cplx& d22) {
    // basis order (big-endian): 11, 12, 21, 22
    Matrix m = Matrix::Zero(4, 4);
    m(0, 0) = d11;
    m(1, 1) = mid_aa;
    m(1, 2) = mid_ab;
    m(2, 1) = mid_ba;
    m(2, 2) = mid_bb;
    m(3, 3) = d22;
    return DenseOperator({1, 2}, 2, std::move(m));
}

}  // namespace

Cplx gl2_alpha(const Lambda& lambda, Cplx u, Cplx gamma) {
    const Cplx l = lam12(lambda);
    return sinh(l - gamma) * sinh(u) / (sinh(u - gamma) * sinh(l));
}

Cplx gl2_beta(const Lambda& lambda, Cplx u, Cplx gamma) {
    const Cplx l = lam12(lambda);
    return sinh(u - l) * sinh(gamma) / (sinh(u - gamma) * sinh(l));
}

DenseOperator gl2_R(const Lambda& lambda, Cplx u, Cplx gamma) {
    const Lambda neg = -lambda;
    const Cplx a = gl2_alpha(lambda, u, gamma);
    const Cplx d = gl2_alpha(neg, u, gamma);
    const Cplx b = gl2_beta(lambda, u, gamma);
    const Cplx g = gl2_beta(neg, u, gamma);
    // E11(x)E11 + E22(x)E22 + a E11(x)E22 + d E22(x)E11 + b E12(x)E21 + g E21(x)E12
    return two_leg(1.0, a, b, g, d, 1.0);
}

namespace {

Cplx gl2_zeta_dual(const Lambda& lambda, Cplx u, Cplx gamma) {
    const Cplx l = lam12(lambda);
    const Cplx frac = sinh(gamma) * sinh(gamma) * sinh(l - u) * sinh(2.0 * gamma - l - u) /
                      (sinh(l) * sinh(2.0 * gamma - l) * sinh(2.0 * gamma - u) * sinh(2.0 * gamma - u));
    return 1.0 / (1.0 - frac);
}

Cplx gl2_alpha_dual(const Lambda& lambda, Cplx u, Cplx gamma) {
    const Cplx l = lam12(lambda);
    return sinh(l) * sinh(u - gamma) / (sinh(u) * sinh(l - gamma));
}

// The off-diagonal weights enter the dual relation with a positive overall
// sign; the numeric relation test fixes this convention.
Cplx gl2_beta_dual(const Lambda& lambda, Cplx u, Cplx gamma) {
    const Cplx l = lam12(lambda);
    return sinh(gamma) * sinh(l) * sinh(gamma - u) * sinh(2.0 * gamma - l - u) /
           (sinh(gamma - l) * sinh(gamma - l) * sinh(2.0 * gamma - u) * sinh(u));
}

}  // namespace

DenseOperator gl2_R_dual(const Lambda& lambda, Cplx u, Cplx gamma) {
    const Lambda neg = -lambda;
    const Cplx z = gl2_zeta_dual(lambda, u, gamma);
    const Cplx e = gl2_zeta_dual(neg, u, gamma);
    const Cplx a = gl2_alpha_dual(lambda, u, gamma);
    const Cplx d = gl2_alpha_dual(neg, u, gamma);
    const Cplx b = gl2_beta_dual(lambda, u, gamma);
    const Cplx g = gl2_beta_dual(neg, u, gamma);
    return two_leg(z, a, b, g, d, e);
}

DenseOperator gl2_chi(const Lambda& lambda, Cplx u, Cplx gamma, Cplx xi) {
    const Cplx l = lam12(lambda);
    const Cplx c1 = sinh(l) * sinh(-lambda(0) + xi - u + gamma) /
                    (sinh(l - gamma) * sinh(-lambda(0) + xi + u - gamma));
    const Cplx c2 = sinh(l) * sinh(-lambda(1) + xi - u + gamma) /
                    (sinh(l + gamma) * sinh(-lambda(1) + xi + u - gamma));
    Eigen::VectorXcd d(2);
    d << c1, c2;
    return diagonal_op(d, 1);
}

DenseOperator gl2_T() { return identity_op({1}, 2); }

namespace {

// Structure assignment shared by the explicit model and the control:
//   A(u1,u2) = R(u1-u2)   B(u1,u2) = R21(u1+u2)
//   C(u1,u2) = R(u1+u2)   D(u1,u2) = R21(u1-u2)
// where R21 is the leg-swapped matrix. The dual bundle replaces the sum
// slots B, C by the dual R.
struct RFamily {
    std::function<DenseOperator(const Lambda&, Cplx)> R;      // on legs {1,2}
    std::function<DenseOperator(const Lambda&, Cplx)> Rdual;  // may be empty
};

void assign_structure(ModelSpec& m, const RFamily& fam) {
    const Cplx step = m.step();
    const int n = m.n;
    auto wrap2 = [n, step](std::function<DenseOperator(std::span<const Cplx>, const Lambda&)> f) {
        DynamicalMatrix d;
        d.legs = {1, 2};
        d.arity = 2;
        d.n = n;
        d.step = step;
        d.eval = std::move(f);
        return d;
    };
    auto R = fam.R;
    m.A = wrap2([R](std::span<const Cplx> u, const Lambda& l) { return R(l, u[0] - u[1]); });
    m.B = wrap2([R](std::span<const Cplx> u, const Lambda& l) {
        return leg_swap(R(l, u[0] + u[1]), 1, 2);
    });
    m.C = wrap2([R](std::span<const Cplx> u, const Lambda& l) { return R(l, u[0] + u[1]); });
    m.D = wrap2([R](std::span<const Cplx> u, const Lambda& l) {
        return leg_swap(R(l, u[0] - u[1]), 1, 2);
    });
    if (fam.Rdual) {
        // Dual bundle: the difference slots swap relative to the direct
        // relation (A-dual is the leg-swapped R, D-dual the plain one); the
        // sum slots carry the dual partner matrix. Fixed by residual tests.
        auto Rd = fam.Rdual;
        m.Adual = m.D;
        m.Bdual = wrap2([Rd](std::span<const Cplx> u, const Lambda& l) {
            return leg_swap(Rd(l, u[0] + u[1]), 1, 2);
        });
        m.Cdual = wrap2([Rd](std::span<const Cplx> u, const Lambda& l) { return Rd(l, u[0] + u[1]); });
        m.Ddual = m.A;
    }
}

DynamicalMatrix scalar_family(int n, Cplx step,
                              std::function<DenseOperator(Cplx, const Lambda&)> f) {
    DynamicalMatrix d;
    d.legs = {1};
    d.arity = 1;
    d.n = n;
    d.step = step;
    d.eval = [f = std::move(f)](std::span<const Cplx> u, const Lambda& l) { return f(u[0], l); };
    return d;
}

}  // namespace

ModelSpec gl2_model(Cplx gamma, Cplx xi, ChiMode chi_mode) {
    ModelSpec m;
    m.name = "gl2";
    m.n = 2;
    m.gamma = gamma;
    m.xi = xi;
    m.flavor = Flavor::FullyDynamical;
    m.boundary = Boundary::SP;
    m.chi_mode = chi_mode;
    m.shift_sign = -1;  // the printed relations shift by -gamma h
    m.chi_diagonal = true;

    RFamily fam;
    fam.R = [gamma](const Lambda& l, Cplx u) { return gl2_R(l, u, gamma); };
    fam.Rdual = [gamma](const Lambda& l, Cplx u) { return gl2_R_dual(l, u, gamma); };
    assign_structure(m, fam);

    m.T = scalar_family(2, m.step(), [](Cplx, const Lambda&) { return gl2_T(); });
    m.chi = scalar_family(2, m.step(), [gamma, xi](Cplx u, const Lambda& l) {
        return gl2_chi(l, u, gamma, xi);
    });

    m.lambda_guard = [gamma, xi](const Lambda& l) {
        const Cplx d = l(0) - l(1);
        for (int k = -2; k <= 2; ++k) {
            if (!sinh_guard({d + static_cast<double>(k) * gamma})) return false;
            if (!sinh_guard({xi - l(0) + static_cast<double>(k) * gamma}, 0.05)) return false;
            if (!sinh_guard({xi - l(1) + static_cast<double>(k) * gamma}, 0.05)) return false;
        }
        return true;
    };
    m.u_guard = [gamma](Cplx x) {
        return sinh_guard({x - gamma, x + gamma, x, 2.0 * gamma - x}, 0.05);
    };
    return m;
}

DenseOperator sixvertex_R(Cplx u, Cplx eta) {
    const Cplx b = sinh(u) / sinh(u + eta);
    const Cplx c = sinh(eta) / sinh(u + eta);
    return two_leg(1.0, b, c, c, b, 1.0);
}

ModelSpec sixvertex_model(Cplx eta, Boundary boundary) {
    ModelSpec m;
    m.name = "sixvertex";
    m.n = 2;
    m.gamma = eta;
    m.xi = 0.0;
    m.flavor = Flavor::NonDynamical;
    m.boundary = boundary;
    m.chi_mode = ChiMode::Identity;
    m.shift_sign = 1;
    m.chi_diagonal = true;

    RFamily fam;
    fam.R = [eta](const Lambda&, Cplx u) { return sixvertex_R(u, eta); };
    assign_structure(m, fam);
    // the control's dual relation is the transpose-inverse one built from
    // A..D directly; no separate dual bundle.

    m.T = scalar_family(2, m.step(), [](Cplx, const Lambda&) { return identity_op({1}, 2); });
    m.chi = scalar_family(2, m.step(), [](Cplx, const Lambda&) { return identity_op({1}, 2); });

    m.lambda_guard = [](const Lambda&) { return true; };
    m.u_guard = [eta](Cplx x) { return sinh_guard({x + eta, x - eta, eta - x}, 0.05); };
    return m;
}

ModelSpec sixvertex_semidynamical(Cplx eta) {
    ModelSpec m = sixvertex_model(eta, Boundary::SNP);
    m.name = "sixvertex_semidyn";
    m.flavor = Flavor::SemiDynamical;
    return m;
}

DenseOperator sixvertex_dual_chi(Cplx) {
    // constant antidiagonal solutions of the control's dual relation; any
    // invertible antidiagonal matrix works, this one is deliberately
    // non-symmetric so conjugation tests are non-trivial
    Matrix c(2, 2);
    c << 0.0, 2.0, 0.5, 0.0;
    return DenseOperator({1}, 2, std::move(c));
}

namespace {

Flavor parse_flavor(const std::string& s) {
    if (s == "nondynamical") return Flavor::NonDynamical;
    if (s == "semidynamical") return Flavor::SemiDynamical;
    if (s == "fully_dynamical") return Flavor::FullyDynamical;
    throw std::invalid_argument("unknown flavor: " + s);
}

Boundary parse_boundary(const std::string& s) {
    if (s == "SP") return Boundary::SP;
    if (s == "SNP") return Boundary::SNP;
    throw std::invalid_argument("unknown boundary: " + s);
}

ChiMode parse_chi(const std::string& s) {
    if (s == "identity") return ChiMode::Identity;
    if (s == "diagonal") return ChiMode::Diagonal;
    if (s == "nondiagonal") return ChiMode::NonDiagonal;
    throw std::invalid_argument("unknown chi mode: " + s);
}

Cplx parse_cplx(const nlohmann::json& j) {
    if (j.is_number()) return Cplx(j.get<double>(), 0.0);
    if (j.is_array() && j.size() == 2) return Cplx(j[0].get<double>(), j[1].get<double>());
    throw std::invalid_argument("expected number or [re, im] pair");
}

}  // namespace

ModelSpec load_model_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    static const std::set<std::string> known = {"schema", "name",     "n",   "gamma",
                                                "xi",     "flavor",   "boundary",
                                                "chi",    "shift_sign"};
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key())) throw std::invalid_argument("unknown model field: " + it.key());
    if (j.contains("schema") && j["schema"].get<int>() != 1)
        throw std::invalid_argument("unsupported schema version");

    const std::string name = j.at("name").get<std::string>();
    const int n = j.value("n", 2);
    if (n != 2) throw std::invalid_argument("only n = 2 models are cataloged");
    const Cplx gamma = j.contains("gamma") ? parse_cplx(j["gamma"]) : Cplx(0.2, 0.0);

    ModelSpec m;
    if (name == "gl2") {
        const Cplx xi = j.contains("xi") ? parse_cplx(j["xi"]) : Cplx(1.1, 0.0);
        m = gl2_model(gamma, xi, j.contains("chi") ? parse_chi(j["chi"].get<std::string>())
                                                   : ChiMode::Diagonal);
        if (j.contains("shift_sign") && j["shift_sign"].get<int>() != -1)
            throw std::invalid_argument("the gl2 model requires shift_sign = -1");
    } else if (name == "sixvertex") {
        m = sixvertex_model(gamma, j.contains("boundary")
                                       ? parse_boundary(j["boundary"].get<std::string>())
                                       : Boundary::SP);
        if (j.contains("chi")) m.chi_mode = parse_chi(j["chi"].get<std::string>());
        if (j.contains("xi")) throw std::invalid_argument("the control model has no xi parameter");
    } else if (name == "sixvertex_semidyn") {
        m = sixvertex_semidynamical(gamma);
    } else {
        throw std::invalid_argument("unknown model name: " + name);
    }
    if (j.contains("flavor") && parse_flavor(j["flavor"].get<std::string>()) != m.flavor)
        throw std::invalid_argument("flavor does not match the named model");
    if (j.contains("boundary")) m.boundary = parse_boundary(j["boundary"].get<std::string>());
    return m;
}

ModelSpec load_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open model file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return load_model_json(ss.str());
}

ModelSpec perturbed(const ModelSpec& m, double eps, std::uint64_t seed) {
    Sampler s(seed);
    const int sz = m.n * m.n;  // two-leg operator
    Matrix noise = Matrix::Zero(sz, sz);
    for (int r = 0; r < sz; ++r)
        for (int c = 0; c < sz; ++c) noise(r, c) = Cplx(s.uniform(-1.0, 1.0), s.uniform(-1.0, 1.0));
    noise *= eps / noise.norm();
    const DenseOperator bump({1, 2}, m.n, noise);

    ModelSpec out = m;
    auto base = m.A.eval;
    out.A.eval = [base, bump](std::span<const Cplx> u, const Lambda& l) {
        return base(u, l) + bump;
    };
    out.name = m.name + "_perturbed";
    return out;
}

}  // namespace quadbraid
