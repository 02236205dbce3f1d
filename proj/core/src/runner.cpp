#include "quadbraid/runner.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace quadbraid {

namespace {

std::string timestamp_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

ModelSpec load_configured_model(const RunConfig& cfg) {
    ModelSpec m = cfg.model_inline.empty() ? load_model_file(cfg.model_path)
                                           : load_model_json(cfg.model_inline);
    if (cfg.gamma_override || cfg.xi_override) {
        const Cplx gamma = cfg.gamma_override ? Cplx(*cfg.gamma_override, 0.0) : m.gamma;
        const Cplx xi = cfg.xi_override ? Cplx(*cfg.xi_override, 0.0) : m.xi;
        if (m.name == "gl2")
            m = gl2_model(gamma, xi, m.chi_mode);
        else if (m.name == "sixvertex") {
            const Boundary b = m.boundary;
            m = sixvertex_model(gamma, b);
        } else if (m.name == "sixvertex_semidyn")
            m = sixvertex_semidynamical(gamma);
    }
    if (cfg.perturb > 0.0) m = perturbed(m, cfg.perturb, cfg.seed + 1);
    return m;
}

nlohmann::ordered_json header(const RunConfig& cfg, const ModelSpec& m) {
    nlohmann::ordered_json j;
    j["schema"] = 1;
    j["command"] = cfg.command;
    j["model"] = m.name;
    j["flavor"] = to_string(m.flavor);
    j["boundary"] = to_string(m.boundary);
    j["seed"] = cfg.seed;
    if (cfg.emit_timestamp) j["generated_at"] = timestamp_now();
    return j;
}

RunResult run_verify(const RunConfig& cfg) {
    RunResult out;
    const ModelSpec m = load_configured_model(cfg);
    VerifyOptions opt;
    opt.samples = cfg.samples;
    opt.tolerance = cfg.tolerance > 0 ? cfg.tolerance : 1e-9;
    opt.seed = cfg.seed;

    const auto reports = verify_suite(m, opt);
    bool all = true;
    double worst = 0.0;
    nlohmann::ordered_json j = header(cfg, m);
    j["tolerance"] = opt.tolerance;
    j["samples"] = opt.samples;
    j["identities"] = nlohmann::ordered_json::array();
    for (const auto& r : reports) {
        j["identities"].push_back(to_json(r));
        all = all && r.pass;
        worst = std::max(worst, r.max_residual);
    }
    j["all_pass"] = all;
    out.report = std::move(j);
    out.exit_code = all ? 0 : 1;
    std::ostringstream s;
    s << "verify " << m.name << ": " << (all ? "PASS" : "FAIL") << " (" << reports.size()
      << " identities, max residual " << fmt_g(worst) << ")";
    out.summary = s.str();
    return out;
}

RunResult run_commute(const RunConfig& cfg) {
    RunResult out;
    const ModelSpec m = load_configured_model(cfg);
    ChainSpec chain = make_chain(m, cfg.N);
    const double tol = cfg.tolerance > 0 ? cfg.tolerance : 1e-8;

    Sampler s(cfg.seed);
    std::vector<Cplx> us, vs;
    for (int i = 0; i < cfg.u_samples; ++i) us.push_back(s.spectral(m.u_guard));
    for (int i = 0; i < cfg.v_samples; ++i) vs.push_back(s.spectral(m.u_guard));
    const auto lambdas = sample_lambdas(m, cfg.lambda_samples, cfg.seed + 2);

    CommutationScan scan;
    std::string note;
    if (m.flavor == Flavor::SemiDynamical) {
        // lambda-independent semidynamical data commutes on the restriction
        // to lambda-constant functions (where the chain coincides with the
        // non-dynamical one); the scan compares the restricted commutators
        note = "semidynamical chain: commutators restricted to lambda-constants";
        for (const Cplx& u : us) {
            const TransferMatrix tu = transfer(chain, u);
            for (const Cplx& v : vs) {
                const TransferMatrix tv = transfer(chain, v);
                const DiffOp comm = diffop_commutator(tu.op, tv.op);
                double res = 0.0;
                for (const Lambda& l : lambdas) res = std::max(res, comm.collapse(l).norm());
                scan.grid.push_back({u, v, res});
                scan.max_residual = std::max(scan.max_residual, res);
                ++scan.points;
            }
        }
    } else {
        scan = commutation_scan(chain, us, vs, lambdas);
    }
    nlohmann::ordered_json j = header(cfg, m);
    j["N"] = cfg.N;
    j["tolerance"] = tol;
    j["grid"] = nlohmann::ordered_json::array();
    for (const auto& e : scan.grid) {
        nlohmann::ordered_json g;
        g["u"] = {e.u.real(), e.u.imag()};
        g["v"] = {e.v.real(), e.v.imag()};
        g["residual"] = e.residual;
        j["grid"].push_back(g);
    }
    j["points"] = scan.points;
    j["skipped"] = scan.skipped;
    j["max_residual"] = scan.max_residual;
    if (!note.empty()) j["note"] = note;
    const bool pass = scan.max_residual < tol && scan.points > 0;
    j["pass"] = pass;
    out.report = std::move(j);
    out.exit_code = pass ? 0 : 1;
    std::ostringstream str;
    str << "commute " << m.name << " N=" << cfg.N << ": " << (pass ? "PASS" : "FAIL")
        << " (max residual " << fmt_g(scan.max_residual) << " over " << scan.points << " points)";
    out.summary = str.str();
    return out;
}

nlohmann::ordered_json term_json(const HamiltonianTerm& t) {
    nlohmann::ordered_json j;
    j["label"] = t.label;
    j["window"] = t.window;
    j["tail"] = t.tail;
    j["class"] = t.locality_class;
    if (t.closed_residual >= 0) j["closed_residual"] = t.closed_residual;
    return j;
}

RunResult run_hamiltonian(const RunConfig& cfg) {
    RunResult out;
    const ModelSpec m = load_configured_model(cfg);
    ChainSpec chain = make_chain(m, cfg.N);
    const double tol = cfg.tolerance > 0 ? cfg.tolerance : 1e-6;
    FdOptions fd;
    fd.step = cfg.fd_step;
    fd.tolerance = tol;

    const auto lambdas = sample_lambdas(m, std::max(1, cfg.lambda_samples), cfg.seed + 3);
    const HamiltonianReport rep = closed_form_H(chain, fd, lambdas);
    const auto numeric_terms = log_derivative_terms(chain, fd);
    const LocalityReport loc = locality_report(numeric_terms, chain.leg_count(), 2, lambdas);

    nlohmann::ordered_json j = header(cfg, m);
    j["N"] = cfg.N;
    j["tolerance"] = tol;
    j["closed_vs_numeric"] = rep.residual_vs_numeric;
    j["left_right_agreement"] = rep.left_right_agreement;
    j["fd_convergence"] = rep.fd_convergence;
    j["closed_terms"] = nlohmann::ordered_json::array();
    for (const auto& t : rep.terms) j["closed_terms"].push_back(term_json(t));
    j["locality"] = nlohmann::ordered_json::array();
    for (const auto& t : loc.terms) j["locality"].push_back(term_json(t));
    j["locality_pass"] = loc.pass;
    if (!rep.note.empty()) j["note"] = rep.note;

    const bool pass = loc.pass && rep.residual_vs_numeric < tol;
    j["pass"] = pass;
    out.report = std::move(j);
    out.exit_code = pass ? 0 : 1;
    std::ostringstream s;
    s << "hamiltonian " << m.name << " N=" << cfg.N << ": " << (pass ? "PASS" : "FAIL")
      << " (closed-form residual " << fmt_g(rep.residual_vs_numeric) << ", locality "
      << (loc.pass ? "ok" : "violated") << ")";
    out.summary = s.str();
    return out;
}

RunResult run_spectrum(const RunConfig& cfg) {
    RunResult out;
    const ModelSpec m = load_configured_model(cfg);
    ChainSpec chain = make_chain(m, cfg.N);
    FdOptions fd;
    fd.step = cfg.fd_step;

    const auto lambdas = sample_lambdas(m, std::max(1, cfg.lambda_samples), cfg.seed + 4);
    Sampler s(cfg.seed + 5);
    const Cplx probe_v = s.spectral(m.u_guard);
    const DiffOp H = log_derivative(chain, fd);

    std::ostringstream csv;
    csv << "re,im,index,lambda1,lambda2\n";
    nlohmann::ordered_json j = header(cfg, m);
    j["N"] = cfg.N;
    j["points"] = nlohmann::ordered_json::array();
    double worst_comm = 0.0;
    for (const Lambda& l : lambdas) {
        const SpectrumResult sp = spectrum(H, l, chain, probe_v);
        worst_comm = std::max(worst_comm, sp.probe_commutation);
        nlohmann::ordered_json p;
        p["lambda"] = {l(0).real(), l(0).imag(), l(1).real(), l(1).imag()};
        p["probe_commutation"] = sp.probe_commutation;
        p["eigenvalues"] = nlohmann::ordered_json::array();
        for (size_t i = 0; i < sp.eigenvalues.size(); ++i) {
            const Cplx& e = sp.eigenvalues[i];
            p["eigenvalues"].push_back({e.real(), e.imag()});
            char line[160];
            std::snprintf(line, sizeof line, "%.17g,%.17g,%zu,%.17g,%.17g\n", e.real(), e.imag(), i,
                          l(0).real(), l(1).real());
            csv << line;
        }
        j["points"].push_back(p);
    }
    j["probe_commutation_max"] = worst_comm;
    out.report = std::move(j);
    out.csv = csv.str();
    out.exit_code = 0;
    std::ostringstream str;
    str << "spectrum " << m.name << " N=" << cfg.N << ": " << lambdas.size()
        << " lambda points, probe commutation " << fmt_g(worst_comm);
    out.summary = str.str();
    return out;
}

RunResult run_transfer(const RunConfig& cfg) {
    RunResult out;
    const ModelSpec m = load_configured_model(cfg);
    ChainSpec chain = make_chain(m, cfg.N);

    Sampler s(cfg.seed);
    std::vector<Cplx> us;
    for (int i = 0; i < cfg.u_samples; ++i) us.push_back(s.spectral(m.u_guard));
    const auto lambdas = sample_lambdas(m, std::max(1, cfg.lambda_samples), cfg.seed + 7);

    nlohmann::ordered_json j = header(cfg, m);
    j["N"] = cfg.N;
    j["points"] = nlohmann::ordered_json::array();
    for (const Cplx& u : us) {
        const TransferMatrix t = transfer(chain, u);
        for (const Lambda& l : lambdas) {
            nlohmann::ordered_json p;
            p["u"] = {u.real(), u.imag()};
            p["lambda"] = nlohmann::ordered_json::array();
            for (int i = 0; i < l.size(); ++i) p["lambda"].push_back({l(i).real(), l(i).imag()});
            // coefficients keyed by the exact shift vector
            nlohmann::ordered_json coeffs;
            for (const auto& [shift, coeff] : t.op.evaluate(l)) {
                std::string key;
                for (size_t i = 0; i < shift.size(); ++i)
                    key += (i ? "," : "") + std::to_string(shift[i]);
                nlohmann::ordered_json mat = nlohmann::ordered_json::array();
                for (int r = 0; r < coeff.size(); ++r) {
                    nlohmann::ordered_json row = nlohmann::ordered_json::array();
                    for (int c = 0; c < coeff.size(); ++c)
                        row.push_back({coeff.mat()(r, c).real(), coeff.mat()(r, c).imag()});
                    mat.push_back(row);
                }
                coeffs[key] = mat;
            }
            p["coefficients"] = coeffs;
            j["points"].push_back(p);
        }
    }
    out.report = std::move(j);
    out.exit_code = 0;
    std::ostringstream str;
    str << "transfer " << m.name << " N=" << cfg.N << ": " << us.size() * lambdas.size()
        << " dumped evaluations";
    out.summary = str.str();
    return out;
}

RunResult run_example(const RunConfig& cfg) {
    RunResult out;
    const double gamma = cfg.gamma_override.value_or(0.2);
    const double xi = cfg.xi_override.value_or(1.1);
    const double tol = cfg.tolerance > 0 ? cfg.tolerance : 1e-6;
    FdOptions fd;
    fd.step = cfg.fd_step;
    fd.tolerance = tol;

    const ModelSpec m = gl2_model(gamma, xi, ChiMode::Diagonal);
    const auto lambdas = sample_lambdas(m, std::max(1, cfg.lambda_samples), cfg.seed + 6);
    const HamiltonianReport rep = gl2_example_H(cfg.N, gamma, xi, fd, lambdas);

    nlohmann::ordered_json j = header(cfg, m);
    j["N"] = cfg.N;
    j["gamma"] = gamma;
    j["xi"] = xi;
    j["tolerance"] = tol;
    j["bulk_residual"] = rep.bulk_residual;
    j["boundary_residual"] = rep.boundary_residual;
    j["left_right_agreement"] = rep.left_right_agreement;
    j["terms"] = nlohmann::ordered_json::array();
    for (const auto& t : rep.terms) j["terms"].push_back(term_json(t));
    const bool pass = rep.bulk_residual >= 0 && rep.bulk_residual < tol;
    j["pass"] = pass;
    j["boundary_pass"] = rep.boundary_residual >= 0 && rep.boundary_residual < tol;
    if (!rep.note.empty()) j["note"] = rep.note;
    out.report = std::move(j);
    out.exit_code = pass ? 0 : 1;
    std::ostringstream s;
    s << "example gl2 N=" << cfg.N << ": bulk residual " << fmt_g(rep.bulk_residual) << " ("
      << (pass ? "PASS" : "FAIL") << " at " << fmt_g(tol) << "), boundary residual "
      << fmt_g(rep.boundary_residual);
    out.summary = s.str();
    return out;
}

}  // namespace

RunResult run_command(const RunConfig& cfg) {
    if (cfg.command == "verify") return run_verify(cfg);
    if (cfg.command == "commute") return run_commute(cfg);
    if (cfg.command == "hamiltonian") return run_hamiltonian(cfg);
    if (cfg.command == "spectrum") return run_spectrum(cfg);
    if (cfg.command == "transfer") return run_transfer(cfg);
    if (cfg.command == "example") return run_example(cfg);
    throw std::invalid_argument("unknown command: " + cfg.command);
}

void write_result(const RunConfig& cfg, const RunResult& result) {
    if (cfg.output_path.empty()) return;
    std::ofstream f(cfg.output_path);
    if (!f) throw std::runtime_error("cannot open output file: " + cfg.output_path);
    if (cfg.format == "csv" && !result.csv.empty())
        f << result.csv;
    else
        f << result.report.dump(2) << "\n";
}

}  // namespace quadbraid
