// speclaw command line: deterministic spectra, local-law verification
// scans, eigenvalue statistics, and the moment-comparison coefficients,
// driven by a strict JSON config. Exit codes: 0 success, 2 threshold
// failure under --assert, 1 error.
#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include "speclaw/io.hpp"
#include "speclaw/parallel.hpp"

using namespace speclaw;
namespace fs = std::filesystem;

namespace {

struct CliState {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int trials = 0;
    bool trials_set = false;
    bool assert_mode = false;
    int threads = 2;
    json config;
    RunManifest manifest;
    std::chrono::steady_clock::time_point started;
    bool thresholds_failed = false;

    fs::path out(const std::string& name) {
        fs::create_directories(out_dir);
        fs::path p = fs::path(out_dir) / name;
        manifest.outputs.push_back(p.string());
        return p;
    }
};

const std::vector<std::string> kTopLevelKeys{
    "version",  "model",      "wigner", "dist",    "grid",       "thresholds",
    "trials",   "seed",       "threads", "density", "edge_stats", "kcoeffs",
    "wigner_mode", "debug",   "n_vectors", "out_dir"};

json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config: " + path);
    json j = json::parse(in);
    require_keys(j, kTopLevelKeys, "config");
    if (!j.contains("version") || j.at("version").get<int>() != 1)
        throw Error("config: version 1 required");
    return j;
}

double threshold(const CliState& st, const std::string& name, double fallback) {
    if (st.config.contains("thresholds") && st.config.at("thresholds").contains(name))
        return st.config.at("thresholds").at(name).get<double>();
    return fallback;
}

Thresholds model_thresholds(const CliState& st) {
    Thresholds t;
    t.tau = threshold(st, "tau", t.tau);
    t.tau_prime = threshold(st, "tau_prime", t.tau_prime);
    t.bulk_density_floor = threshold(st, "bulk_density_floor", t.bulk_density_floor);
    return t;
}

PopulationModel config_model(const CliState& st) {
    if (!st.config.contains("model")) throw Error("config: \"model\" section required");
    return model_from_json(st.config.at("model"));
}

EntryDistribution config_dist(const CliState& st) {
    if (!st.config.contains("dist")) return EntryDistribution::gaussian();
    const json& d = st.config.at("dist");
    require_keys(d, {"kind", "p", "complex", "moments"}, "dist");
    const Symmetry sym = (d.value("complex", false)) ? Symmetry::complex_hermitian : Symmetry::real;
    const std::string kind = d.value("kind", "gaussian");
    if (kind == "gaussian") return EntryDistribution::gaussian(sym);
    if (kind == "rademacher") return EntryDistribution::rademacher(sym);
    if (kind == "two_point") return EntryDistribution::two_point(d.value("p", 0.5), sym);
    if (kind == "user_moments")
        return EntryDistribution::from_moments(d.at("moments").get<std::vector<double>>(), sym);
    throw Error("dist: unknown kind \"" + kind + "\"");
}

std::vector<Complex> config_grid(const CliState& st, const DensityProfile& profile, int N) {
    double eta_floor_exp = 0.8;
    std::string kind = "bulk";
    int index = 0, n_energies = 10;
    double delta = 0.1;
    if (st.config.contains("grid")) {
        const json& g = st.config.at("grid");
        require_keys(g, {"kind", "index", "n_energies", "eta_floor_exponent", "delta"}, "grid");
        kind = g.value("kind", kind);
        index = g.value("index", index);
        n_energies = g.value("n_energies", n_energies);
        eta_floor_exp = g.value("eta_floor_exponent", eta_floor_exp);
        delta = g.value("delta", delta);
    }
    const Thresholds t = model_thresholds(st);
    DomainKind dk = DomainKind::bulk;
    if (kind == "edge")
        dk = DomainKind::edge;
    else if (kind == "outside")
        dk = DomainKind::outside;
    else if (kind == "full")
        dk = DomainKind::full;
    else if (kind != "bulk")
        throw Error("grid: unknown kind \"" + kind + "\"");
    const auto domain = make_domain(dk, t.tau, t.tau_prime, N, &profile, index);
    return domain.grid(n_energies, std::pow(static_cast<double>(N), -eta_floor_exp), delta);
}

Eigen::MatrixXd config_wigner_a(const CliState& st, int& n_out) {
    if (!st.config.contains("wigner")) throw Error("config: \"wigner\" section required");
    const json& w = st.config.at("wigner");
    require_keys(w, {"n", "a"}, "wigner");
    const int n = w.at("n").get<int>();
    n_out = n;
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    bool rotate = false;
    std::uint64_t rotate_seed = 1;
    if (w.contains("a")) {
        const json& a = w.at("a");
        require_keys(a, {"kind", "value", "values", "rotate", "rotate_seed"}, "wigner.a");
        const std::string kind = a.value("kind", "zero");
        if (kind == "two_atom") {
            const double v = a.value("value", 1.0);
            for (int i = 0; i < n; ++i) diag[i] = (i < n / 2) ? -v : v;
        } else if (kind == "diagonal") {
            const auto vals = a.at("values").get<std::vector<double>>();
            for (int i = 0; i < n; ++i) diag[i] = vals[i % vals.size()];
        } else if (kind != "zero") {
            throw Error("wigner.a: unknown kind \"" + kind + "\"");
        }
        rotate = a.value("rotate", false);
        rotate_seed = a.value("rotate_seed", 1);
    }
    Eigen::MatrixXd A = diag.asDiagonal();
    if (rotate) {
        const CounterRng rng(rotate_seed, 0x726f74ULL);
        Eigen::MatrixXd g(n, n);
        std::uint64_t c = 0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) g(i, j) = rng.gaussian(c++);
        const Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
        const Eigen::MatrixXd Q = qr.householderQ();
        A = Q * A * Q.transpose();
        A = 0.5 * (A + A.transpose());  // symmetrize away rounding
    }
    return A;
}

void finalize(CliState& st) {
    st.manifest.command += st.thresholds_failed ? " [thresholds failed]" : "";
    st.manifest.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - st.started).count();
    st.manifest.config = st.config;
    st.manifest.seed = st.seed;
    st.manifest.trials = st.trials;
    if (st.config.contains("thresholds")) st.manifest.thresholds = st.config.at("thresholds");
    write_manifest(fs::path(st.out_dir) / "manifest.json", st.manifest);
}

// ---------------------------------------------------------------------------

int cmd_density(CliState& st) {
    const auto model = config_model(st);
    const DensityProfile profile(model, model_thresholds(st));
    int points = 400;
    if (st.config.contains("density")) {
        require_keys(st.config.at("density"), {"points"}, "density");
        points = st.config.at("density").value("points", points);
    }
    write_density_csv(st.out("density.csv"), profile, points);
    {
        std::ofstream out(st.out("profile.json"));
        out << profile_to_json(profile).dump(2) << "\n";
    }
    Curve c{"rho", {}};
    const auto& comps = profile.components();
    const double lo = std::max(1e-4, comps.back().lower - 0.1), hi = comps.front().upper + 0.1;
    for (int i = 0; i < points; ++i) {
        const double E = lo + (hi - lo) * i / (points - 1);
        c.points.emplace_back(E, density_at(E, profile));
    }
    write_svg_curves(st.out("density.svg"), "asymptotic density", {c});
    std::cout << "components: " << profile.n_components() << "\n";
    for (double a : profile.edges()) std::cout << "edge " << a << "\n";
    return 0;
}

int cmd_edges(CliState& st) {
    const auto model = config_model(st);
    const Thresholds t = model_thresholds(st);
    const DensityProfile profile(model, t);
    const auto report = check_regularity(profile, t.tau, t.tau_prime);
    json j = profile_to_json(profile);
    j["regular_edges"] = json::array();
    for (std::size_t k = 0; k < report.edges.size(); ++k) {
        j["regular_edges"].push_back(report.edges[k].regular);
        std::cout << profile.edges()[k] << (report.edges[k].regular ? "" : "  (not regular)")
                  << "\n";
    }
    std::ofstream out(st.out("edges.json"));
    out << j.dump(2) << "\n";
    return 0;
}

int cmd_gamma(CliState& st) {
    const auto model = config_model(st);
    if (!model.dims()) throw Error("gamma: model dims required");
    const DensityProfile profile(model, model_thresholds(st));
    const auto gamma = classical_locations(profile, model.dims()->N);
    write_gamma_csv(st.out("gamma.csv"), gamma);
    std::cout << "gamma count: " << gamma.size() << "\n";
    return 0;
}

int cmd_verify_local_law(CliState& st) {
    const auto model = config_model(st);
    if (!model.dims()) throw Error("verify-local-law: model dims required");
    const int M = model.dims()->M, N = model.dims()->N;
    const auto dist = config_dist(st);
    const DensityProfile profile(model, model_thresholds(st));
    const auto grid = config_grid(st, profile, N);
    auto sigma = std::make_shared<HermitianSpectrum>(HermitianSpectrum::from_model(model));

    ScanOptions options;
    options.seed = st.seed;
    if (st.config.contains("n_vectors")) options.n_vectors = st.config.at("n_vectors").get<int>();
    if (st.config.contains("debug")) {
        require_keys(st.config.at("debug"), {"corrupt_m"}, "debug");
        options.m_corruption = st.config.at("debug").value("corrupt_m", 0.0);
    }

    const int trials = std::max(1, st.trials);
    auto scans = parallel_trials<ErrorScan>(trials, st.threads, [&](int trial) {
        const auto x = sample_X(dist, M, N, st.seed, trial);
        const ResolventFactorization fact(x.real, sigma);
        ScanOptions opt = options;
        opt.seed = st.seed + trial;
        return anisotropic_scan(fact, model, grid, opt);
    });

    ErrorScan merged;
    for (const auto& s : scans) {
        merged.records.insert(merged.records.end(), s.records.begin(), s.records.end());
        merged.notes.insert(merged.notes.end(), s.notes.begin(), s.notes.end());
    }
    write_scan_csv(st.out("local_law_scan.csv"), merged);

    // error and reference-scale curves along the record sequence
    Curve err{"max_aniso", {}}, psi{"psi", {}};
    for (std::size_t i = 0; i < merged.records.size(); ++i) {
        err.points.emplace_back(static_cast<double>(i), merged.records[i].max_aniso);
        psi.points.emplace_back(static_cast<double>(i), merged.records[i].psi);
    }
    write_svg_curves(st.out("local_law_scan.svg"), "anisotropic error vs psi", {err, psi});

    const double aniso_limit = threshold(st, "aniso_ratio", 10.0);
    const double avg_limit = threshold(st, "avg_ratio", 20.0);
    const double worst_aniso = merged.max_aniso_ratio();
    const double worst_avg = merged.max_avg_ratio();
    std::cout << "grid points: " << grid.size() << ", trials: " << trials << "\n";
    std::cout << "max anisotropic ratio: " << worst_aniso << " (limit " << aniso_limit << ")\n";
    std::cout << "max averaged ratio:    " << worst_avg << " (limit " << avg_limit << ")\n";
    for (const auto& note : merged.notes) std::cout << "note: " << note << "\n";
    st.thresholds_failed = worst_aniso > aniso_limit || worst_avg > avg_limit;
    return 0;
}

int cmd_rigidity(CliState& st) {
    const auto model = config_model(st);
    if (!model.dims()) throw Error("rigidity: model dims required");
    const int N = model.dims()->N;
    const auto dist = config_dist(st);
    const DensityProfile profile(model, model_thresholds(st));
    const auto counts = bulk_counts(profile).counts;
    const auto gamma = classical_locations(profile, N);
    const double tau = model_thresholds(st).tau;

    const int trials = std::max(1, st.trials);
    auto profiles = parallel_trials<RigidityProfile>(trials, st.threads, [&](int trial) {
        const Eigen::VectorXd lam = covariance_eigenvalues(model, dist, st.seed, trial);
        const auto labeled = component_eigenvalues(lam, profile, counts);
        return rigidity_profile(labeled, gamma, counts, N, tau);
    });

    RigidityProfile pooled;
    for (const auto& p : profiles)
        pooled.entries.insert(pooled.entries.end(), p.entries.begin(), p.entries.end());

    auto out = st.out("rigidity.csv");
    {
        std::ofstream os(out);
        os << "component,index,lambda,gamma,deviation,scale,ratio\n";
        for (const auto& e : pooled.entries)
            os << e.component << "," << e.index << "," << e.lambda << "," << e.gamma << ","
               << e.deviation << "," << e.scale << "," << e.ratio << "\n";
    }
    const double p99 = pooled.percentile(0.99);
    const double limit = threshold(st, "rigidity_p99", 15.0);
    std::cout << "entries: " << pooled.entries.size() << ", p99 ratio: " << p99 << " (limit "
              << limit << ")\n";
    st.thresholds_failed = p99 > limit;
    return 0;
}

int cmd_gap_check(CliState& st) {
    const auto model = config_model(st);
    const auto dist = config_dist(st);
    const DensityProfile profile(model, model_thresholds(st));
    const double epsilon = threshold(st, "gap_epsilon", 0.2);
    const double tau = model_thresholds(st).tau;

    const int trials = std::max(1, st.trials);
    auto counts = parallel_trials<int>(trials, st.threads, [&](int trial) {
        const Eigen::VectorXd lam = covariance_eigenvalues(model, dist, st.seed, trial);
        return support_gap_check(lam, profile, epsilon, tau).violations;
    });
    int total = 0;
    for (int c : counts) total += c;
    std::cout << "violations: " << total << " over " << trials << " trials\n";
    st.thresholds_failed = total > 0;
    return 0;
}

int cmd_edge_stats(CliState& st) {
    const auto model = config_model(st);
    const auto dist = config_dist(st);
    const DensityProfile profile(model, model_thresholds(st));

    int edge = 0, depth = 1, ref_n = 500, ref_trials = 0, beta = 1;
    if (st.config.contains("edge_stats")) {
        const json& e = st.config.at("edge_stats");
        require_keys(e, {"edge", "depth", "reference_n", "reference_trials", "reference_beta"},
                     "edge_stats");
        edge = e.value("edge", edge);
        depth = e.value("depth", depth);
        ref_n = e.value("reference_n", ref_n);
        ref_trials = e.value("reference_trials", ref_trials);
        beta = e.value("reference_beta", beta);
    }
    const int trials = std::max(1, st.trials);
    if (ref_trials == 0) ref_trials = trials;

    const auto samples =
        edge_rescaled_samples(profile, edge, depth, trials, dist, st.seed, st.threads);
    const auto reference =
        reference_edge_samples(beta, depth, ref_n, ref_trials, st.seed + 7, st.threads);
    write_edge_samples_csv(st.out("edge_samples.csv"), samples);
    write_edge_samples_csv(st.out("edge_reference.csv"), reference);

    const double ks = ks_distance(samples.coordinate(0), reference.coordinate(0));
    const double limit = threshold(st, "ks", 0.15);
    std::cout << "edge " << edge << " (a = " << samples.edge << ", curvature "
              << samples.curvature << ")\n";
    std::cout << "ks distance to the beta=" << beta << " reference: " << ks << " (limit "
              << limit << ")\n";
    st.thresholds_failed = ks > limit;
    return 0;
}

int cmd_wigner(CliState& st) {
    int n = 0;
    const Eigen::MatrixXd A = config_wigner_a(st, n);
    const std::string mode = st.config.value("wigner_mode", "density");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
    std::vector<double> a_spec(es.eigenvalues().data(), es.eigenvalues().data() + n);
    const auto [l_minus, l_plus] = wigner_support(a_spec);
    std::cout << "support: [" << l_minus << ", " << l_plus << "]\n";

    if (mode == "density") {
        auto out = st.out("wigner_density.csv");
        std::ofstream os(out);
        os << "E,rho\n";
        const double lo = l_minus - 0.3, hi = l_plus + 0.3;
        for (int i = 0; i < 300; ++i) {
            const double E = lo + (hi - lo) * i / 299.0;
            const StieltjesValue v = solve_wigner_m(Complex(E, 0.0), a_spec);
            os << E << "," << std::max(0.0, v.m.imag()) / std::numbers::pi << "\n";
        }
        return 0;
    }
    if (mode == "local-law") {
        const auto dist = config_dist(st);
        auto a_spectrum = std::make_shared<HermitianSpectrum>(HermitianSpectrum::from_dense(A));
        // bulk ladder between the support edges
        std::vector<Complex> grid;
        const double tau_prime = threshold(st, "tau_prime", 0.1);
        const int n_energies = 8;
        for (int j = 0; j < n_energies; ++j) {
            const double E = (l_minus + tau_prime) +
                             (l_plus - l_minus - 2 * tau_prime) * (j + 0.5) / n_energies;
            for (double eta = 1.0; eta > std::pow(n, -0.8); eta *= std::pow(n, -0.1))
                grid.emplace_back(E, eta);
        }
        ScanOptions options;
        options.seed = st.seed;
        if (st.config.contains("debug"))
            options.m_corruption = st.config.at("debug").value("corrupt_m", 0.0);
        const int trials = std::max(1, st.trials);
        auto scans = parallel_trials<ErrorScan>(trials, st.threads, [&](int trial) {
            const auto sample = sample_deformed_wigner(dist, A, st.seed, trial);
            const WignerResolvent res(sample.w_plus_a());
            ScanOptions opt = options;
            opt.seed = st.seed + trial;
            return wigner_scan(res, a_spectrum, grid, opt);
        });
        ErrorScan merged;
        for (const auto& s : scans)
            merged.records.insert(merged.records.end(), s.records.begin(), s.records.end());
        write_scan_csv(st.out("wigner_scan.csv"), merged);
        const double aniso_limit = threshold(st, "aniso_ratio", 10.0);
        const double avg_limit = threshold(st, "avg_ratio", 20.0);
        std::cout << "max anisotropic ratio: " << merged.max_aniso_ratio() << " (limit "
                  << aniso_limit << ")\n";
        std::cout << "max averaged ratio:    " << merged.max_avg_ratio() << " (limit "
                  << avg_limit << ")\n";
        st.thresholds_failed =
            merged.max_aniso_ratio() > aniso_limit || merged.max_avg_ratio() > avg_limit;
        return 0;
    }
    if (mode == "edge-stats") {
        const auto dist = config_dist(st);
        const int trials = std::max(1, st.trials);
        const auto samples = wigner_edge_samples(A, 1, trials, dist, st.seed, st.threads);
        const Eigen::MatrixXd D = Eigen::VectorXd::Map(a_spec.data(), n).asDiagonal();
        const auto reference =
            wigner_edge_samples(D, 1, trials, EntryDistribution::gaussian(), st.seed + 7,
                                st.threads);
        write_edge_samples_csv(st.out("wigner_edge_samples.csv"), samples);
        write_edge_samples_csv(st.out("wigner_edge_reference.csv"), reference);
        const double ks = ks_distance(samples.coordinate(0), reference.coordinate(0));
        const double limit = threshold(st, "ks", 0.15);
        std::cout << "ks distance to the gaussian diagonal reference: " << ks << " (limit "
                  << limit << ")\n";
        st.thresholds_failed = ks > limit;
        return 0;
    }
    throw Error("wigner: unknown mode \"" + mode + "\"");
}

int cmd_kcoeffs(CliState& st) {
    if (!st.config.contains("kcoeffs")) throw Error("config: \"kcoeffs\" section required");
    const json& k = st.config.at("kcoeffs");
    require_keys(k, {"moments0", "moments1", "theta", "n_max", "expect_zero_up_to"}, "kcoeffs");
    const auto m0 = k.at("moments0").get<std::vector<double>>();
    const auto m1 = k.at("moments1").get<std::vector<double>>();
    const double theta = k.value("theta", 0.5);
    const int n_max = k.value("n_max", static_cast<int>(std::min(m0.size(), m1.size())));
    const auto K = k_coefficients(m0, m1, theta, n_max);

    json out;
    out["K"] = K;
    {
        std::ofstream os(st.out("kcoeffs.json"));
        os << out.dump(2) << "\n";
    }
    for (int i = 0; i < n_max; ++i) std::cout << "K_" << (i + 1) << " = " << K[i] << "\n";

    const int expect_zero = k.value("expect_zero_up_to", 0);
    for (int i = 0; i < expect_zero && i < n_max; ++i)
        if (std::abs(K[i]) > 1e-12) st.thresholds_failed = true;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"deterministic spectra and local-law experiments for sample covariance "
                 "and deformed Wigner ensembles"};
    app.require_subcommand(1);

    CliState st;
    st.started = std::chrono::steady_clock::now();
    if (const char* env = std::getenv("SPECLAW_OUT")) st.out_dir = env;
    if (st.out_dir.empty()) st.out_dir = "speclaw_out";

    app.add_option("--config", st.config_path, "JSON config path")->required();
    app.add_option("--out", st.out_dir, "output directory");
    auto* seed_opt = app.add_option("--seed", st.seed, "master seed override");
    auto* trials_opt = app.add_option("--trials", st.trials, "trial count override");
    app.add_option("--threads", st.threads, "worker pool size");
    app.add_flag("--assert", st.assert_mode, "exit 2 when a configured threshold fails");

    std::map<std::string, int (*)(CliState&)> commands{
        {"density", cmd_density},
        {"edges", cmd_edges},
        {"gamma", cmd_gamma},
        {"verify-local-law", cmd_verify_local_law},
        {"rigidity", cmd_rigidity},
        {"gap-check", cmd_gap_check},
        {"edge-stats", cmd_edge_stats},
        {"wigner", cmd_wigner},
        {"kcoeffs", cmd_kcoeffs},
    };
    for (const auto& [name, fn] : commands) app.add_subcommand(name)->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        st.config = load_config(st.config_path);
        if (!seed_opt->count() && st.config.contains("seed"))
            st.seed = st.config.at("seed").get<std::uint64_t>();
        if (!trials_opt->count() && st.config.contains("trials"))
            st.trials = st.config.at("trials").get<int>();
        if (st.config.contains("threads")) st.threads = st.config.at("threads").get<int>();
        if (st.config.contains("out_dir") && st.out_dir == "speclaw_out")
            st.out_dir = st.config.at("out_dir").get<std::string>();

        const std::string sub = app.get_subcommands().front()->get_name();
        st.manifest.command = sub;
        const int rc = commands.at(sub)(st);
        finalize(st);
        if (rc != 0) return rc;
        if (st.thresholds_failed && st.assert_mode) return 2;
        return 0;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    }
}
