// Command-line front end: simulation, verification experiments, kernel
// tabulation, and text scanning, all with explicit seeds and config echo.
//
// Exit codes: 0 success / verification pass, 1 scientific fail or numeric
// non-convergence, 2 usage error, 3 I/O failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "urns/kernels.hpp"
#include "urns/montecarlo.hpp"
#include "urns/occupancy.hpp"
#include "urns/textscan.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void write_output(const std::string& path, const std::string& payload) {
    if (path.empty() || path == "-") {
        std::cout << payload;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open output file: " + path);
    out << payload;
    if (!out) throw IoError("write failed: " + path);
}

std::string read_input(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open input file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

// quotes a CSV field when it contains the separator
std::string csv_field(const std::string& s) {
    if (s.find(',') == std::string::npos && s.find('"') == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

const char* method_name(urns::KernelMethod m) {
    switch (m) {
        case urns::KernelMethod::closed_form: return "closed_form";
        case urns::KernelMethod::quadrature: return "quadrature";
        case urns::KernelMethod::inclusion_exclusion: return "inclusion_exclusion";
    }
    return "?";
}

std::vector<urns::QuerySpec> build_queries(const std::vector<std::string>& sets,
                                           const std::vector<std::int64_t>& ks,
                                           bool exact) {
    std::vector<urns::QuerySpec> out;
    for (const auto& sexpr : sets) {
        auto set = urns::IntervalSet::parse(sexpr);
        for (auto k : ks) {
            if (k < 1) throw std::invalid_argument("k must be >= 1");
            urns::QuerySpec spec;
            spec.name = sexpr + "|k=" + std::to_string(k) + (exact ? "e" : "");
            spec.query = {set, k,
                          exact ? urns::CountMode::exact : urns::CountMode::at_least};
            out.push_back(spec);
        }
    }
    return out;
}

std::string report_payload(const urns::Report& rep, const std::string& format) {
    if (format == "json") return rep.to_json().dump(2) + "\n";
    if (format == "csv") {
        std::string head;
        for (const auto& [k, v] : rep.config) head += "# " + k + " = " + v + "\n";
        return head + rep.rows_csv();
    }
    return rep.to_text();
}

struct CommonOpts {
    double theta = 0.5;
    double scale = 100000;
    std::int64_t reps = 2000;
    std::uint64_t seed = 0;
    int workers = 1;
    double zmax = 4.0;
    std::int64_t table_cutoff = 1000000;
    std::string format = "text";
    std::string out;

    urns::ExperimentConfig to_config() const {
        urns::ExperimentConfig cfg;
        cfg.theta = theta;
        cfg.scale = scale;
        cfg.replications = reps;
        cfg.master_seed = seed;
        cfg.workers = workers;
        cfg.z_threshold = zmax;
        cfg.table_cutoff = table_cutoff;
        return cfg;
    }
};

void add_common(CLI::App* cmd, CommonOpts& o, bool with_reps = true) {
    cmd->add_option("--theta", o.theta, "regular-variation index in (0,1)")->required();
    cmd->add_option("--seed", o.seed, "master seed (required for reproducibility)")
        ->required();
    if (with_reps) cmd->add_option("--reps", o.reps, "number of replications");
    cmd->add_option("--workers", o.workers, "worker threads (output-invariant)");
    cmd->add_option("--format", o.format, "text|json|csv")
        ->check(CLI::IsMember({"text", "json", "csv"}));
    cmd->add_option("--out", o.out, "output file (default stdout)");
    cmd->add_option("--table-cutoff", o.table_cutoff, "inverse-CDF table size");
    cmd->add_option("--z-max", o.zmax, "per-comparison z threshold");
}

int emit_report(const urns::Report& rep, const CommonOpts& o) {
    write_output(o.out, report_payload(rep, o.format));
    return rep.pass ? kExitOk : kExitFail;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"urn occupancy fields: simulation, verification, kernels, text scans"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "urns 0.1.0");

    // ---- simulate ----------------------------------------------------------
    auto* sim = app.add_subcommand("simulate", "simulate one realization and count queries");
    CommonOpts sim_o;
    std::vector<std::string> sim_sets{"0:1"};
    std::vector<std::int64_t> sim_ks{1};
    bool sim_exact = false;
    std::string sim_mode = "fixed";
    std::string sim_dump;
    double sim_n = 100000;
    sim->add_option("--theta", sim_o.theta)->required();
    sim->add_option("--n", sim_n, "number of balls (or Poisson horizon)")->required();
    sim->add_option("--seed", sim_o.seed)->required();
    sim->add_option("--set", sim_sets, "query set lo:hi[,lo:hi...] (repeatable)");
    sim->add_option("--k", sim_ks, "occupancy threshold k (repeatable)");
    sim->add_flag("--exact", sim_exact, "count urns with exactly k balls");
    sim->add_option("--mode", sim_mode, "fixed|poisson")
        ->check(CLI::IsMember({"fixed", "poisson"}));
    sim->add_option("--out", sim_o.out);
    sim->add_option("--table-cutoff", sim_o.table_cutoff);
    sim->add_option("--dump-realization", sim_dump, "CSV (index_or_time,urn_label)");

    // ---- verify ------------------------------------------------------------
    auto* verify = app.add_subcommand("verify", "run a verification experiment");
    verify->require_subcommand(1);

    auto* vclt = verify->add_subcommand("clt", "covariances and marginals vs kernels");
    CommonOpts clt_o;
    std::vector<std::string> clt_sets{"0:1"};
    std::vector<std::int64_t> clt_ks{1};
    bool clt_exact = false;
    std::string clt_mode = "fixed";
    add_common(vclt, clt_o);
    vclt->add_option("--n", clt_o.scale, "balls per replication (or horizon)")->required();
    vclt->add_option("--set", clt_sets);
    vclt->add_option("--k", clt_ks);
    vclt->add_flag("--exact", clt_exact);
    vclt->add_option("--mode", clt_mode, "fixed|poisson|both")
        ->check(CLI::IsMember({"fixed", "poisson", "both"}));

    auto* vfclt = verify->add_subcommand("fclt", "covariance surface on an endpoint grid");
    CommonOpts fclt_o;
    double fclt_grid = 0.1;
    std::string fclt_mode = "fixed";
    add_common(vfclt, fclt_o);
    vfclt->add_option("--n", fclt_o.scale)->required();
    vfclt->add_option("--grid", fclt_grid, "grid step (must divide 1)");
    vfclt->add_option("--mode", fclt_mode)->check(CLI::IsMember({"fixed", "poisson"}));

    auto* vslln = verify->add_subcommand("slln", "path ratios to exact expectations");
    CommonOpts slln_o;
    std::string slln_set = "0.2:0.7";
    std::int64_t slln_k = 2;
    std::int64_t slln_seeds = 100;
    std::string slln_grid = "100,1000,10000,100000,1000000";
    double slln_band = 0.05;
    double slln_fraction = 0.99;
    add_common(vslln, slln_o, /*with_reps=*/false);
    vslln->add_option("--set", slln_set);
    vslln->add_option("--k", slln_k);
    vslln->add_option("--seeds", slln_seeds, "independent paths");
    vslln->add_option("--n-grid", slln_grid, "comma-separated increasing n values");
    vslln->add_option("--band", slln_band, "final-ratio band half-width");
    vslln->add_option("--fraction", slln_fraction, "required in-band fraction");

    auto* vbounds = verify->add_subcommand("bounds", "almost-sure inequality suite");
    CommonOpts bounds_o;
    add_common(vbounds, bounds_o);

    auto* vpcov = verify->add_subcommand("poisson-cov", "finite-t covariance identity");
    CommonOpts pcov_o;
    std::string pcov_a = "0:0.6", pcov_b = "0.4:1";
    add_common(vpcov, pcov_o);
    vpcov->add_option("--t", pcov_o.scale, "Poisson horizon")->required();
    vpcov->add_option("--a", pcov_a, "first set");
    vpcov->add_option("--b", pcov_b, "second set");

    // ---- kernel ------------------------------------------------------------
    auto* kernel = app.add_subcommand("kernel", "tabulate limiting covariance kernels");
    kernel->require_subcommand(1);

    auto* kkstar = kernel->add_subcommand("kstar", "K*(A1,k1,A2,k2)");
    double kk_theta = 0.5, kk_tol = 1e-8;
    std::string kk_a = "0:1", kk_b = "0:1", kk_out;
    std::int64_t kk_k1 = 1, kk_k2 = 1;
    bool kk_quad = false;
    kkstar->add_option("--theta", kk_theta)->required();
    kkstar->add_option("--a", kk_a);
    kkstar->add_option("--b", kk_b);
    kkstar->add_option("--k1", kk_k1);
    kkstar->add_option("--k2", kk_k2);
    kkstar->add_option("--tol", kk_tol);
    kkstar->add_flag("--quad", kk_quad, "force quadrature even for k1=k2=1");
    kkstar->add_option("--out", kk_out);

    auto* kpi = kernel->add_subcommand("pi", "pi_ij coefficients");
    double pi_theta = 0.5;
    std::int64_t pi_i = 1, pi_j = 1;
    std::string pi_out;
    kpi->add_option("--theta", pi_theta)->required();
    kpi->add_option("--i", pi_i)->required();
    kpi->add_option("--j", pi_j)->required();
    kpi->add_option("--out", pi_out);

    auto* kfwd = kernel->add_subcommand("forward", "forward kernel table (s+t)^th-(svt)^th");
    auto* kcross = kernel->add_subcommand("cross", "cross kernel table ((s+t)^th-1)1(s+t>1)");
    double grid_theta = 0.5, grid_step = 0.1;
    std::string grid_out;
    for (auto* sub : {kfwd, kcross}) {
        sub->add_option("--theta", grid_theta)->required();
        sub->add_option("--grid", grid_step);
        sub->add_option("--out", grid_out);
    }

    auto* kuf = kernel->add_subcommand("ufield", "circular-field covariance kernel");
    double uf_theta = 0.5, uf_s1 = 0, uf_t1 = 0, uf_s2 = 0, uf_t2 = 0;
    std::string uf_out;
    kuf->add_option("--theta", uf_theta)->required();
    kuf->add_option("--s1", uf_s1)->required();
    kuf->add_option("--t1", uf_t1)->required();
    kuf->add_option("--s2", uf_s2)->required();
    kuf->add_option("--t2", uf_t2)->required();
    kuf->add_option("--out", uf_out);

    auto* kq = kernel->add_subcommand("q", "weighted-limit covariance");
    double q_theta = 0.5, q_tol = 1e-6, q_quad_tol = 1e-8;
    std::string q_weights = "1", q_a = "0:1", q_b = "0:1", q_out;
    std::int64_t q_kmax = 8;
    kq->add_option("--theta", q_theta)->required();
    kq->add_option("--weights", q_weights, "comma-separated a_1,a_2,...");
    kq->add_option("--a", q_a);
    kq->add_option("--b", q_b);
    kq->add_option("--kmax", q_kmax);
    kq->add_option("--tol", q_tol, "tail-warning tolerance");
    kq->add_option("--quad-tol", q_quad_tol);
    kq->add_option("--out", q_out);

    // ---- text --------------------------------------------------------------
    auto* text = app.add_subcommand("text", "text homogeneity scanning");
    text->require_subcommand(1);

    auto* ttheta = text->add_subcommand("theta", "estimate theta from a corpus");
    std::string ttheta_file, ttheta_out;
    ttheta->add_option("file", ttheta_file, "UTF-8 plain text input")->required();
    ttheta->add_option("--out", ttheta_out);

    auto* tscan = text->add_subcommand("scan", "homogeneity test with resampling p-value");
    std::string tscan_file, tscan_out, tscan_grid_dump, tscan_proc_dump;
    double tscan_grid = 0.01;
    std::int64_t tscan_resamples = 199;
    std::string tscan_method = "permutation";
    std::uint64_t tscan_seed = 0;
    int tscan_workers = 1;
    tscan->add_option("file", tscan_file)->required();
    tscan->add_option("--seed", tscan_seed)->required();
    tscan->add_option("--grid", tscan_grid);
    tscan->add_option("--resamples", tscan_resamples);
    tscan->add_option("--method", tscan_method)
        ->check(CLI::IsMember({"permutation", "parametric"}));
    tscan->add_option("--workers", tscan_workers);
    tscan->add_option("--out", tscan_out);
    tscan->add_option("--dump-grid", tscan_grid_dump, "CSV of the U field");
    tscan->add_option("--dump-processes", tscan_proc_dump, "CSV of R_n(t), R_n'(t)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*sim) {
            auto queries = build_queries(sim_sets, sim_ks, sim_exact);
            urns::PowerLawPmf model(sim_o.theta, sim_o.table_cutoff);
            urns::Engine eng = urns::make_engine(sim_o.seed, 0, 0);
            std::ostringstream os;
            os << "# theta = " << fmt(sim_o.theta) << "\n# n = " << fmt(sim_n)
               << "\n# seed = " << sim_o.seed << "\n# mode = " << sim_mode << '\n';
            os << "set,k,mode,count,expectation,standardized\n" << std::setprecision(17);
            urns::CountScratch scratch;
            if (sim_mode == "fixed") {
                auto n = static_cast<std::int64_t>(sim_n);
                auto seq = urns::simulate_fixed(model, n, eng);
                for (const auto& qs : queries) {
                    auto c = urns::count(seq, qs.query, scratch);
                    auto res = urns::standardize(model, c, sim_n, qs.query,
                                                 urns::SchemeKind::fixed);
                    os << csv_field(qs.query.set.str()) << ',' << qs.query.k << ','
                       << (qs.query.mode == urns::CountMode::exact ? "exact" : "at_least")
                       << ',' << c << ',' << res.expectation << ',' << res.standardized
                       << '\n';
                }
                if (!sim_dump.empty()) {
                    std::ostringstream ds;
                    ds << "index_or_time,urn_label\n";
                    for (std::int64_t m = 1; m <= seq.n; ++m)
                        ds << m << ',' << seq.labels[static_cast<std::size_t>(m - 1)] << '\n';
                    write_output(sim_dump, ds.str());
                }
            } else {
                auto real = urns::simulate_poisson(model, sim_n, eng);
                for (const auto& qs : queries) {
                    auto c = urns::count_poisson(real, sim_n, qs.query, scratch);
                    auto res = urns::standardize(model, c, sim_n, qs.query,
                                                 urns::SchemeKind::poissonized);
                    os << csv_field(qs.query.set.str()) << ',' << qs.query.k << ','
                       << (qs.query.mode == urns::CountMode::exact ? "exact" : "at_least")
                       << ',' << c << ',' << res.expectation << ',' << res.standardized
                       << '\n';
                }
                if (!sim_dump.empty()) {
                    std::ostringstream ds;
                    ds << "index_or_time,urn_label\n" << std::setprecision(17);
                    for (std::size_t i = 0; i < real.arrivals.size(); ++i)
                        ds << real.arrivals[i] << ',' << real.labels[i] << '\n';
                    write_output(sim_dump, ds.str());
                }
            }
            write_output(sim_o.out, os.str());
            return kExitOk;
        }

        if (*vclt) {
            auto cfg = clt_o.to_config();
            cfg.queries = build_queries(clt_sets, clt_ks, clt_exact);
            std::string payload;
            bool pass = true;
            if (clt_mode == "both" || clt_mode == "fixed") {
                auto rep = urns::run_clt(cfg, urns::SchemeKind::fixed);
                payload += report_payload(rep, clt_o.format);
                pass = pass && rep.pass;
            }
            if (clt_mode == "both" || clt_mode == "poisson") {
                auto rep = urns::run_clt(cfg, urns::SchemeKind::poissonized);
                payload += report_payload(rep, clt_o.format);
                pass = pass && rep.pass;
            }
            write_output(clt_o.out, payload);
            return pass ? kExitOk : kExitFail;
        }
        if (*vfclt) {
            auto cfg = fclt_o.to_config();
            auto rep = urns::run_fclt_grid(cfg, fclt_grid,
                                           fclt_mode == "poisson"
                                               ? urns::SchemeKind::poissonized
                                               : urns::SchemeKind::fixed);
            return emit_report(rep, fclt_o);
        }
        if (*vslln) {
            auto cfg = slln_o.to_config();
            cfg.replications = slln_seeds;
            cfg.queries = build_queries({slln_set}, {slln_k}, false);
            std::vector<std::int64_t> grid;
            std::stringstream ss(slln_grid);
            std::string item;
            while (std::getline(ss, item, ',')) grid.push_back(std::stoll(item));
            auto rep = urns::run_slln(cfg, grid, slln_band, slln_fraction);
            return emit_report(rep, slln_o);
        }
        if (*vbounds) {
            auto cfg = bounds_o.to_config();
            auto rep = urns::run_bounds(cfg);
            return emit_report(rep, bounds_o);
        }
        if (*vpcov) {
            auto cfg = pcov_o.to_config();
            cfg.queries = build_queries({pcov_a, pcov_b}, {1}, false);
            auto rep = urns::run_poisson_cov_identity(cfg);
            return emit_report(rep, pcov_o);
        }

        if (*kkstar) {
            auto A = urns::IntervalSet::parse(kk_a);
            auto B = urns::IntervalSet::parse(kk_b);
            urns::KernelValue kv = (kk_k1 == 1 && kk_k2 == 1 && !kk_quad)
                                       ? urns::kstar_closed(A, B, kk_theta)
                                       : urns::kstar_quadrature(A, kk_k1, B, kk_k2,
                                                                kk_theta, kk_tol);
            std::ostringstream os;
            os << "a,b,k1,k2,theta,value,method,est_abs_error\n" << std::setprecision(17)
               << csv_field(A.str()) << ',' << csv_field(B.str()) << ',' << kk_k1 << ','
               << kk_k2 << ',' << kk_theta << ',' << kv.value << ','
               << method_name(kv.method) << ',' << kv.est_abs_error << '\n';
            write_output(kk_out, os.str());
            return kExitOk;
        }
        if (*kpi) {
            std::ostringstream os;
            os << "i,j,theta,value\n" << std::setprecision(17) << pi_i << ',' << pi_j << ','
               << pi_theta << ',' << urns::pi_value(pi_i, pi_j, pi_theta) << '\n';
            write_output(pi_out, os.str());
            return kExitOk;
        }
        if (*kfwd || *kcross) {
            bool fwd = static_cast<bool>(*kfwd);
            auto G = static_cast<std::int64_t>(std::llround(1.0 / grid_step));
            if (G < 1 || std::fabs(G * grid_step - 1.0) > 1e-9)
                throw std::invalid_argument("--grid must divide 1");
            std::ostringstream os;
            os << "s,t,value,method,est_abs_error\n" << std::setprecision(17);
            for (std::int64_t i = 0; i <= G; ++i) {
                for (std::int64_t j = 0; j <= G; ++j) {
                    double s = static_cast<double>(i) * grid_step;
                    double t = static_cast<double>(j) * grid_step;
                    double v = fwd ? urns::forward_kernel(s, t, grid_theta)
                                   : urns::cross_kernel(s, t, grid_theta);
                    os << s << ',' << t << ',' << v << ",closed_form,1e-15\n";
                }
            }
            write_output(grid_out, os.str());
            return kExitOk;
        }
        if (*kuf) {
            std::ostringstream os;
            os << "s1,t1,s2,t2,theta,value,method,est_abs_error\n" << std::setprecision(17)
               << uf_s1 << ',' << uf_t1 << ',' << uf_s2 << ',' << uf_t2 << ',' << uf_theta
               << ',' << urns::u_field_kernel(uf_s1, uf_t1, uf_s2, uf_t2, uf_theta)
               << ",closed_form,1e-15\n";
            write_output(uf_out, os.str());
            return kExitOk;
        }
        if (*kq) {
            std::vector<double> weights;
            std::stringstream ss(q_weights);
            std::string item;
            while (std::getline(ss, item, ',')) weights.push_back(std::stod(item));
            auto A = urns::IntervalSet::parse(q_a);
            auto B = urns::IntervalSet::parse(q_b);
            auto r = urns::q_limit_cov(weights, A, B, q_theta, q_kmax, q_tol, q_quad_tol);
            std::ostringstream os;
            os << "a,b,kmax,theta,value,tail_estimate,tail_warning\n"
               << std::setprecision(17) << csv_field(A.str()) << ',' << csv_field(B.str())
               << ',' << q_kmax << ',' << q_theta << ',' << r.value << ','
               << r.tail_estimate << ',' << (r.tail_warning ? 1 : 0) << '\n';
            write_output(q_out, os.str());
            return kExitOk;
        }

        if (*ttheta) {
            auto tok = urns::tokenize(read_input(ttheta_file));
            nlohmann::json j;
            j["input"] = ttheta_file;
            j["tokens"] = tok.seq.n();
            j["distinct"] = urns::distinct_count(tok.seq);
            j["singletons"] = urns::singleton_count(tok.seq);
            j["theta_hat"] = urns::theta_hat(tok.seq);
            write_output(ttheta_out, j.dump(2) + "\n");
            return kExitOk;
        }
        if (*tscan) {
            auto tok = urns::tokenize(read_input(tscan_file));
            auto method = tscan_method == "parametric" ? urns::ResampleMethod::parametric
                                                       : urns::ResampleMethod::permutation;
            auto res = urns::scan(tok.seq, tscan_grid, tscan_resamples, method, tscan_seed,
                                  tscan_workers);
            nlohmann::json j;
            j["input"] = tscan_file;
            j["seed"] = tscan_seed;
            j["grid_step"] = res.grid_step;
            j["resamples"] = res.resamples;
            j["method"] = tscan_method;
            j["tokens"] = tok.seq.n();
            j["r_n"] = res.r_n;
            j["theta_hat"] = res.theta_hat;
            j["t_n"] = res.t_n;
            j["p_value"] = res.p_value;
            write_output(tscan_out, j.dump(2) + "\n");
            if (!tscan_grid_dump.empty()) {
                auto field = urns::circular_field(tok.seq, tscan_grid);
                std::ostringstream os;
                os << "s,t,u\n" << std::setprecision(17);
                for (std::size_t i = 0; i < field.s.size(); ++i)
                    for (std::size_t l = 0; l < field.t.size(); ++l)
                        os << field.s[i] << ',' << field.t[l] << ',' << field.at(i, l)
                           << '\n';
                write_output(tscan_grid_dump, os.str());
            }
            if (!tscan_proc_dump.empty()) {
                auto pp = urns::forward_backward(tok.seq, tscan_grid);
                std::ostringstream os;
                os << "t,forward,backward\n" << std::setprecision(17);
                for (std::size_t i = 0; i < pp.ts.size(); ++i)
                    os << pp.ts[i] << ',' << pp.forward[i] << ',' << pp.backward[i] << '\n';
                write_output(tscan_proc_dump, os.str());
            }
            return kExitOk;
        }
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return kExitIo;
    } catch (const urns::QuadratureError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return kExitFail;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::domain_error& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFail;
    }
    return kExitUsage;
}
