// Command-line drivers for the semi-static variance-swap hedging library.
//
//   svh abc        compute/cache the residual moments A, B, C
//   svh sweep-d    hedging error versus portfolio size, all selection methods
//   svh portfolio  weights of the selected portfolio at a fixed size d
//   svh sweep-rho  hedging error versus the leverage correlation rho
//   svh mc-check   Monte-Carlo cross-check of the analytic moments
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure,
// 4 Monte-Carlo oracle disagreement.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "svh/claims.hpp"
#include "svh/errors.hpp"
#include "svh/hedge.hpp"
#include "svh/heston.hpp"
#include "svh/mc.hpp"
#include "svh/moments.hpp"
#include "svh/selection.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace svh;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitOracle = 4;

std::string fmt12(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", x);
    return buf;
}

json read_json_file(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open " + file.string());
    json j = json::parse(in, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded()) throw ConfigError("malformed JSON in " + file.string());
    return j;
}

HestonParams load_params(const fs::path& file) {
    const json j = read_json_file(file);
    HestonParams p;
    const auto get = [&](const char* key, double& slot) {
        if (!j.contains(key)) return;
        if (!j[key].is_number()) throw ConfigError(file.string() + ": " + key + " must be a number");
        slot = j[key].get<double>();
    };
    get("kappa", p.kappa);
    get("lambda", p.lambda);
    get("rho", p.rho);
    get("sigma", p.sigma);
    get("v0", p.v0);
    get("s0", p.s0);
    get("maturity", p.maturity);
    p.validate();
    return p;
}

ClaimKind kind_from_string(const std::string& s) {
    if (s == "put") return ClaimKind::Put;
    if (s == "call") return ClaimKind::Call;
    throw ConfigError("unknown claim kind '" + s + "' (expected put or call)");
}

// Claims config: either an explicit option list
//   {"options": [{"kind": "put", "strike": 60}, ...], "swap_strike": 0}
// or a strike grid with the usual OTM convention (puts below spot)
//   {"grid": {"k_min": 50, "k_max": 150, "dk": 5}}
ClaimSet load_claims(const fs::path& file, const HestonParams& p) {
    const json j = read_json_file(file);
    ClaimSet cs;
    cs.target = ClaimSpec{ClaimKind::VarianceSwap, 0.0, 0.0};
    if (j.contains("swap_strike")) cs.swap_strike = j["swap_strike"].get<double>();
    if (j.contains("grid")) {
        const json& g = j["grid"];
        const double k_min = g.at("k_min").get<double>();
        const double k_max = g.at("k_max").get<double>();
        const double dk = g.at("dk").get<double>();
        if (!(dk > 0.0) || k_max < k_min)
            throw ConfigError(file.string() + ": grid requires k_min <= k_max and dk > 0");
        for (double k = k_min; k <= k_max + 1e-9 * dk; k += dk)
            cs.options.push_back(
                {k < p.s0 ? ClaimKind::Put : ClaimKind::Call, k, 0.0});
    } else if (j.contains("options")) {
        for (const json& o : j["options"]) {
            ClaimSpec c;
            c.kind = kind_from_string(o.at("kind").get<std::string>());
            c.strike = o.at("strike").get<double>();
            if (o.contains("strip_r")) c.strip_r = o["strip_r"].get<double>();
            cs.options.push_back(c);
        }
    } else {
        throw ConfigError(file.string() + ": expected an 'options' list or a 'grid' block");
    }
    cs.finalize(p);
    return cs;
}

struct CommonOpts {
    std::string params_file;
    std::string claims_file;
    std::string out_dir = ".";
    std::string cache_dir;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--params", o.params_file, "Heston parameter JSON file")->required();
    cmd->add_option("--claims", o.claims_file, "claim set JSON file")->required();
    cmd->add_option("--out", o.out_dir, "output directory (default: current)");
    cmd->add_option("--cache", o.cache_dir, "moment cache directory");
}

struct Loaded {
    HestonParams p;
    ClaimSet claims;
    std::optional<fs::path> cache;
};

Loaded load_common(const CommonOpts& o) {
    Loaded l;
    l.p = load_params(o.params_file);
    l.claims = load_claims(o.claims_file, l.p);
    if (!o.cache_dir.empty()) l.cache = fs::path(o.cache_dir);
    fs::create_directories(o.out_dir);
    return l;
}

std::ofstream open_csv(const fs::path& file) {
    std::ofstream out(file);
    if (!out) throw ConfigError("cannot write " + file.string());
    return out;
}

std::string join_strikes(const ClaimSet& claims, const std::vector<int>& support) {
    std::ostringstream s;
    for (std::size_t i = 0; i < support.size(); ++i)
        s << (i ? ";" : "") << fmt12(claims.options[static_cast<std::size_t>(support[i])].strike);
    return s.str();
}

std::string join_weights(const Eigen::VectorXd& v, const std::vector<int>& support) {
    std::ostringstream s;
    for (std::size_t i = 0; i < support.size(); ++i) s << (i ? ";" : "") << fmt12(v[support[i]]);
    return s.str();
}

// ---------------------------------------------------------------- abc ------

int cmd_abc(const CommonOpts& o) {
    const Loaded l = load_common(o);
    const QuadSettings qs;
    const MomentData m = compute_moments(l.p, l.claims, qs, l.cache);

    const fs::path out_file = fs::path(o.out_dir) / "moments.json";
    save_moments(out_file, m, l.p, l.claims, qs);

    double b_err = 0.0, c_err = 0.0;
    std::size_t evals = m.a_meta.n_evals;
    for (const auto& e : m.b_meta) {
        b_err = std::max(b_err, e.abs_err);
        evals += e.n_evals;
    }
    for (const auto& e : m.c_meta) {
        c_err = std::max(c_err, e.abs_err);
        evals += e.n_evals;
    }
    std::printf("swap rate k*        %s\n", fmt12(m.k_star).c_str());
    std::printf("A                   %s\n", fmt12(m.a).c_str());
    std::printf("rel err at d=0      %s%%\n", fmt12(100.0 * std::sqrt(m.a) / m.k_star).c_str());
    std::printf("rcond(C)            %s\n", fmt12(m.rcond()).c_str());
    std::printf("max |quad err| B    %s\n", fmt12(b_err).c_str());
    std::printf("max |quad err| C    %s\n", fmt12(c_err).c_str());
    std::printf("integrand evals     %zu\n", evals);
    std::printf("wrote %s\n", out_file.string().c_str());
    return 0;
}

// ------------------------------------------------------------- sweep-d ----

const std::vector<std::string> kAllMethods = {"leaps", "greedy-forward", "greedy-backward",
                                              "lasso", "brute-force"};

std::vector<std::string> parse_methods(const std::string& arg) {
    if (arg.empty()) return {"leaps", "greedy-forward", "greedy-backward", "lasso"};
    std::vector<std::string> out;
    std::stringstream ss(arg);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        if (std::find(kAllMethods.begin(), kAllMethods.end(), tok) == kAllMethods.end())
            throw ConfigError("unknown method '" + tok + "'");
        out.push_back(tok);
    }
    if (out.empty()) throw ConfigError("--methods parsed to an empty list");
    return out;
}

void write_entry_row(std::ofstream& csv, const ClaimSet& claims, const SelectionEntry& e,
                     const std::string& error = "") {
    csv << e.method << ',' << e.d << ',';
    if (std::isfinite(e.lambda)) csv << fmt12(e.lambda);
    csv << ',';
    if (error.empty())
        csv << fmt12(e.rel_err) << ',' << join_strikes(claims, e.support) << ','
            << join_weights(e.v, e.support) << ',' << (e.certified ? 1 : 0);
    else
        csv << ",,," << 0;
    csv << ',' << error << '\n';
}

SelectionPath run_method(const std::string& method, const MomentData& m, int d_max, bool nonneg) {
    SelectionPath path;
    if (method == "brute-force" || method == "leaps") {
        for (int d = 0; d <= d_max; ++d)
            path.entries.push_back(method == "leaps" ? leaps_and_bounds(m, d, nonneg)
                                                     : brute_force(m, d, nonneg));
    } else if (method == "greedy-forward") {
        path = greedy_forward(m, d_max, nonneg);
    } else if (method == "greedy-backward") {
        path = greedy_backward(m, nonneg);
    } else if (method == "lasso") {
        path = lasso_path(m, default_lambda_grid(m), nonneg);
    }
    return path;
}

int cmd_sweep_d(const CommonOpts& o, const std::string& methods_arg, int d_max, bool nonneg) {
    const Loaded l = load_common(o);
    const QuadSettings qs;
    const MomentData m = compute_moments(l.p, l.claims, qs, l.cache);
    const int n = static_cast<int>(l.claims.options.size());
    if (d_max < 0 || d_max > n) d_max = n;

    const std::vector<std::string> methods = parse_methods(methods_arg);
    std::ofstream csv = open_csv(fs::path(o.out_dir) / "sweep_d.csv");
    csv << "method,d,lambda,rel_err,support,weights,certified,error\n";

    std::vector<SelectionEntry> headline;
    for (const std::string& method : methods) {
        try {
            const SelectionPath path = run_method(method, m, d_max, nonneg);
            for (const auto& e : path.entries) {
                write_entry_row(csv, l.claims, e);
                if (method == "leaps") headline.push_back(e);
            }
        } catch (const std::exception& ex) {
            SelectionEntry stub;
            stub.method = method;
            stub.d = -1;
            write_entry_row(csv, l.claims, stub, ex.what());
            std::fprintf(stderr, "method %s failed: %s\n", method.c_str(), ex.what());
        }
    }
    csv.close();

    for (const auto& e : headline)
        if (e.d == 0 || e.d == 3 || e.d == 6 || e.d == n)
            std::printf("leaps d=%-2d rel_err %s%%\n", e.d, fmt12(100.0 * e.rel_err).c_str());
    std::printf("wrote %s\n", (fs::path(o.out_dir) / "sweep_d.csv").string().c_str());
    return 0;
}

// ------------------------------------------------------------ portfolio ---

int cmd_portfolio(const CommonOpts& o, const std::string& methods_arg, int d, bool nonneg) {
    const Loaded l = load_common(o);
    const QuadSettings qs;
    const MomentData m = compute_moments(l.p, l.claims, qs, l.cache);
    const int n = static_cast<int>(l.claims.options.size());
    if (d < 0 || d > n) throw ConfigError("portfolio size d out of range");

    const std::vector<std::string> methods = parse_methods(methods_arg);
    const fs::path file = fs::path(o.out_dir) / ("portfolio_d" + std::to_string(d) + ".csv");
    std::ofstream csv = open_csv(file);
    csv << "method,strike,kind,weight,log_strike,log_abs_weight\n";

    for (const std::string& method : methods) {
        SelectionEntry entry;
        if (method == "lasso") {
            // largest-lambda (most regularized) entry attaining the requested size
            const SelectionPath path = lasso_path(m, default_lambda_grid(m), nonneg);
            bool found = false;
            for (const auto& e : path.entries)
                if (e.d == d) {
                    entry = e;
                    found = true;
                    break;
                }
            if (!found) {
                std::fprintf(stderr, "lasso path has no entry with d=%d; skipping\n", d);
                continue;
            }
        } else if (method == "greedy-forward") {
            entry = run_method(method, m, d, nonneg).entries.back();
        } else if (method == "greedy-backward") {
            for (auto& e : run_method(method, m, n, nonneg).entries)
                if (e.d == d) entry = std::move(e);
        } else {
            entry = method == "leaps" ? leaps_and_bounds(m, d, nonneg)
                                      : brute_force(m, d, nonneg);
        }

        double sxx = 0, sxy = 0, sx = 0, sy = 0, np = 0;
        for (int idx : entry.support) {
            const auto& c = l.claims.options[static_cast<std::size_t>(idx)];
            const double w = entry.v[idx];
            csv << method << ',' << fmt12(c.strike) << ',' << to_string(c.kind) << ','
                << fmt12(w) << ',' << fmt12(std::log(c.strike)) << ',';
            if (w != 0.0) {
                const double lx = std::log(c.strike), ly = std::log(std::abs(w));
                csv << fmt12(ly);
                sx += lx;
                sy += ly;
                sxx += lx * lx;
                sxy += lx * ly;
                np += 1;
            }
            csv << '\n';
        }
        if (np >= 2) {
            const double slope = (sxy - sx * sy / np) / (sxx - sx * sx / np);
            std::printf("%s d=%d rel_err %s%%  log-log slope %s\n", method.c_str(), d,
                        fmt12(100.0 * entry.rel_err).c_str(), fmt12(slope).c_str());
        } else {
            std::printf("%s d=%d rel_err %s%%\n", method.c_str(), d,
                        fmt12(100.0 * entry.rel_err).c_str());
        }
    }
    csv.close();
    std::printf("wrote %s\n", file.string().c_str());
    return 0;
}

// ------------------------------------------------------------ sweep-rho ---

std::vector<double> parse_rho_grid(const std::string& arg) {
    std::vector<double> grid;
    if (arg.find(',') == std::string::npos && !arg.empty()) {
        const int n = std::stoi(arg);
        if (n < 2) throw ConfigError("--rho-grid count must be >= 2");
        for (int i = 0; i < n; ++i)
            grid.push_back(-0.95 + 1.90 * static_cast<double>(i) / (n - 1));
    } else if (!arg.empty()) {
        std::stringstream ss(arg);
        std::string tok;
        while (std::getline(ss, tok, ','))
            if (!tok.empty()) grid.push_back(std::stod(tok));
    } else {
        for (int i = 0; i < 21; ++i) grid.push_back(-0.95 + 1.90 * i / 20.0);
    }
    for (double r : grid)
        if (!(r > -1.0 && r < 1.0)) throw ConfigError("rho grid values must lie in (-1, 1)");
    return grid;
}

std::vector<int> parse_d_list(const std::string& arg) {
    if (arg.empty()) return {0, 3, 6, 12};
    std::vector<int> out;
    std::stringstream ss(arg);
    std::string tok;
    while (std::getline(ss, tok, ','))
        if (!tok.empty()) out.push_back(std::stoi(tok));
    return out;
}

int cmd_sweep_rho(const CommonOpts& o, const std::string& rho_arg, const std::string& d_arg,
                  bool nonneg) {
    const CommonOpts oc = o;
    HestonParams p0 = load_params(oc.params_file);
    const std::vector<double> rhos = parse_rho_grid(rho_arg);
    const std::vector<int> ds = parse_d_list(d_arg);
    fs::create_directories(o.out_dir);
    const std::optional<fs::path> cache =
        o.cache_dir.empty() ? std::nullopt : std::optional<fs::path>(o.cache_dir);

    struct Row {
        double rho;
        int d;
        double rel_err;
    };
    std::vector<Row> rows;
    for (double rho : rhos) {
        HestonParams p = p0;
        p.rho = rho;
        ClaimSet claims = load_claims(oc.claims_file, p);  // strips depend on the model
        const QuadSettings qs;
        const bool need_moments = std::any_of(ds.begin(), ds.end(), [](int d) { return d > 0; });
        MomentData m;
        if (need_moments) {
            m = compute_moments(p, claims, qs, cache);
        } else {
            m.a = compute_a(p);
            m.k_star = swap_rate(p);
        }
        for (int d : ds) {
            double rel;
            if (d == 0) {
                rel = std::sqrt(std::max(m.a, 0.0)) / m.k_star;
            } else {
                rel = leaps_and_bounds(m, d, nonneg).rel_err;
            }
            rows.push_back({rho, d, rel});
        }
        std::printf("rho %+0.4f done\n", rho);
    }

    // least-squares fit rel_err(rho) ~ c_d sqrt(1 - rho^2) per d
    std::ofstream csv = open_csv(fs::path(o.out_dir) / "sweep_rho.csv");
    csv << "rho,d,rel_err,semicircle_fit,rel_dev\n";
    for (int d : ds) {
        double num = 0, den = 0;
        for (const Row& r : rows)
            if (r.d == d) {
                const double s = std::sqrt(1.0 - r.rho * r.rho);
                num += r.rel_err * s;
                den += s * s;
            }
        const double c_d = num / den;
        double max_dev = 0.0;
        for (const Row& r : rows) {
            if (r.d != d) continue;
            const double fit = c_d * std::sqrt(1.0 - r.rho * r.rho);
            const double dev = std::abs(r.rel_err - fit) / fit;
            if (std::abs(r.rho) <= 0.9) max_dev = std::max(max_dev, dev);
            csv << fmt12(r.rho) << ',' << r.d << ',' << fmt12(r.rel_err) << ',' << fmt12(fit)
                << ',' << fmt12(dev) << '\n';
        }
        std::printf("d=%-2d  fitted c_d %s  max rel dev (|rho|<=0.9) %s\n", d,
                    fmt12(c_d).c_str(), fmt12(max_dev).c_str());
    }
    csv.close();
    std::printf("wrote %s\n", (fs::path(o.out_dir) / "sweep_rho.csv").string().c_str());
    return 0;
}

// ------------------------------------------------------------- mc-check ---

int cmd_mc_check(const CommonOpts& o, std::uint64_t seed, std::size_t paths, int steps) {
    const Loaded l = load_common(o);
    const QuadSettings qs;
    const MomentData m = compute_moments(l.p, l.claims, qs, l.cache);

    SimConfig cfg;
    cfg.seed = seed;
    cfg.n_paths = paths;
    cfg.steps_per_year = steps;
    cfg.validate();

    const ResidualMatrix rm = simulate_residuals(l.p, l.claims, cfg, qs);
    const ResidualSample rs = summarize_residuals(rm, cfg);
    const HedgeSolution full = solve_unconstrained(m);
    const ErrorSample es = realized_error_from(rm, full.v);

    const auto z_of = [](double hat, double ref, double se) {
        return se > 0.0 ? (hat - ref) / se : 0.0;
    };
    const int n = static_cast<int>(l.claims.options.size());
    double max_abs_z = 0.0;
    json entries = json::array();
    const auto push = [&](const std::string& name, double hat, double ref, double se) {
        const double z = z_of(hat, ref, se);
        max_abs_z = std::max(max_abs_z, std::abs(z));
        entries.push_back({{"entry", name},
                           {"analytic", ref},
                           {"estimate", hat},
                           {"se", se},
                           {"z", z}});
    };
    push("A", rs.a_hat, m.a, rs.a_se);
    for (int i = 0; i < n; ++i)
        push("B[" + std::to_string(i) + "]", rs.b_hat[i], m.b[i], rs.b_se[i]);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j)
            push("C[" + std::to_string(i) + "][" + std::to_string(j) + "]", rs.c_hat(i, j),
                 m.c(i, j), rs.c_se(i, j));

    json report;
    report["config"] = {{"params", o.params_file},
                        {"claims", o.claims_file},
                        {"n_paths", cfg.n_paths},
                        {"steps_per_year", cfg.steps_per_year},
                        {"seed", cfg.seed}};
    report["entries"] = entries;
    report["max_abs_z"] = max_abs_z;
    json means = json::array();
    for (Eigen::Index i = 0; i < rs.mean.size(); ++i)
        means.push_back({{"mean", rs.mean[i]}, {"se", rs.mean_se[i]}});
    report["residual_means"] = means;
    report["realized_error"] = {{"eps2_analytic", full.eps2},
                                {"eps2_estimate", es.eps2},
                                {"se", es.se},
                                {"z", z_of(es.eps2, full.eps2, es.se)}};
    report["pass"] = max_abs_z <= 4.0;

    const fs::path file = fs::path(o.out_dir) / "mc_check.json";
    std::ofstream out(file);
    out << report.dump(2) << '\n';
    out.close();

    std::printf("max |z| over A, B, C entries: %s\n", fmt12(max_abs_z).c_str());
    std::printf("realized eps2 %s vs analytic %s (z = %s)\n", fmt12(es.eps2).c_str(),
                fmt12(full.eps2).c_str(),
                fmt12(z_of(es.eps2, full.eps2, es.se)).c_str());
    std::printf("wrote %s\n", file.string().c_str());
    if (max_abs_z > 4.0) {
        std::fprintf(stderr, "MC oracle disagreement: max |z| %.3g > 4\n", max_abs_z);
        return kExitOracle;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Variance-optimal semi-static hedging of a variance swap in the Heston model"};
    app.require_subcommand(1);

    CommonOpts abc_o, swd_o, pf_o, rho_o, mc_o;
    std::string methods, rho_grid, d_list;
    int d_max = -1, d = 6, steps = 500;
    bool nonneg = false;
    std::uint64_t seed = 42;
    std::size_t paths = 100'000;

    CLI::App* abc = app.add_subcommand("abc", "compute the residual moments A, B, C");
    add_common(abc, abc_o);

    CLI::App* swd = app.add_subcommand("sweep-d", "hedging error versus portfolio size");
    add_common(swd, swd_o);
    swd->add_option("--methods", methods, "comma list: leaps,greedy-forward,greedy-backward,lasso,brute-force");
    swd->add_option("--d-max", d_max, "largest portfolio size (default n)");
    swd->add_flag("--nonneg", nonneg, "long-only constraint v >= 0");

    CLI::App* pf = app.add_subcommand("portfolio", "portfolio composition at fixed size");
    add_common(pf, pf_o);
    pf->add_option("--methods", methods, "methods, as in sweep-d");
    pf->add_option("--d", d, "portfolio size to report (default 6)");
    pf->add_flag("--nonneg", nonneg, "long-only constraint v >= 0");

    CLI::App* rho = app.add_subcommand("sweep-rho", "hedging error versus leverage rho");
    add_common(rho, rho_o);
    rho->add_option("--rho-grid", rho_grid, "point count or comma list (default 21 on [-0.95,0.95])");
    rho->add_option("--d-list", d_list, "portfolio sizes (default 0,3,6,12)");
    rho->add_flag("--nonneg", nonneg, "long-only constraint v >= 0");

    CLI::App* mc = app.add_subcommand("mc-check", "Monte-Carlo cross-check of A, B, C");
    add_common(mc, mc_o);
    mc->add_option("--seed", seed, "simulation seed (default 42)");
    mc->add_option("--paths", paths, "number of paths (default 100000)");
    mc->add_option("--steps", steps, "time steps per year (default 500)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    try {
        if (abc->parsed()) return cmd_abc(abc_o);
        if (swd->parsed()) return cmd_sweep_d(swd_o, methods, d_max, nonneg);
        if (pf->parsed()) return cmd_portfolio(pf_o, methods, d, nonneg);
        if (rho->parsed()) return cmd_sweep_rho(rho_o, rho_grid, d_list, nonneg);
        if (mc->parsed()) return cmd_mc_check(mc_o, seed, paths, steps);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const NoValidStrip& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitNumerical;
    }
    return 0;
}
