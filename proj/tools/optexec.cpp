// optexec: command-line front end for the liquidation solvers.
//
//   optexec solve    --config model.json --out dir [--levels 10,100,1000]
//   optexec simulate --config model.json --out dir [--xi 1] [--source closed|solver]
//   optexec cost     --config model.json --out dir [--control optimal|linear|power:A|constant:R] [--penalty L]
//   optexec verify   --config model.json --out dir
//   optexec sweep    --out dir --beta 1 --alphas 1,0.5,0.1,0.01
//
// Exit codes: 0 success, 1 verification failure, 2 config/argument error,
// 3 numerical error.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <locale>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "optexec/bsde.hpp"
#include "optexec/closed_form.hpp"
#include "optexec/config.hpp"
#include "optexec/control.hpp"
#include "optexec/errors.hpp"
#include "optexec/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace optexec;

namespace {

enum Exit { kOk = 0, kVerifyFailed = 1, kConfigError = 2, kNumericalError = 3 };

struct Common {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> paths;
    std::string out = "out";
    unsigned threads = 1;
};

struct SolveOpts {
    std::vector<double> levels{10.0, 100.0, 1000.0, 1e4, 1e5};
    double stop_tol = 1e-8;
    int basis_degree = 3;
    std::string scheme = "exact";
};

std::string real(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::ostringstream os;
    os.imbue(std::locale::classic());
    os.precision(17);
    os << v;
    return os.str();
}

ModelConfig resolve(const Common& c) {
    ModelConfig cfg;
    if (!c.config_path.empty()) {
        cfg = load_model_config(c.config_path);
    } else {
        cfg = parse_model_config(json::object());
    }
    auto undefault = [&](const std::string& key) {
        std::erase(cfg.defaulted, key);
    };
    if (c.seed) {
        cfg.seed = *c.seed;
        undefault("seed");
    }
    if (c.paths) {
        if (*c.paths == 0) throw ConfigError("--paths must be positive");
        cfg.paths = *c.paths;
        undefault("paths");
    }
    return cfg;
}

json metadata(const ModelConfig& cfg, const std::string& command, const json& options) {
    return json{{"command", command}, {"model", cfg.to_json()}, {"options", options}};
}

fs::path prepare_out(const std::string& dir) {
    fs::path p(dir);
    fs::create_directories(p);
    return p;
}

void write_json(const fs::path& path, const json& doc) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << doc.dump(2) << '\n';
}

class CsvWriter {
public:
    CsvWriter(const fs::path& path, const json& meta, const std::vector<std::string>& columns) : out_(path) {
        if (!out_) throw ConfigError("cannot write " + path.string());
        out_ << "# config: " << meta.dump() << '\n';
        for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
        out_ << '\n';
    }
    void row(const std::vector<double>& values) {
        for (std::size_t i = 0; i < values.size(); ++i) out_ << (i ? "," : "") << real(values[i]);
        out_ << '\n';
    }

private:
    std::ofstream out_;
};

void require_integrable(const ModelConfig& cfg) {
    const auto gate = validate_integrability(cfg.impact, cfg.risk, cfg.pq(), cfg.horizon);
    if (!gate.i1.pass) throw IntegrabilityError("integrability (I1) fails: " + gate.i1.reason);
    if (!gate.i2.pass) throw IntegrabilityError("integrability (I2) fails: " + gate.i2.reason);
}

PathEnsemble ensemble_for(const ModelConfig& cfg, unsigned threads) {
    SamplingOptions so;
    so.threads = threads;
    const std::size_t n = is_deterministic(cfg.impact) ? 1 : cfg.paths;
    return sample_paths(cfg.impact, cfg.risk, cfg.pq(), cfg.grid(), cfg.seed, n, so);
}

LimitResult solve_limit(const ModelConfig& cfg, const SolveOpts& so, const PathEnsemble& ens, unsigned threads) {
    PenalizedParams base;
    if (so.scheme == "exact") {
        base.scheme = StepScheme::exact_flow;
    } else if (so.scheme == "euler") {
        base.scheme = StepScheme::backward_euler;
    } else {
        throw ArgumentError("--scheme must be exact or euler");
    }
    McOptions mc;
    mc.basis_degree = so.basis_degree;
    mc.threads = threads;
    const LSchedule schedule(so.levels, so.stop_tol);
    const PathEnsemble* mc_ens = is_deterministic(cfg.impact) ? nullptr : &ens;
    return l_schedule_limit(cfg.impact, cfg.risk, cfg.pq(), cfg.grid(), schedule, base, mc_ens, mc);
}

json solve_options_json(const SolveOpts& so) {
    return json{{"levels", so.levels}, {"stop_tol", so.stop_tol}, {"basis_degree", so.basis_degree}, {"scheme", so.scheme}};
}

int cmd_solve(const Common& c, const SolveOpts& so) {
    const ModelConfig cfg = resolve(c);
    require_integrable(cfg);
    const PathEnsemble ens = ensemble_for(cfg, c.threads);
    LimitResult res = solve_limit(cfg, so, ens, c.threads);
    if (res.field.stochastic()) {
        McOptions mc;
        mc.basis_degree = so.basis_degree;
        mc.threads = c.threads;
        res.field = estimate_Z(res.field, ens, mc);
    }
    const fs::path dir = prepare_out(c.out);
    const json meta = metadata(cfg, "solve", solve_options_json(so));
    CsvWriter csv(dir / "yfield.csv", meta, {"t", "y_mean", "y_p05", "y_p95", "z_mean"});
    const TimeGrid& grid = res.field.grid;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double z = res.field.z ? res.field.z_mean(k) : 0.0;
        csv.row({grid[k], res.field.node_mean(k), res.field.node_quantile(k, 0.05), res.field.node_quantile(k, 0.95),
                 k + 1 < grid.size() ? z : std::nan("")});
    }
    write_json(dir / "convergence.json", json{{"levels", res.levels},
                                              {"y0", res.y0_trace},
                                              {"y0_std_error", res.y0_std_error},
                                              {"converged", res.converged},
                                              {"clamp_count", res.field.clamp_count},
                                              {"basis", res.field.basis_spec},
                                              {"config", meta}});
    std::cout << "Y_0 = " << real(res.y0_trace.back()) << " at L = " << real(res.levels.back()) << '\n';
    return kOk;
}

// Optimal trajectory: closed form when available (exact rate integral),
// otherwise the penalized-limit solver.
ControlTrajectory optimal_trajectory(const ModelConfig& cfg, const std::string& source, const SolveOpts& so,
                                     const PathEnsemble& ens, double xi, unsigned threads) {
    const bool closed_available = has_uncorrelated_increments(cfg.impact) && std::holds_alternative<ZeroRisk>(cfg.risk);
    if (source == "closed" || (source == "auto" && closed_available)) {
        if (!closed_available) throw UnsupportedModelError("no closed form for this model; use --source solver");
        return integrate_control(closed_form_y(cfg.impact, cfg.pq(), cfg.horizon), ens, cfg.pq(), xi);
    }
    if (source != "solver" && source != "auto") throw ArgumentError("--source must be auto, closed or solver");
    const LimitResult res = solve_limit(cfg, so, ens, threads);
    return integrate_control(res.field, ens, cfg.pq(), xi);
}

int cmd_simulate(const Common& c, const SolveOpts& so, double xi, const std::string& source) {
    const ModelConfig cfg = resolve(c);
    require_integrable(cfg);
    const PathEnsemble ens = ensemble_for(cfg, c.threads);
    const ControlTrajectory traj = optimal_trajectory(cfg, source, so, ens, xi, c.threads);
    const fs::path dir = prepare_out(c.out);
    json opts = solve_options_json(so);
    opts["xi"] = xi;
    opts["source"] = source;
    CsvWriter csv(dir / "trajectory.csv", metadata(cfg, "simulate", opts), {"t", "x_mean", "x_p05", "x_p95", "rate_mean"});
    for (std::size_t k = 0; k < traj.grid.size(); ++k) {
        csv.row({traj.grid[k], traj.x_mean(k), traj.x_quantile(k, 0.05), traj.x_quantile(k, 0.95), traj.rate_mean(k)});
    }
    return kOk;
}

std::optional<CandidateKind> parse_candidate(const std::string& spec) {
    if (spec == "optimal") return std::nullopt;
    if (spec == "linear") return LinearClosure{};
    const auto colon = spec.find(':');
    if (colon != std::string::npos) {
        const std::string kind = spec.substr(0, colon);
        double v = 0.0;
        try {
            v = std::stod(spec.substr(colon + 1));
        } catch (const std::exception&) {
            throw ArgumentError("--control: bad number in '" + spec + "'");
        }
        if (kind == "power") return PowerClosure{v};
        if (kind == "constant") return ConstantRate{v};
    }
    throw ArgumentError("--control must be optimal, linear, power:<alpha> or constant:<rate>");
}

int cmd_cost(const Common& c, const SolveOpts& so, double xi, const std::string& control,
             std::optional<double> penalty) {
    const ModelConfig cfg = resolve(c);
    const auto candidate = parse_candidate(control);
    if (!candidate) require_integrable(cfg);
    SamplingOptions sampling;
    sampling.threads = c.threads;
    sampling.allow_non_integrable = candidate.has_value();
    const std::size_t n = is_deterministic(cfg.impact) ? 1 : cfg.paths;
    const PathEnsemble ens = sample_paths(cfg.impact, cfg.risk, cfg.pq(), cfg.grid(), cfg.seed, n, sampling);
    const ControlTrajectory traj = candidate ? candidate_control(*candidate, ens.grid, xi, ens.n_paths)
                                             : optimal_trajectory(cfg, "auto", so, ens, xi, c.threads);
    const CostReport rep = penalty ? penalized_cost(traj, ens, cfg.pq(), *penalty) : cost(traj, ens, cfg.pq());
    json opts = solve_options_json(so);
    opts["xi"] = xi;
    opts["control"] = control;
    opts["penalty"] = penalty ? json(*penalty) : json(nullptr);
    const fs::path dir = prepare_out(c.out);
    write_json(dir / "cost.json", json{{"estimate", rep.estimate},
                                       {"std_error", rep.std_error},
                                       {"n_paths", rep.n_paths},
                                       {"ci95", {rep.ci95_lo, rep.ci95_hi}},
                                       {"terms", {{"trading", rep.terms.trading},
                                                  {"risk", rep.terms.risk},
                                                  {"terminal", rep.terms.terminal}}},
                                       {"config", metadata(cfg, "cost", opts)}});
    std::cout << "J = " << real(rep.estimate) << " (SE " << real(rep.std_error) << ")\n";
    return kOk;
}

int cmd_verify(const Common& c) {
    const ModelConfig cfg = resolve(c);
    const SuiteBundle bundle = run_full_suite(cfg, c.threads);
    const fs::path dir = prepare_out(c.out);
    write_json(dir / "report.json", bundle.to_json());
    for (const auto& r : bundle.reports) {
        std::cout << (r.pass ? "PASS " : "FAIL ") << r.suite << '\n';
        for (const auto& chk : r.checks) {
            if (!chk.pass) std::cout << "     failed: " << chk.name << " observed " << chk.observed.dump() << '\n';
        }
    }
    return bundle.pass ? kOk : kVerifyFailed;
}

int cmd_sweep(const Common& c, double beta, const std::vector<double>& alphas) {
    const VerificationReport rep = counterexample_sweep(beta, alphas);
    const fs::path dir = prepare_out(c.out);
    const json meta = json{{"command", "sweep"}, {"options", {{"beta", beta}, {"alphas", alphas}}}};
    CsvWriter csv(dir / "sweep.csv", meta, {"alpha", "beta", "quadrature", "formula", "abs_error"});
    for (double a : alphas) {
        const double quad = counterexample_quadrature(a, beta);
        const double formula = counterexample_cost(a, beta);
        csv.row({a, beta, quad, formula, std::abs(quad - formula)});
    }
    return rep.pass ? kOk : kVerifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Optimal liquidation with a singular terminal condition"};
    app.require_subcommand(1);
    Common common;
    SolveOpts so;
    double xi = 1.0;
    std::string source = "auto";
    std::string control = "optimal";
    std::optional<double> penalty;
    double beta = 1.0;
    std::vector<double> alphas{1.0, 0.5, 0.1, 0.01};

    auto add_common = [&](CLI::App* sub, bool model) {
        if (model) {
            sub->add_option("--config", common.config_path, "JSON model specification")->check(CLI::ExistingFile);
            sub->add_option("--seed", common.seed, "Override the RNG seed");
            sub->add_option("--paths", common.paths, "Override the number of Monte Carlo paths");
            sub->add_option("--threads", common.threads, "Worker cap; results do not depend on it")
                ->check(CLI::PositiveNumber);
        }
        sub->add_option("--out", common.out, "Output directory (created if missing)");
    };
    auto add_solver = [&](CLI::App* sub) {
        sub->add_option("--levels", so.levels, "Penalty levels L, increasing")->delimiter(',');
        sub->add_option("--stop-tol", so.stop_tol, "Stop once successive Y_0 differ by less");
        sub->add_option("--basis-degree", so.basis_degree, "Regression polynomial degree (MC)");
        sub->add_option("--scheme", so.scheme, "Backward step: exact or euler");
    };

    CLI::App* solve = app.add_subcommand("solve", "Penalized BSDE solve and L -> infinity limit");
    add_common(solve, true);
    add_solver(solve);
    CLI::App* simulate = app.add_subcommand("simulate", "Optimal liquidation trajectory");
    add_common(simulate, true);
    add_solver(simulate);
    simulate->add_option("--xi", xi, "Initial position");
    simulate->add_option("--source", source, "Y source: auto, closed or solver");
    CLI::App* costcmd = app.add_subcommand("cost", "Monte Carlo cost of a control");
    add_common(costcmd, true);
    add_solver(costcmd);
    costcmd->add_option("--xi", xi, "Initial position");
    costcmd->add_option("--control", control, "optimal, linear, power:<alpha> or constant:<rate>");
    costcmd->add_option("--penalty", penalty, "Penalized cost with terminal weight L");
    CLI::App* verify = app.add_subcommand("verify", "Run the verification suite");
    add_common(verify, true);
    CLI::App* sweep = app.add_subcommand("sweep", "Counterexample cost sweep over alpha");
    add_common(sweep, false);
    sweep->add_option("--beta", beta, "Impact exponent beta >= 1");
    sweep->add_option("--alphas", alphas, "Decreasing positive alphas")->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        if (*solve) return cmd_solve(common, so);
        if (*simulate) return cmd_simulate(common, so, xi, source);
        if (*costcmd) return cmd_cost(common, so, xi, control, penalty);
        if (*verify) return cmd_verify(common);
        if (*sweep) return cmd_sweep(common, beta, alphas);
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return kNumericalError;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kConfigError;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return kNumericalError;
    }
    return kConfigError;
}
