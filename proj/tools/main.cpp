// linearize: numerically constructs the linearizing change of coordinates
// y = H(x) of a hyperbolic equilibrium, evaluates it on points and grids,
// and runs the verification suites.

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "linearize/conjugacy.hpp"
#include "linearize/errors.hpp"
#include "linearize/examples.hpp"
#include "linearize/verification.hpp"

using namespace linearize;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitSpectral = 3;
constexpr int kExitWrite = 4;

struct RunConfig {
    std::string system;
    std::string mode = "local";    // local | global
    std::string cutoff = "auto";   // auto | ball | threshold | none
    double M = 1.0;
    double eps = 0.25;
    double quad_tol = 1e-8;
    double flow_tol = 1e-10;
    double t_max = 0;  // 0 = auto
    std::uint64_t seed = 42;
    std::string out;
    std::string stable_form = "auto";  // auto | backward | forward
    int threads = 1;
    double r_init = 1.0;
    int n_points = 50;
};

void apply_json_config(RunConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(Errc::config_error, "cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        raise(Errc::config_error, std::string("bad config JSON: ") + e.what());
    }
    auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) field = j[key].get<std::decay_t<decltype(field)>>();
    };
    get("system", cfg.system);
    get("mode", cfg.mode);
    get("cutoff", cfg.cutoff);
    get("M", cfg.M);
    get("eps", cfg.eps);
    get("quad_tol", cfg.quad_tol);
    get("flow_tol", cfg.flow_tol);
    get("t_max", cfg.t_max);
    get("seed", cfg.seed);
    get("out", cfg.out);
    get("stable_form", cfg.stable_form);
    get("threads", cfg.threads);
    get("r_init", cfg.r_init);
    get("points", cfg.n_points);
}

struct ResolvedSystem {
    VectorField field;
    const AnalyticExample* example = nullptr;  // registry entry when builtin
};

ResolvedSystem resolve_system(const RunConfig& cfg) {
    if (cfg.system.empty()) raise(Errc::config_error, "--system is required");
    if (const AnalyticExample* ex = find_example(cfg.system)) return {ex->field, ex};
    return {load_field_json(cfg.system), nullptr};
}

CutoffSpec resolve_cutoff(const RunConfig& cfg) {
    std::string kind = cfg.cutoff;
    if (kind == "auto") kind = cfg.mode == "global" ? "none" : "ball";
    if (kind == "ball") return CutoffSpec::ball(cfg.M, cfg.eps);
    if (kind == "threshold") return CutoffSpec::value_threshold(cfg.M);
    if (kind == "none") return CutoffSpec::none();
    raise(Errc::config_error, "unknown cutoff: " + cfg.cutoff);
}

StableBlockForm resolve_form(const RunConfig& cfg) {
    if (cfg.stable_form == "auto") return StableBlockForm::auto_select;
    if (cfg.stable_form == "backward") return StableBlockForm::backward;
    if (cfg.stable_form == "forward") return StableBlockForm::forward;
    raise(Errc::config_error, "unknown stable form: " + cfg.stable_form);
}

// Either flavour of conjugacy context behind one evaluation surface.
struct MapContext {
    std::optional<LocalConjugacy> local;
    std::optional<GlobalConjugacy> global;

    int dim() const { return local ? local->field.dim : global->field.dim; }
    Vec map(const Vec& x) const {
        return local ? local_H(*local, x) : global_H(*global, x);
    }
};

MapContext build_context(const RunConfig& cfg, const ResolvedSystem& sys) {
    QuadratureConfig quad;
    quad.tol = cfg.quad_tol;
    FlowConfig flow;
    flow.tol = cfg.flow_tol;
    CutoffSpec cut = resolve_cutoff(cfg);

    MapContext ctx;
    if (cfg.mode == "local") {
        ctx.local = make_local_conjugacy(sys.field, cut, quad, flow, resolve_form(cfg));
    } else if (cfg.mode == "global") {
        ctx.global =
            make_global_conjugacy(sys.field, cut, quad, flow, cfg.t_max, cfg.r_init);
    } else {
        raise(Errc::config_error, "unknown mode: " + cfg.mode);
    }
    return ctx;
}

std::string join17(const Vec& v) {
    std::string s;
    for (int i = 0; i < v.size(); ++i) {
        if (i) s += ',';
        s += fmt_g17(v[i]);
    }
    return s;
}

Vec parse_point(const std::string& text, int dim) {
    std::vector<double> vals;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            vals.push_back(std::stod(item));
        } catch (const std::exception&) {
            raise(Errc::config_error, "bad point component: " + item);
        }
    }
    if (static_cast<int>(vals.size()) != dim)
        raise(Errc::config_error, "point '" + text + "' has " +
                                      std::to_string(vals.size()) + " components, field has " +
                                      std::to_string(dim));
    Vec x(dim);
    for (int i = 0; i < dim; ++i) x[i] = vals[i];
    return x;
}

int cmd_examples() {
    for (const auto& ex : builtin_examples()) {
        std::cout << ex.name << " dim=" << ex.field.dim
                  << " closed_flow=" << (ex.closed_flow ? "yes" : "no")
                  << " closed_H=" << (ex.closed_H ? "yes" : "no")
                  << " roa=" << (ex.roa_descriptor.empty() ? "-" : ex.roa_descriptor)
                  << "\n";
    }
    return kExitOk;
}

int cmd_map(const RunConfig& cfg, const std::vector<std::string>& point_args) {
    ResolvedSystem sys = resolve_system(cfg);
    MapContext ctx = build_context(cfg, sys);

    std::vector<Vec> points;
    for (const auto& p : point_args) points.push_back(parse_point(p, ctx.dim()));

    std::ostringstream lines;
    for (const Vec& x : points) {
        lines << "x=" << join17(x);
        try {
            Vec y = ctx.map(x);
            lines << " y=" << join17(y) << " status=ok\n";
        } catch (const Error& e) {
            lines << " y= status=" << errc_name(e.code()) << "\n";
        }
    }
    if (cfg.out.empty()) {
        std::cout << lines.str();
    } else {
        std::ofstream out(cfg.out, std::ios::binary);
        if (!out || !(out << lines.str())) {
            std::cerr << "error: cannot write " << cfg.out << "\n";
            return kExitWrite;
        }
    }
    return kExitOk;
}

struct GridAxis {
    double lo, hi;
    int steps;
};

std::vector<GridAxis> parse_grid(const std::string& box, const std::string& steps,
                                 int dim) {
    std::vector<GridAxis> axes;
    {
        std::stringstream ss(box);
        std::string item;
        while (std::getline(ss, item, ',')) {
            auto colon = item.find(':');
            if (colon == std::string::npos)
                raise(Errc::config_error, "box entry '" + item + "' is not lo:hi");
            try {
                axes.push_back({std::stod(item.substr(0, colon)),
                                std::stod(item.substr(colon + 1)), 0});
            } catch (const std::exception&) {
                raise(Errc::config_error, "bad box entry: " + item);
            }
        }
    }
    if (static_cast<int>(axes.size()) != dim)
        raise(Errc::config_error, "box has " + std::to_string(axes.size()) +
                                      " axes, field has " + std::to_string(dim));
    std::vector<int> counts;
    {
        std::stringstream ss(steps);
        std::string item;
        while (std::getline(ss, item, ',')) {
            try {
                counts.push_back(std::stoi(item));
            } catch (const std::exception&) {
                raise(Errc::config_error, "bad steps entry: " + item);
            }
        }
    }
    if (counts.size() == 1) counts.assign(dim, counts[0]);
    if (static_cast<int>(counts.size()) != dim)
        raise(Errc::config_error, "steps must be one count or one per axis");
    for (int i = 0; i < dim; ++i) {
        if (counts[i] < 1) raise(Errc::config_error, "steps must be >= 1");
        axes[i].steps = counts[i];
    }
    return axes;
}

int cmd_grid(const RunConfig& cfg, const std::string& box, const std::string& steps) {
    ResolvedSystem sys = resolve_system(cfg);
    MapContext ctx = build_context(cfg, sys);
    const int dim = ctx.dim();
    if (cfg.out.empty()) raise(Errc::config_error, "grid requires --out");
    std::vector<GridAxis> axes = parse_grid(box, steps, dim);

    long total = 1;
    for (const auto& ax : axes) total *= ax.steps;
    if (total > 10'000'000) raise(Errc::config_error, "grid too large");

    auto point_at = [&](long index) {
        Vec x(dim);
        long rem = index;
        for (int d = dim - 1; d >= 0; --d) {
            int i = static_cast<int>(rem % axes[d].steps);
            rem /= axes[d].steps;
            x[d] = axes[d].steps == 1
                       ? axes[d].lo
                       : axes[d].lo + (axes[d].hi - axes[d].lo) * i / (axes[d].steps - 1);
        }
        return x;
    };

    std::vector<std::string> rows(total);
    auto eval_row = [&](long index) {
        Vec x = point_at(index);
        std::string row = join17(x);
        try {
            Vec y = ctx.map(x);
            row += ',' + join17(y) + ",ok";
        } catch (const Error& e) {
            std::string status = "error";
            if (e.code() == Errc::not_in_region_of_attraction) status = "outside_roa";
            if (e.code() == Errc::diverged) status = "diverged";
            Vec nanv = Vec::Constant(dim, std::numeric_limits<double>::quiet_NaN());
            row += ',' + join17(nanv) + ',' + status;
        }
        rows[index] = std::move(row);
    };

    int workers = std::max(1, cfg.threads);
    if (workers == 1) {
        for (long i = 0; i < total; ++i) eval_row(i);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                for (long i = w; i < total; i += workers) eval_row(i);
            });
        for (auto& th : pool) th.join();
    }

    std::ofstream out(cfg.out, std::ios::binary);
    if (!out) {
        std::cerr << "error: cannot write " << cfg.out << "\n";
        return kExitWrite;
    }
    for (int d = 0; d < dim; ++d) out << 'x' << (d + 1) << ',';
    for (int d = 0; d < dim; ++d) out << 'y' << (d + 1) << ',';
    out << "status\n";
    for (const auto& row : rows) out << row << '\n';
    if (!out) {
        std::cerr << "error: short write to " << cfg.out << "\n";
        return kExitWrite;
    }
    return kExitOk;
}

int cmd_verify(const RunConfig& cfg) {
    auto t0 = std::chrono::steady_clock::now();
    ResolvedSystem sys = resolve_system(cfg);
    MapContext ctx = build_context(cfg, sys);

    SuiteOptions opts;
    opts.seed = cfg.seed;
    opts.n_points = cfg.n_points;

    ReportMetadata meta;
    meta.system = cfg.system;
    meta.mode = cfg.mode;
    meta.cutoff = cfg.cutoff == "auto" ? (cfg.mode == "global" ? "none" : "ball")
                                       : cfg.cutoff;
    meta.quad_tol = cfg.quad_tol;
    meta.flow_tol = cfg.flow_tol;

    VerificationReport report =
        ctx.local ? run_suite_local(*ctx.local, sys.example, opts, meta)
                  : run_suite_global(*ctx.global, sys.example, opts, meta);
    report.metadata.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::string json = report_to_json(report);
    int failed = 0;
    for (const auto& c : report.checks)
        if (!c.pass) ++failed;

    std::ostringstream summary;
    summary << "verify system=" << cfg.system << " mode=" << cfg.mode
            << " checks=" << report.checks.size() << " failed=" << failed
            << " wall=" << report.metadata.wall_time_seconds << "s\n";

    if (cfg.out.empty()) {
        std::cerr << summary.str();
        std::cout << json;
    } else {
        std::ofstream out(cfg.out, std::ios::binary);
        if (!out || !(out << json)) {
            std::cerr << "error: cannot write " << cfg.out << "\n";
            return kExitWrite;
        }
        std::cout << summary.str();
    }
    return report.all_pass() ? kExitOk : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical linearizing conjugacies for hyperbolic equilibria"};
    app.require_subcommand(1);

    RunConfig cfg;
    std::string config_path;
    std::vector<std::string> points;
    std::string box, steps = "1";

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON config file (flags override)");
        sub->add_option("--system", cfg.system, "builtin name or polynomial field JSON");
        sub->add_option("--mode", cfg.mode, "local | global");
        sub->add_option("--cutoff", cfg.cutoff, "ball | threshold | none");
        sub->add_option("--M", cfg.M, "cutoff radius / threshold cap");
        sub->add_option("--eps", cfg.eps, "ball cutoff transition width");
        sub->add_option("--quad-tol", cfg.quad_tol, "quadrature tolerance");
        sub->add_option("--flow-tol", cfg.flow_tol, "integrator tolerance");
        sub->add_option("--t-max", cfg.t_max, "capture horizon (0 = auto)");
        sub->add_option("--seed", cfg.seed, "sampling seed");
        sub->add_option("--out", cfg.out, "output file");
        sub->add_option("--stable-form", cfg.stable_form,
                        "stable-block integral: auto | backward | forward");
        sub->add_option("--threads", cfg.threads, "grid worker threads");
        sub->add_option("--r-init", cfg.r_init, "dominance-ball search start");
        sub->add_option("--points", cfg.n_points, "verification sample count");
    };

    CLI::App* sub_examples = app.add_subcommand("examples", "list built-in systems");
    CLI::App* sub_map = app.add_subcommand("map", "evaluate H at points");
    add_common(sub_map);
    sub_map->add_option("--point", points, "comma-separated coordinates (repeatable)");
    CLI::App* sub_grid = app.add_subcommand("grid", "evaluate H over a grid, CSV out");
    add_common(sub_grid);
    sub_grid->add_option("--box", box, "per-axis ranges lo:hi[,lo:hi...]");
    sub_grid->add_option("--steps", steps, "points per axis (one count or per-axis)");
    CLI::App* sub_verify = app.add_subcommand("verify", "run the check suite");
    add_common(sub_verify);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitConfig;
    }

    try {
        // config file first, then re-apply flags so they take precedence
        if (!config_path.empty()) {
            RunConfig flag_values = cfg;
            cfg = RunConfig{};
            apply_json_config(cfg, config_path);
            for (CLI::App* sub : {sub_map, sub_grid, sub_verify}) {
                if (sub->parsed()) {
                    auto grab = [&](const char* name, auto& dst, auto& src) {
                        if (sub->count(name)) dst = src;
                    };
                    grab("--system", cfg.system, flag_values.system);
                    grab("--mode", cfg.mode, flag_values.mode);
                    grab("--cutoff", cfg.cutoff, flag_values.cutoff);
                    grab("--M", cfg.M, flag_values.M);
                    grab("--eps", cfg.eps, flag_values.eps);
                    grab("--quad-tol", cfg.quad_tol, flag_values.quad_tol);
                    grab("--flow-tol", cfg.flow_tol, flag_values.flow_tol);
                    grab("--t-max", cfg.t_max, flag_values.t_max);
                    grab("--seed", cfg.seed, flag_values.seed);
                    grab("--out", cfg.out, flag_values.out);
                    grab("--stable-form", cfg.stable_form, flag_values.stable_form);
                    grab("--threads", cfg.threads, flag_values.threads);
                    grab("--r-init", cfg.r_init, flag_values.r_init);
                    grab("--points", cfg.n_points, flag_values.n_points);
                }
            }
        }

        if (sub_examples->parsed()) return cmd_examples();
        if (sub_map->parsed()) return cmd_map(cfg, points);
        if (sub_grid->parsed()) return cmd_grid(cfg, box, steps);
        if (sub_verify->parsed()) return cmd_verify(cfg);
        return kExitConfig;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        switch (e.code()) {
            case Errc::not_hyperbolic:
            case Errc::not_stable_spectrum:
                return kExitSpectral;
            case Errc::io_error:
                return kExitConfig;
            default:
                return kExitConfig;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
}
