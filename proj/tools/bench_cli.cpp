// Benchmark CLI: dataset generation, single optimizer runs, multi-algorithm
// benchmark fan-out, and the invariant audit gate.
//
// Exit codes: 0 success, 1 audit failure, 2 usage/config error, 3 divergence.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "ssqn/audit.hpp"
#include "ssqn/data_io.hpp"
#include "ssqn/errors.hpp"
#include "ssqn/objectives.hpp"
#include "ssqn/solvers.hpp"

namespace fs = std::filesystem;
using namespace ssqn;

namespace {

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::string> split_list(const std::string& s, char sep = ',') {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Options shared by run/bench, overlayable from a key=value plan file.
// Precedence: explicit flags > plan values > defaults.

struct RunOptions {
    std::string data_path;
    std::string synthetic;  // "n,d,density"
    std::uint64_t data_seed = 1;
    bool normalize = false;
    std::string problem = "svm";
    std::string algo = "spider_sqn";
    std::string algos;  // bench: comma list, falls back to `algo`
    std::string mode = "finite-sum";
    double eta = 0.001;
    double beta = 0.001;
    double r = 0.001;
    std::string step = "practical";
    double L = 0.0;
    double sigma_min = 0.0;
    double sigma_max = 0.0;
    double kappa = 0.0;
    double sigma1 = 1.0;
    std::uint64_t q = 0;  // 0 -> default 2n/batch (finite-sum)
    std::uint64_t batch = 256;
    std::uint64_t refresh_batch = 0;
    std::uint64_t m = 5;
    double delta = 1.0;
    std::uint64_t K = 1;
    std::uint64_t seed = 0;
    std::string seeds;  // bench: comma list
    std::string lambda_rule = "max";
    std::string output_rule = "last";
    std::uint64_t checkpoint_every = 1;
    std::string out = "-";
    std::string plan;
};

// Registers the shared flags on a subcommand and returns appliers used to
// overlay plan-file values onto flags the user did not set explicitly.
using Applier = std::function<void(const std::string&)>;

struct OptionTable {
    std::map<std::string, CLI::Option*> opts;
    std::map<std::string, Applier> apply;
};

template <typename T>
void parse_into(const std::string& v, T& dst) {
    std::istringstream ss(v);
    ss >> dst;
    if (ss.fail()) throw ConfigError("bad plan value: " + v);
}

void parse_into(const std::string& v, std::string& dst) { dst = v; }

void parse_into(const std::string& v, bool& dst) {
    if (v == "1" || v == "true" || v == "yes") dst = true;
    else if (v == "0" || v == "false" || v == "no") dst = false;
    else throw ConfigError("bad plan boolean: " + v);
}

template <typename T>
void reg(OptionTable& table, CLI::App* cmd, const std::string& flag, T& field,
         const std::string& help) {
    CLI::Option* o = cmd->add_option("--" + flag, field, help);
    table.opts[flag] = o;
    table.apply[flag] = [&field](const std::string& v) { parse_into(v, field); };
}

OptionTable register_run_options(CLI::App* cmd, RunOptions& o, bool bench) {
    OptionTable t;
    reg(t, cmd, "data", o.data_path, "LIBSVM dataset path");
    reg(t, cmd, "synthetic", o.synthetic, "synthetic dataset spec n,d,density");
    reg(t, cmd, "data-seed", o.data_seed, "seed for synthetic dataset generation");
    reg(t, cmd, "problem", o.problem, "objective: svm | robust | logistic");
    reg(t, cmd, "algo", o.algo, "algorithm name");
    if (bench) reg(t, cmd, "algos", o.algos, "comma list of algorithms");
    reg(t, cmd, "mode", o.mode, "finite-sum | online");
    reg(t, cmd, "eta", o.eta, "step size for non-momentum algorithms");
    reg(t, cmd, "beta", o.beta, "base step size for momentum algorithms");
    reg(t, cmd, "r", o.r, "regularization weight");
    reg(t, cmd, "step", o.step, "practical | theoretical");
    reg(t, cmd, "L", o.L, "smoothness constant (theoretical step)");
    reg(t, cmd, "sigma-min", o.sigma_min, "Hessian eigenvalue lower bound");
    reg(t, cmd, "sigma-max", o.sigma_max, "Hessian eigenvalue upper bound");
    reg(t, cmd, "kappa", o.kappa, "curvature bound surrogate for sigma bounds");
    reg(t, cmd, "sigma1", o.sigma1, "online gradient-variance proxy");
    reg(t, cmd, "q", o.q, "epoch length (0 -> 2n/batch)");
    reg(t, cmd, "batch", o.batch, "mini-batch size");
    reg(t, cmd, "refresh-batch", o.refresh_batch, "online refresh batch |xi_0|");
    reg(t, cmd, "m", o.m, "L-BFGS memory (0 disables the engine)");
    reg(t, cmd, "delta", o.delta, "damping floor delta");
    reg(t, cmd, "K", o.K, "iteration budget");
    reg(t, cmd, "seed", o.seed, "run seed");
    if (bench) reg(t, cmd, "seeds", o.seeds, "comma list of run seeds");
    reg(t, cmd, "lambda-rule", o.lambda_rule, "lambda_k choice: min | mid | max");
    reg(t, cmd, "output-rule", o.output_rule, "last | uniform");
    reg(t, cmd, "checkpoint-every", o.checkpoint_every, "checkpoint cadence in iterations");
    reg(t, cmd, "out", o.out, bench ? "output directory" : "output CSV path (- = stdout)");
    t.opts["normalize"] = cmd->add_flag("--normalize", o.normalize, "max-abs feature scaling");
    t.apply["normalize"] = [&o](const std::string& v) { parse_into(v, o.normalize); };
    cmd->add_option("--plan", o.plan, "key=value plan file; flags take precedence");
    return t;
}

void overlay_plan(const RunOptions& o, const OptionTable& table) {
    if (o.plan.empty()) return;
    std::ifstream in(o.plan);
    if (!in) throw IoError("cannot open plan file: " + o.plan);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("plan line " + std::to_string(lineno) + ": expected key=value");
        }
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        const auto it = table.apply.find(key);
        if (it == table.apply.end()) throw ConfigError("unknown plan key: " + key);
        if (table.opts.at(key)->count() == 0) it->second(val);
    }
}

// ---------------------------------------------------------------------------

ProblemKind parse_problem(const std::string& name) {
    if (name == "svm") return ProblemKind::Svm;
    if (name == "robust") return ProblemKind::Robust;
    if (name == "logistic") return ProblemKind::Logistic;
    throw ConfigError("unknown problem: " + name);
}

struct SyntheticSpec {
    std::size_t n = 0, d = 0;
    double density = 0.0;
};

SyntheticSpec parse_synthetic(const std::string& spec) {
    const auto parts = split_list(spec);
    if (parts.size() != 3) throw ConfigError("--synthetic expects n,d,density");
    SyntheticSpec s;
    parse_into(parts[0], s.n);
    parse_into(parts[1], s.d);
    parse_into(parts[2], s.density);
    if (s.n < 1 || s.d < 1) throw ConfigError("--synthetic needs n >= 1, d >= 1");
    if (!(s.density > 0.0) || s.density > 1.0) {
        throw ConfigError("--synthetic density must be in (0, 1]");
    }
    return s;
}

std::shared_ptr<const Dataset> load_dataset(const RunOptions& o) {
    std::shared_ptr<Dataset> data;
    if (!o.data_path.empty()) {
        data = std::make_shared<Dataset>(parse_libsvm_file(o.data_path));
    } else if (!o.synthetic.empty()) {
        const SyntheticSpec s = parse_synthetic(o.synthetic);
        data = std::make_shared<Dataset>(generate_synthetic(s.n, s.d, s.density, o.data_seed));
    } else {
        throw ConfigError("need --data PATH or --synthetic n,d,density");
    }
    if (o.normalize) maxabs_scale(*data);
    return data;
}

SolverConfig build_config(const RunOptions& o, std::size_t n, const std::string& algo,
                          std::uint64_t seed) {
    SolverConfig cfg;
    cfg.algorithm = parse_algorithm(algo);
    cfg.mode = o.mode == "online" ? Mode::online : Mode::finite_sum;
    if (o.mode != "online" && o.mode != "finite-sum") {
        throw ConfigError("unknown mode: " + o.mode);
    }
    cfg.batch = o.batch;
    if (o.q > 0) {
        cfg.q = o.q;
    } else if (cfg.mode == Mode::finite_sum) {
        cfg.q = std::max<std::size_t>(1, 2 * n / std::max<std::size_t>(1, o.batch));
    } else {
        throw ConfigError("online mode needs an explicit --q");
    }
    cfg.refresh_batch = o.refresh_batch;
    if (o.step == "theoretical") cfg.step = StepRule::theoretical;
    else if (o.step != "practical") throw ConfigError("unknown step rule: " + o.step);
    cfg.eta = o.eta;
    cfg.beta = o.beta;
    cfg.L = o.L;
    cfg.sigma_min = o.sigma_min;
    cfg.sigma_max = o.sigma_max;
    cfg.kappa = o.kappa;
    cfg.m = o.m;
    cfg.delta = o.delta;
    cfg.K = std::max<std::uint64_t>(1, o.K);
    cfg.seed = seed;
    if (o.lambda_rule == "min") cfg.lambda_rule = LambdaRule::min;
    else if (o.lambda_rule == "mid") cfg.lambda_rule = LambdaRule::mid;
    else if (o.lambda_rule == "max") cfg.lambda_rule = LambdaRule::max;
    else throw ConfigError("unknown lambda rule: " + o.lambda_rule);
    if (o.output_rule == "uniform") cfg.output_rule = OutputRule::uniform_random_iterate;
    else if (o.output_rule != "last") throw ConfigError("unknown output rule: " + o.output_rule);
    cfg.checkpoint_every = o.checkpoint_every;
    return cfg;
}

SyntheticExampleStream::Loss stream_loss(ProblemKind kind) {
    switch (kind) {
        case ProblemKind::Svm: return SyntheticExampleStream::Loss::Svm;
        case ProblemKind::Robust: return SyntheticExampleStream::Loss::Robust;
        case ProblemKind::Logistic: return SyntheticExampleStream::Loss::Logistic;
    }
    throw ConfigError("unknown problem kind");
}

struct RunResult {
    std::string algo;
    std::uint64_t seed = 0;
    RunTrace trace;
    bool diverged = false;
    std::string error;
};

RunResult execute_one(const RunOptions& o, const std::string& algo, std::uint64_t seed,
                      const std::shared_ptr<const Objective>& obj,
                      const std::shared_ptr<const StreamingOracle>& stream) {
    RunResult res;
    res.algo = algorithm_name(parse_algorithm(algo));
    res.seed = seed;
    try {
        if (stream) {
            const SolverConfig cfg = build_config(o, 0, algo, seed);
            res.trace = solve_online(cfg, *stream);
        } else {
            const SolverConfig cfg = build_config(o, obj->num_components(), algo, seed);
            res.trace = solve(cfg, *obj);
        }
    } catch (const DivergenceError& e) {
        res.diverged = true;
        res.error = e.what();
    }
    return res;
}

void write_trace_csv(std::ostream& out, const RunResult& res) {
    out << "algorithm,seed,k,paper_sfo,grad_evals,f,grad_norm,wall_ms\n";
    for (const Checkpoint& c : res.trace.checkpoints) {
        out << res.algo << ',' << res.seed << ',' << c.k << ',' << c.paper_sfo << ','
            << c.grad_evals << ',' << fmt17(c.f) << ',' << fmt17(c.grad_norm) << ','
            << fmt17(c.wall_ms) << '\n';
    }
}

// ---------------------------------------------------------------------------

int cmd_gen_data(std::size_t n, std::size_t d, double density, std::uint64_t seed,
                 const std::string& out) {
    if (n < 1 || d < 1) throw ConfigError("need n >= 1 and d >= 1");
    if (!(density > 0.0) || density > 1.0) throw ConfigError("density must be in (0, 1]");
    const Dataset data = generate_synthetic(n, d, density, seed);
    std::ofstream f(out);
    if (!f) throw IoError("cannot open output file: " + out);
    write_libsvm(data, f);
    f.flush();
    if (!f) throw IoError("write failed: " + out);
    std::size_t nnz = 0;
    for (const auto& ex : data.examples) nnz += ex.values.size();
    std::printf("n=%zu d=%zu density=%.6f\n", data.n(), data.d,
                static_cast<double>(nnz) / (static_cast<double>(n) * d));
    return 0;
}

int cmd_run(const RunOptions& o) {
    std::shared_ptr<const Objective> obj;
    std::shared_ptr<const StreamingOracle> stream;
    const ProblemKind kind = parse_problem(o.problem);
    if (o.mode == "online") {
        const SyntheticSpec s = parse_synthetic(
            o.synthetic.empty() ? throw ConfigError("online mode needs --synthetic n,d,density")
                                : o.synthetic);
        stream = std::make_shared<SyntheticExampleStream>(s.d, s.density, o.r, stream_loss(kind),
                                                          o.data_seed, o.sigma1);
    } else {
        obj = make_objective(kind, load_dataset(o), o.r);
    }

    RunResult res;
    if (o.K == 0) {
        // No-op run: a single checkpoint at the start point.
        res.algo = algorithm_name(parse_algorithm(o.algo));
        res.seed = o.seed;
        Checkpoint c;
        const DenseVector x0(obj ? obj->dim() : stream->dim(), 0.0);
        c.f = obj ? obj->value(x0) : stream->population_value(x0);
        c.grad_norm = norm2(obj ? full_grad_raw(*obj, x0) : stream->population_grad(x0));
        res.trace.checkpoints.push_back(c);
    } else {
        res = execute_one(o, o.algo, o.seed, obj, stream);
    }
    if (res.diverged) {
        std::cerr << "divergence: " << res.error << "\n";
        return 3;
    }
    if (o.out == "-") {
        write_trace_csv(std::cout, res);
    } else {
        std::ofstream f(o.out);
        if (!f) throw IoError("cannot open output file: " + o.out);
        write_trace_csv(f, res);
    }
    return 0;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

int cmd_bench(const RunOptions& o) {
    const std::vector<std::string> algos =
        split_list(o.algos.empty() ? o.algo : o.algos);
    std::vector<std::uint64_t> seeds;
    for (const auto& s : split_list(o.seeds.empty() ? std::to_string(o.seed) : o.seeds)) {
        std::uint64_t v = 0;
        parse_into(s, v);
        seeds.push_back(v);
    }
    if (algos.empty()) throw ConfigError("bench needs at least one algorithm");
    const fs::path out_dir = o.out == "-" ? fs::path("bench_out") : fs::path(o.out);
    fs::create_directories(out_dir);

    // One shared problem instance; solvers touch it read-only.
    std::shared_ptr<const Objective> obj;
    std::shared_ptr<const StreamingOracle> stream;
    const ProblemKind kind = parse_problem(o.problem);
    if (o.mode == "online") {
        if (o.synthetic.empty()) throw ConfigError("online mode needs --synthetic n,d,density");
        const SyntheticSpec s = parse_synthetic(o.synthetic);
        stream = std::make_shared<SyntheticExampleStream>(s.d, s.density, o.r, stream_loss(kind),
                                                          o.data_seed, o.sigma1);
    } else {
        obj = make_objective(kind, load_dataset(o), o.r);
    }
    // Validate every config up front so bad plans fail before the fan-out.
    for (const auto& algo : algos) {
        build_config(o, obj ? obj->num_components() : 0, algo, seeds.front()).validate();
    }

    struct Job {
        std::string algo;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (const auto& a : algos) {
        for (const auto s : seeds) jobs.push_back({a, s});
    }
    std::vector<RunResult> results(jobs.size());
    std::atomic<std::size_t> next{0};
    const std::size_t workers =
        std::min<std::size_t>(jobs.size(),
                              std::max(1u, std::thread::hardware_concurrency()));
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < jobs.size(); i = next.fetch_add(1)) {
                results[i] = execute_one(o, jobs[i].algo, jobs[i].seed, obj, stream);
            }
        });
    }
    for (auto& t : pool) t.join();

    // Merge in deterministic plan order.
    std::ofstream summary(out_dir / "summary.csv");
    if (!summary) throw IoError("cannot open summary.csv");
    summary << "algorithm,seed,final_f,final_grad_norm,paper_sfo,grad_evals,status\n";
    std::size_t failures = 0;
    for (const RunResult& res : results) {
        const fs::path trace_path =
            out_dir / (res.algo + "_seed" + std::to_string(res.seed) + ".csv");
        std::ofstream tf(trace_path);
        if (!tf) throw IoError("cannot open " + trace_path.string());
        write_trace_csv(tf, res);
        if (res.diverged) {
            ++failures;
            summary << res.algo << ',' << res.seed << ",nan,nan,0,0,diverged\n";
            continue;
        }
        const Checkpoint& last = res.trace.checkpoints.back();
        summary << res.algo << ',' << res.seed << ',' << fmt17(last.f) << ','
                << fmt17(last.grad_norm) << ',' << res.trace.counter.paper_sfo << ','
                << res.trace.counter.component_grad_evals << ",ok\n";
    }
    for (const auto& algo : algos) {
        const std::string canon = algorithm_name(parse_algorithm(algo));
        std::vector<double> fs_, gs_, sfo_, ev_;
        for (const RunResult& res : results) {
            if (res.algo != canon || res.diverged) continue;
            const Checkpoint& last = res.trace.checkpoints.back();
            fs_.push_back(last.f);
            gs_.push_back(last.grad_norm);
            sfo_.push_back(static_cast<double>(res.trace.counter.paper_sfo));
            ev_.push_back(static_cast<double>(res.trace.counter.component_grad_evals));
        }
        if (fs_.empty()) {
            summary << canon << ",median,nan,nan,0,0,all-failed\n";
            continue;
        }
        summary << canon << ",median," << fmt17(median(fs_)) << ',' << fmt17(median(gs_))
                << ',' << fmt17(median(sfo_)) << ',' << fmt17(median(ev_)) << ",ok\n";
    }
    std::printf("bench: %zu runs, %zu diverged, output in %s\n", jobs.size(), failures,
                out_dir.string().c_str());
    return failures == jobs.size() ? 3 : 0;
}

int cmd_audit(const std::string& inject, std::uint64_t seed) {
    const AuditReport report = run_audit(parse_fault(inject), seed);
    for (const AuditCheck& c : report.checks) {
        std::printf("%s  %-28s margin=%.6g  %s\n", c.pass ? "PASS" : "FAIL", c.name.c_str(),
                    c.margin, c.detail.c_str());
    }
    if (!report.all_pass()) {
        for (const AuditCheck& c : report.checks) {
            if (!c.pass) std::printf("violated invariant: %s\n", c.name.c_str());
        }
        return 1;
    }
    std::printf("audit: all invariants hold\n");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SpiderSQN benchmark harness"};
    app.require_subcommand(1);

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "generate a synthetic LIBSVM dataset");
    std::size_t gen_n = 1000, gen_d = 50;
    double gen_density = 0.05;
    std::uint64_t gen_seed = 1;
    std::string gen_out = "synthetic.libsvm";
    gen->add_option("--n", gen_n, "number of examples");
    gen->add_option("--d", gen_d, "feature dimension");
    gen->add_option("--density", gen_density, "expected nonzero fraction, in (0, 1]");
    gen->add_option("--seed", gen_seed, "generator seed");
    gen->add_option("--out", gen_out, "output path");

    RunOptions run_o;
    auto* run = app.add_subcommand("run", "single optimizer run, CSV trace out");
    OptionTable run_table = register_run_options(run, run_o, false);

    RunOptions bench_o;
    auto* bench = app.add_subcommand("bench", "algorithms x seeds fan-out with summary");
    OptionTable bench_table = register_run_options(bench, bench_o, true);

    auto* audit = app.add_subcommand("audit", "invariant audit gate");
    std::string audit_inject = "none";
    std::uint64_t audit_seed = 2024;
    audit->add_option("--inject", audit_inject,
                      "fault injection: none | damping-off | gamma-floor-off | spider-batch");
    audit->add_option("--seed", audit_seed, "audit seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed()) return cmd_gen_data(gen_n, gen_d, gen_density, gen_seed, gen_out);
        if (run->parsed()) {
            overlay_plan(run_o, run_table);
            return cmd_run(run_o);
        }
        if (bench->parsed()) {
            overlay_plan(bench_o, bench_table);
            return cmd_bench(bench_o);
        }
        if (audit->parsed()) return cmd_audit(audit_inject, audit_seed);
    } catch (const DivergenceError& e) {
        std::cerr << "divergence: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
