// End-to-end acceptance checks: one printed line per check, pinned
// tolerances, exit 0 only if every check passes.  argv[1] is the path to the
// CLI binary (the grid/rate/determinism checks shell out to it).

#include <sys/wait.h>

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "specbool/analysis.hpp"
#include "specbool/baselines.hpp"
#include "specbool/hypercube.hpp"
#include "specbool/io.hpp"
#include "specbool/models.hpp"
#include "specbool/rng.hpp"
#include "specbool/spectral_reg.hpp"
#include "specbool/synth.hpp"
#include "specbool/trainer.hpp"

namespace fs = std::filesystem;
using namespace specbool;

namespace {

std::string g_cli;
fs::path g_root;

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double s() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

int run(const std::string& args) {
    const std::string cmd = g_cli + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    if (rc == -1 || !WIFEXITED(rc))
        return -1;
    return WEXITSTATUS(rc);
}

void report(int idx, const char* name, bool pass, const std::string& detail, double secs) {
    std::printf("%s %2d. %s (%s; %.1fs)\n", pass ? "PASS" : "FAIL", idx, name, detail.c_str(),
                secs);
    std::fflush(stdout);
}

// --------------------------------------------------------------------------
// 1. transform involution + fast/naive equality

bool c1_wht() {
    Timer t;
    Rng rng(101);
    double worst = 0.0;
    for (int d = 1; d <= 14; ++d) {
        const size_t M = size_t(1) << d;
        std::vector<double> v(M), w;
        for (double& x : v)
            x = rng.gaussian();
        w = v;
        fwht_in_place(std::span<double>(w));
        fwht_in_place(std::span<double>(w));
        double vmax = 0.0, emax = 0.0;
        for (size_t i = 0; i < M; ++i) {
            vmax = std::max(vmax, std::fabs(v[i]));
            emax = std::max(emax, std::fabs(w[i] / double(M) - v[i]));
        }
        worst = std::max(worst, emax / vmax);
    }
    bool exact = true;
    for (int d = 1; d <= 8; ++d) {
        const size_t M = size_t(1) << d;
        std::vector<double> v(M);
        std::vector<int64_t> vi(M);
        for (size_t i = 0; i < M; ++i) {
            vi[i] = int64_t(rng.uniform_index(17)) - 8;
            v[i] = double(vi[i]);
        }
        std::vector<double> fast = v;
        fwht_in_place(std::span<double>(fast));
        std::vector<int64_t> fi = vi;
        fwht_in_place(std::span<int64_t>(fi));
        for (size_t i = 0; i < M; ++i) {
            double acc = 0.0;
            for (size_t m = 0; m < M; ++m)
                acc += (std::popcount(i & m) & 1) ? -v[m] : v[m];
            if (fast[i] != acc || double(fi[i]) != acc)
                exact = false;
        }
    }
    const double secs = t.s();
    const bool pass = worst <= 1e-12 && exact && secs < 1.0;
    char buf[128];
    std::snprintf(buf, sizeof buf, "involution rel err %.2e, naive equality %s", worst,
                  exact ? "exact" : "BROKEN");
    report(1, "wht-involution-and-naive-equality", pass, buf, secs);
    return pass;
}

// --------------------------------------------------------------------------
// 2. penalty value on linear models == lambda * l1(theta)

bool c2_linear_value() {
    Timer t;
    Rng rng(202);
    double worst_api = 0.0, worst_oracle = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int d = 1 + trial % 12;
        LinearModel model(d);
        for (double& x : model.params())
            x = rng.gaussian();
        RegConfig cfg;
        cfg.lambda = 0.01 + 0.99 * rng.uniform();
        double l1 = 0.0;
        for (double x : model.params())
            l1 += std::fabs(x);
        const double want = cfg.lambda * l1;
        worst_api = std::max(worst_api,
                             std::fabs(regularizer_value(model, cfg) - want) / want);
        // Independent transform-path oracle for the same identity.
        FunctionTable table = model.eval_all();
        fwht_in_place(std::span<double>(table.values));
        double tl1 = 0.0;
        for (double v : table.values)
            tl1 += std::fabs(v);
        const double via_transform = cfg.lambda * tl1 / double(table.values.size());
        worst_oracle = std::max(worst_oracle, std::fabs(via_transform - want) / want);
    }
    const bool pass = worst_api <= 1e-10 && worst_oracle <= 1e-10;
    char buf[128];
    std::snprintf(buf, sizeof buf, "api rel err %.2e, transform oracle %.2e", worst_api,
                  worst_oracle);
    report(2, "linear-penalty-identity", pass, buf, t.s());
    return pass;
}

// --------------------------------------------------------------------------
// 3. subgradient vs central finite differences; exact sign form for linear

std::vector<double> fd_of_regularizer(Model& model, const RegConfig& cfg) {
    const double h = 1e-6;
    std::vector<double>& theta = model.params();
    std::vector<double> fd(theta.size());
    for (size_t j = 0; j < theta.size(); ++j) {
        const double keep = theta[j];
        theta[j] = keep + h;
        const double up = regularizer_value(model, cfg);
        theta[j] = keep - h;
        const double dn = regularizer_value(model, cfg);
        theta[j] = keep;
        fd[j] = (up - dn) / (2.0 * h);
    }
    return fd;
}

double rel_vec_err(const std::vector<double>& a, const std::vector<double>& b) {
    double num = 0.0, den = 0.0;
    for (size_t j = 0; j < a.size(); ++j) {
        num += (a[j] - b[j]) * (a[j] - b[j]);
        den += b[j] * b[j];
    }
    return std::sqrt(num) / std::max(1e-30, std::sqrt(den));
}

bool c3_subgradient() {
    Timer t;
    Rng rng(303);
    RegConfig cfg;
    cfg.lambda = 0.1;

    bool linear_exact = true;
    {
        LinearModel model(9);
        for (double& x : model.params())
            while (std::fabs(x = rng.gaussian()) < 1e-6) {
            }
        RegEval re = regularizer_subgradient(model, cfg);
        for (size_t j = 0; j < model.params().size(); ++j) {
            const double want = model.params()[j] > 0.0 ? cfg.lambda : -cfg.lambda;
            if (re.grad[j] != want)
                linear_exact = false;
        }
    }

    double worst = 0.0;
    auto fd_check = [&](Model& model) {
        RegEval re = regularizer_subgradient(model, cfg);
        worst = std::max(worst, rel_vec_err(re.grad, fd_of_regularizer(model, cfg)));
        return re;
    };
    {
        auto model = init_model(parse_model_spec("poly:full", 6), 1);
        for (double& x : model->params())
            while (std::fabs(x = rng.gaussian()) < 1e-6) {
            }
        fd_check(*model);
    }
    {
        PolynomialModel model(6, {1, 5, 9, 20});
        for (double& x : model.params())
            while (std::fabs(x = rng.gaussian()) < 1e-6) {
            }
        fd_check(model);
    }
    double mlp_min_alpha = 0.0;
    {
        // Generic transform path; needs a reference point whose spectrum is
        // bounded away from the kinks.  Zero-bias initializations are odd
        // functions with exactly-vanishing even coefficients, so jitter every
        // parameter before probing.
        std::unique_ptr<Model> model;
        for (uint64_t seed = 1; seed <= 200; ++seed) {
            model = init_model(parse_model_spec("mlp:6,6", 4), seed);
            for (double& x : model->params())
                x += 0.05 * rng.gaussian();
            RegEval probe = regularizer_subgradient(*model, cfg);
            if (probe.min_abs_alpha > 1e-8) {
                mlp_min_alpha = probe.min_abs_alpha;
                break;
            }
            model.reset();
        }
        if (model == nullptr) {
            report(3, "penalty-subgradient-fidelity", false,
                   "no generic mlp reference point found", t.s());
            return false;
        }
        fd_check(*model);
    }
    const bool pass = linear_exact && worst <= 1e-4;
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "linear sign form %s, fd rel err %.2e, mlp min|alpha| %.1e",
                  linear_exact ? "exact" : "BROKEN", worst, mlp_min_alpha);
    report(3, "penalty-subgradient-fidelity", pass, buf, t.s());
    return pass;
}

// --------------------------------------------------------------------------
// 4. exhaustive transform l1 extremum bound

bool c4_extremum() {
    Timer t;
    bool ok = true;
    double worst_slack = std::numeric_limits<double>::infinity();
    for (int d = 1; d <= 4; ++d) {
        const HadamardL1Extremum ext = hadamard_l1_extremum(d);
        const double bound = double(2 * d + 1) * double(size_t(1) << d);
        ok = ok && ext.max_l1 <= bound;
        worst_slack = std::min(worst_slack, bound - ext.max_l1);
    }
    const double secs = t.s();
    const bool pass = ok && secs < 120.0;
    char buf[128];
    std::snprintf(buf, sizeof buf, "all sign vectors d=1..4, min slack %.0f", worst_slack);
    report(4, "hadamard-l1-extremal-bound", pass, buf, secs);
    return pass;
}

// --------------------------------------------------------------------------
// 5. noise quantile under the envelope + 1/sqrt(n) scaling

bool c5_noise() {
    Timer t;
    const NoiseCheck base = noise_linf_check(8, 200, 1.0, 0.05, 2000, 7);
    const NoiseCheck quad = noise_linf_check(8, 800, 1.0, 0.05, 2000, 8);
    const double ratio = quad.quantile / base.quantile;
    const double secs = t.s();
    const bool pass =
        base.quantile <= base.envelope && ratio >= 0.4 && ratio <= 0.6 && secs < 120.0;
    char buf[160];
    std::snprintf(buf, sizeof buf, "q95 %.3f <= envelope %.3f, quadruple-n ratio %.3f", base.quantile,
                  base.envelope, ratio);
    report(5, "noise-quantile-envelope-and-scaling", pass, buf, secs);
    return pass;
}

// --------------------------------------------------------------------------
// 6. subgradient trainer and convex solver meet on the same objective

bool c6_agreement() {
    Timer t;
    GroundTruth truth = gen_power_law(8, 2, 3, 1.0, substream_seed(42, 0));
    Dataset data = sample_dataset(truth.spectrum, 200, 0.1, substream_seed(42, 1));
    const double lambda = 0.05;

    LassoConfig lcfg;
    lcfg.lambda = lambda;
    lcfg.kkt_target = 1e-9;
    lcfg.max_iters = 200000;
    LassoResult res = lasso_fista(data, lcfg);
    const double kkt = kkt_residual(data, res.alpha, lambda);

    auto model = init_model(parse_model_spec("poly:full", 8), substream_seed(1, 0));
    TrainConfig tcfg;
    tcfg.reg.lambda = lambda;
    tcfg.learning_rate = 0.1;
    tcfg.epochs = 8000;
    tcfg.log_every = 50;
    tcfg.halve_lr_on_increase = true;
    tcfg.seed = substream_seed(1, 1);
    TrainReport rep = train(*model, data, tcfg);
    const double gap = std::fabs((rep.final_mse + rep.final_reg) - res.objective);

    const double secs = t.s();
    const bool pass = gap <= 1e-5 && res.kkt_violation <= 1e-6 && kkt <= 1e-6 && secs < 60.0;
    char buf[160];
    std::snprintf(buf, sizeof buf, "objective gap %.2e, kkt %.2e", gap, kkt);
    report(6, "convex-solver-agreement", pass, buf, secs);
    return pass;
}

// --------------------------------------------------------------------------
// 7. support recovery + debiased coefficient error across seeds

bool c7_recovery() {
    Timer t;
    int successes = 0;
    double worst_err = 0.0;
    int support_hits = 0;
    for (uint64_t seed = 1; seed <= 10; ++seed) {
        GroundTruth truth = gen_power_law(10, 2, 5, 1.0, substream_seed(seed, 0));
        Dataset data = sample_dataset(truth.spectrum, 300, 0.1, substream_seed(seed, 1));
        LassoConfig cfg;
        cfg.lambda = theoretical_lambda(0.1, 10, 300, 0.05);
        LassoResult res = lasso_fista(data, cfg);

        std::vector<std::pair<double, uint32_t>> ranked;
        for (size_t m = 0; m < res.alpha.size(); ++m)
            if (res.alpha[m] != 0.0)
                ranked.push_back({-std::fabs(res.alpha[m]), uint32_t(m)});
        std::sort(ranked.begin(), ranked.end());
        std::set<uint32_t> top;
        for (size_t i = 0; i < ranked.size() && i < 5; ++i)
            top.insert(ranked[i].second);
        std::set<uint32_t> want;
        for (const auto& e : truth.spectrum.entries)
            want.insert(e.mask);
        const bool support_ok = top == want;
        if (!support_ok)
            continue;
        ++support_hits;

        Spectrum refit = ordinary_least_squares(
            data, std::vector<uint32_t>(want.begin(), want.end()));
        double err2 = 0.0;
        for (const auto& e : truth.spectrum.entries) {
            double got = 0.0;
            for (const auto& r : refit.entries)
                if (r.mask == e.mask)
                    got = r.coeff;
            err2 += (got - e.coeff) * (got - e.coeff);
        }
        const double err = std::sqrt(err2);
        worst_err = std::max(worst_err, err);
        if (err <= 0.1)
            ++successes;
    }
    const double secs = t.s();
    const bool pass = successes >= 9 && secs < 120.0;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%d/10 seeds (support %d/10, worst refit err %.3f)",
                  successes, support_hits, worst_err);
    report(7, "sparse-support-recovery", pass, buf, secs);
    return pass;
}

// --------------------------------------------------------------------------
// 8. error-vs-samples slope from the CLI grid runner

bool c8_rate() {
    Timer t;
    const fs::path out = g_root / "rate";
    const int rc = run("rate --d 8 --order 2 --k 3 --gamma 1.0 --sigma 0.1 "
                       "--n-grid 100,200,400,800,1600 --seeds 10 --seed 1 --out " +
                       out.string());
    double slope = 0.0;
    bool parsed = false;
    if (rc == 0) {
        const auto j = nlohmann::json::parse(read_text_file((out / "rate_summary.json").string()));
        if (j.contains("slope") && j["slope"].is_number()) {
            slope = j["slope"].get<double>();
            parsed = true;
        }
    }
    const double secs = t.s();
    const bool pass = rc == 0 && parsed && slope >= -0.65 && slope <= -0.35 && secs < 300.0;
    char buf[128];
    std::snprintf(buf, sizeof buf, "rc=%d slope=%.3f target [-0.65,-0.35]", rc, slope);
    report(8, "error-rate-slope", pass, buf, secs);
    return pass;
}

// --------------------------------------------------------------------------
// 9. curvature ratio of a linear model sits in the unit band

bool c9_conditioning() {
    Timer t;
    LinearModel model(10);
    Rng rng(33);
    for (double& x : model.params())
        x = rng.gaussian();
    Spectrum empty;
    empty.d = 10;
    Dataset inputs = sample_dataset(empty, 1000, 0.0, 34);
    const std::vector<double> sigmas = {0.01, 0.02, 0.05};
    std::vector<QGRow> rows = qg_estimate(model, inputs, sigmas, 500, 35);
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const auto& row : rows) {
        lo = std::min(lo, row.min_ratio_per_param);
        hi = std::max(hi, row.min_ratio_per_param);
    }
    const double secs = t.s();
    const bool pass = lo >= 0.5 && hi <= 1.5 && secs < 60.0;
    char buf[128];
    std::snprintf(buf, sizeof buf, "normalized ratio in [%.3f, %.3f]", lo, hi);
    report(9, "conditioning-ratio-band", pass, buf, secs);
    return pass;
}

// --------------------------------------------------------------------------
// 10. penalty advantage across the sample-size sweep (CLI grid)

bool c10_phase() {
    Timer t;
    const fs::path out = g_root / "phase";
    const int rc = run("phase --family monomial --d 10 --model mlp:64,64,64 --params 3 "
                       "--n-grid 25,50,100,200 --trials 5 --tau 0.45 --lambda 0.1 "
                       "--lr 0.05 --epochs 500 --warmup 100 --seed 1 --out " +
                       out.string());
    bool dominated = rc == 0;
    double best_gap = -1.0;
    size_t rows = 0;
    if (rc == 0) {
        const std::string text = read_text_file((out / "phase.csv").string());
        size_t pos = text.find('\n') + 1;
        while (pos < text.size()) {
            size_t end = text.find('\n', pos);
            if (end == std::string::npos)
                end = text.size();
            const std::string line = text.substr(pos, end - pos);
            pos = end + 1;
            if (line.empty())
                continue;
            std::vector<double> cells;
            for (size_t c = 0, nxt; c < line.size(); c = nxt + 1) {
                nxt = line.find(',', c);
                if (nxt == std::string::npos)
                    nxt = line.size();
                cells.push_back(std::stod(line.substr(c, nxt - c)));
            }
            const double frac_sp = cells.at(2), frac_nosp = cells.at(3);
            if (frac_sp < frac_nosp)
                dominated = false;
            best_gap = std::max(best_gap, frac_sp - frac_nosp);
            ++rows;
        }
    }
    const double secs = t.s();
    const bool pass = rc == 0 && rows == 4 && dominated && best_gap >= 0.6 && secs < 900.0;
    char buf[160];
    std::snprintf(buf, sizeof buf, "rc=%d rows=%zu dominated=%d best gap %.2f", rc, rows,
                  int(dominated), best_gap);
    report(10, "penalty-phase-advantage", pass, buf, secs);
    return pass;
}

// --------------------------------------------------------------------------
// 11. rerun determinism for every command

bool dirs_equal(const fs::path& a, const fs::path& b, std::string& why) {
    auto list = [](const fs::path& dir) {
        std::vector<std::string> names;
        for (const auto& entry : fs::recursive_directory_iterator(dir))
            if (entry.is_regular_file())
                names.push_back(fs::relative(entry.path(), dir).string());
        std::sort(names.begin(), names.end());
        return names;
    };
    const auto la = list(a), lb = list(b);
    if (la != lb) {
        why = "file lists differ under " + a.string();
        return false;
    }
    for (const auto& name : la) {
        if (read_text_file((a / name).string()) != read_text_file((b / name).string())) {
            why = name + " differs under " + a.string();
            return false;
        }
    }
    return true;
}

bool c11_determinism() {
    Timer t;
    const fs::path det = g_root / "det";
    const std::string synth_a = (det / "synth" / "a").string();
    struct Job {
        std::string name;
        std::string args;
    };
    std::vector<Job> jobs;
    jobs.push_back({"synth", "synth --family power_law --d 8 --order 2 --k 3 --n 60 "
                             "--sigma 0.1 --seed 5"});
    // The remaining jobs read the first synth output, so run it up front.
    for (const char* leg : {"a", "b"}) {
        const int rc = run(jobs[0].args + " --out " + (det / "synth" / leg).string());
        if (rc != 0) {
            report(11, "rerun-byte-determinism", false, "synth rc != 0", t.s());
            return false;
        }
    }
    const std::string data = synth_a + "/dataset.csv";
    jobs.push_back({"train", "train --data " + data +
                                 " --model poly:full --lambda 0.05 --lr 0.1 --epochs 150 "
                                 "--seed 3 --cv 0.02,0.1 --cv-frac 0.25"});
    jobs.push_back({"train-mlp", "train --data " + data +
                                     " --model mlp:6 --lambda 0.02 --lr 0.02 --epochs 60 "
                                     "--batch 16 --warmup 10 --seed 8"});
    jobs.push_back({"lasso", "lasso --data " + data + " --lambda 0.05 --trace"});
    jobs.push_back({"qg", "qg --preset qg_preset --n 150 --K 30 --sigmas 0.05,0.2 --rsi "
                          "--seed 2"});
    jobs.push_back({"phase", "phase --family monomial --d 6 --model mlp:8 --params 1,2 "
                             "--n-grid 20,40 --trials 2 --tau 0.45 --lambda 0.05 --lr 0.05 "
                             "--epochs 50 --warmup 10 --test-n 60 --seed 4"});
    jobs.push_back({"rate", "rate --d 6 --order 2 --k 2 --n-grid 40,80,160 --seeds 2 "
                            "--sigma 0.1 --seed 6"});
    jobs.push_back({"validate", "validate --d 6 --n 80 --trials 150 --seed 9"});

    bool pass = true;
    std::string why;
    for (size_t i = 1; i < jobs.size() && pass; ++i) {
        for (const char* leg : {"a", "b"}) {
            const fs::path out = det / jobs[i].name / leg;
            const int rc = run(jobs[i].args + " --out " + out.string());
            if (rc != 0) {
                pass = false;
                why = jobs[i].name + " rc != 0";
            }
        }
        if (pass)
            pass = dirs_equal(det / jobs[i].name / "a", det / jobs[i].name / "b", why);
    }
    if (pass)
        pass = dirs_equal(det / "synth" / "a", det / "synth" / "b", why);

    // Transform command round trip, twice, into separate directories.
    if (pass) {
        for (const char* leg : {"a", "b"}) {
            const fs::path out = det / "wht" / leg;
            fs::create_directories(out);
            int rc = run("wht --inverse --in " + synth_a + "/spectrum.json --out " +
                         (out / "table.csv").string());
            rc |= run("wht --in " + (out / "table.csv").string() + " --out " +
                      (out / "spec.json").string());
            if (rc != 0) {
                pass = false;
                why = "wht rc != 0";
            }
        }
        if (pass)
            pass = dirs_equal(det / "wht" / "a", det / "wht" / "b", why);
    }

    // Scheduling independence: the grid output may not depend on the worker
    // count, so a 2-worker rerun must byte-match the sequential one.
    if (pass) {
        const fs::path out = det / "phase" / "c";
        const int rc = run(jobs[5].args + " --threads 2 --out " + out.string());
        if (rc != 0) {
            pass = false;
            why = "threaded phase rc != 0";
        } else {
            pass = dirs_equal(det / "phase" / "a", out, why);
            if (!pass)
                why = "worker count changed output: " + why;
        }
    }

    report(11, "rerun-byte-determinism", pass, pass ? "all commands byte-identical" : why,
           t.s());
    return pass;
}

} // namespace

int main(int argc, char** argv) {
    g_cli = argc > 1 ? argv[1] : "specbool";
    g_root = fs::temp_directory_path() / "specbool_acceptance";
    fs::remove_all(g_root);
    fs::create_directories(g_root);

    int passed = 0, total = 0;
    auto tally = [&](bool ok) {
        ++total;
        passed += ok ? 1 : 0;
    };
    tally(c1_wht());
    tally(c2_linear_value());
    tally(c3_subgradient());
    tally(c4_extremum());
    tally(c5_noise());
    tally(c6_agreement());
    tally(c7_recovery());
    tally(c8_rate());
    tally(c9_conditioning());
    tally(c10_phase());
    tally(c11_determinism());
    std::printf("acceptance: %d/%d passed\n", passed, total);
    return passed == total ? 0 : 1;
}
