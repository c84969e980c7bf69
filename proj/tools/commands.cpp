#include "commands.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "specbool/analysis.hpp"
#include "specbool/baselines.hpp"
#include "specbool/hypercube.hpp"
#include "specbool/io.hpp"
#include "specbool/models.hpp"
#include "specbool/parallel.hpp"
#include "specbool/rng.hpp"
#include "specbool/spectral_reg.hpp"
#include "specbool/synth.hpp"
#include "specbool/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace specbool {
namespace {

// ---------------------------------------------------------------------------
// small shared helpers

std::vector<std::string> split_commas(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double(const std::string& text) {
    size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &pos);
    } catch (const std::exception&) {
        throw std::invalid_argument("not a number: '" + text + "'");
    }
    if (pos != text.size())
        throw std::invalid_argument("not a number: '" + text + "'");
    return v;
}

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    for (const auto& piece : split_commas(text))
        out.push_back(parse_double(piece));
    return out;
}

std::vector<size_t> parse_size_list(const std::string& text) {
    std::vector<size_t> out;
    for (const auto& piece : split_commas(text)) {
        const double v = parse_double(piece);
        if (v < 1.0 || v != std::floor(v))
            throw std::invalid_argument("expected positive integers: '" + text + "'");
        out.push_back(size_t(v));
    }
    return out;
}

// "--lambda 0.25" or "--lambda theory:<sigma>,<delta>" (scale from the noise
// tail bound at this dataset size).
double resolve_lambda(const std::string& text, int d, size_t n) {
    if (text.rfind("theory:", 0) == 0) {
        const auto parts = split_commas(text.substr(7));
        if (parts.size() != 2)
            throw std::invalid_argument("--lambda theory:<sigma>,<delta>");
        return theoretical_lambda(parse_double(parts[0]), d, n, parse_double(parts[1]));
    }
    const double v = parse_double(text);
    if (v < 0.0)
        throw std::invalid_argument("lambda must be non-negative");
    return v;
}

void dump_json(const std::string& path, const json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

std::string path_in(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

void ensure_dir(const std::string& dir) {
    if (!dir.empty())
        fs::create_directories(dir);
}

// Echo of the fully resolved options (defaults + config file + flags) so any
// run can be replayed; scheduling and placement knobs are excluded so reruns
// into different directories stay byte-identical.
void write_effective_config(const CLI::App* cmd, const std::string& out_dir) {
    json j;
    for (const CLI::Option* option : cmd->get_options()) {
        if (option->get_lnames().empty())
            continue;
        const std::string& name = option->get_lnames().front();
        if (name == "help" || name == "config" || name == "out" || name == "threads" ||
            name == "check")
            continue;
        std::string value;
        if (option->count() > 0)
            value = option->results().back();
        else
            value = option->get_default_str();
        if (value.empty())
            value = option->count() > 0 ? "true" : "false";
        j[name] = value;
    }
    dump_json(path_in(out_dir, "effective_config.json"), j);
}

void check_csv_header(const std::string& path, const std::string& header) {
    const std::string text = read_text_file(path);
    if (text.rfind(header, 0) != 0)
        throw std::runtime_error(path + ": unexpected header");
}

GroundTruth make_truth(const std::string& family, int d, int order, int k, double gamma,
                       double ratio, uint64_t seed) {
    if (family == "monomial")
        return gen_monomial(d, order, seed);
    if (family == "power_law")
        return gen_power_law(d, order, k, gamma, seed);
    if (family == "staircase")
        return gen_staircase(d, ratio, seed);
    if (family == "qg_preset")
        return qg_preset();
    throw std::invalid_argument("unknown family: " + family +
                                " (monomial|power_law|staircase|qg_preset)");
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct Stopwatch {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
    std::string family = "power_law";
    int d = 10;
    int order = 2;
    int k = 5;
    double gamma = 1.0;
    double ratio = 0.5;
    size_t n = 200;
    double sigma = 0.0;
    uint64_t seed = 1;
    std::string out = ".";
    bool check = false;
};

int cmd_synth(const SynthArgs& a) {
    GroundTruth truth = make_truth(a.family, a.d, a.order, a.k, a.gamma, a.ratio,
                                   substream_seed(a.seed, 0));
    Dataset data = sample_dataset(truth.spectrum, a.n, a.sigma, substream_seed(a.seed, 1));
    ensure_dir(a.out);
    write_spectrum_json(path_in(a.out, "spectrum.json"), truth.spectrum);
    write_dataset_csv(path_in(a.out, "dataset.csv"), data);
    int min_order = 32, max_order = 0;
    for (const auto& e : truth.spectrum.entries) {
        min_order = std::min(min_order, std::popcount(e.mask));
        max_order = std::max(max_order, std::popcount(e.mask));
    }
    std::printf("family=%s d=%d k=%zu orders=%d..%d n=%zu sigma=%s\n", truth.family.c_str(),
                truth.spectrum.d, truth.spectrum.entries.size(), min_order, max_order,
                data.size(), format_double(a.sigma).c_str());
    if (a.check) {
        read_spectrum_json(path_in(a.out, "spectrum.json"));
        Dataset back = read_dataset_csv(path_in(a.out, "dataset.csv"));
        if (back.X != data.X || back.y != data.y)
            throw std::runtime_error("dataset round trip mismatch");
    }
    return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
    std::string data;
    std::string model = "poly:full";
    std::string lambda = "0";
    double lr = 1e-2;
    int epochs = 2000;
    int batch = 0;
    int warmup = 0;
    uint64_t seed = 1;
    std::string zero_sign = "zero";
    std::string weight_decay = "none";
    double wd_strength = 0.0;
    double stationarity_tol = 1e-3;
    double interp_delta = -1.0;
    int log_every = 10;
    bool halve_lr = false;
    std::string cv; // optional comma list of lambda specs
    double cv_frac = 0.2;
    std::string out = ".";
    bool check = false;
};

ZeroSignRule parse_zero_sign(const std::string& text) {
    if (text == "zero")
        return ZeroSignRule::zero;
    if (text == "positive")
        return ZeroSignRule::positive;
    if (text == "negative")
        return ZeroSignRule::negative;
    throw std::invalid_argument("--zero-sign must be zero|positive|negative");
}

WeightDecayKind parse_weight_decay(const std::string& text) {
    if (text == "none")
        return WeightDecayKind::none;
    if (text == "l1")
        return WeightDecayKind::l1_weights;
    if (text == "l2")
        return WeightDecayKind::l2_weights;
    throw std::invalid_argument("--weight-decay must be none|l1|l2");
}

TrainConfig base_train_config(const TrainArgs& a) {
    TrainConfig cfg;
    cfg.reg.zero_sign = parse_zero_sign(a.zero_sign);
    cfg.learning_rate = a.lr;
    cfg.epochs = a.epochs;
    cfg.batch_size = a.batch;
    cfg.warmup_epochs = a.warmup;
    cfg.seed = substream_seed(a.seed, 1);
    cfg.stationarity_tol = a.stationarity_tol;
    cfg.interpolation_delta = a.interp_delta;
    cfg.weight_decay = parse_weight_decay(a.weight_decay);
    cfg.weight_decay_strength = a.wd_strength;
    cfg.log_every = a.log_every;
    cfg.halve_lr_on_increase = a.halve_lr;
    return cfg;
}

int cmd_train(const TrainArgs& a) {
    Dataset data = read_dataset_csv(a.data);
    const ModelSpec mspec = parse_model_spec(a.model, data.d);
    TrainConfig cfg = base_train_config(a);
    cfg.reg.lambda = resolve_lambda(a.lambda, data.d, data.size());
    ensure_dir(a.out);

    if (!a.cv.empty()) {
        // Fixed validation fold: a seeded shuffle, first chunk held out.
        if (!(a.cv_frac > 0.0 && a.cv_frac < 1.0))
            throw std::invalid_argument("--cv-frac must be in (0,1)");
        std::vector<size_t> idx(data.size());
        for (size_t i = 0; i < idx.size(); ++i)
            idx[i] = i;
        Rng shuffle_rng(substream_seed(a.seed, 2));
        for (size_t i = idx.size(); i > 1; --i)
            std::swap(idx[i - 1], idx[size_t(shuffle_rng.uniform_index(i))]);
        size_t n_val = size_t(std::lround(a.cv_frac * double(data.size())));
        n_val = std::max<size_t>(1, std::min(n_val, data.size() - 1));
        Dataset val, sub;
        val.d = sub.d = data.d;
        for (size_t i = 0; i < idx.size(); ++i) {
            Dataset& dst = i < n_val ? val : sub;
            auto x = data.point(idx[i]);
            dst.X.insert(dst.X.end(), x.begin(), x.end());
            dst.y.push_back(data.y[idx[i]]);
        }
        double best_mse = std::numeric_limits<double>::infinity();
        double best_lambda = 0.0;
        json cv_rows = json::array();
        for (const auto& spec : split_commas(a.cv)) {
            const double lam = resolve_lambda(spec, sub.d, sub.size());
            auto model = init_model(mspec, substream_seed(a.seed, 0));
            TrainConfig fold_cfg = cfg;
            fold_cfg.reg.lambda = lam;
            TrainReport rep = train(*model, sub, fold_cfg);
            const double val_mse = rep.diverged ? std::numeric_limits<double>::infinity()
                                                : mse_loss(*model, val);
            cv_rows.push_back({{"lambda", lam},
                               {"val_mse", rep.diverged ? json() : json(val_mse)},
                               {"diverged", rep.diverged}});
            if (val_mse < best_mse || (val_mse == best_mse && lam < best_lambda)) {
                best_mse = val_mse;
                best_lambda = lam;
            }
        }
        if (!std::isfinite(best_mse))
            throw std::runtime_error("every cross-validation fold diverged");
        cfg.reg.lambda = best_lambda;
        dump_json(path_in(a.out, "cv.json"),
                  json{{"grid", cv_rows}, {"chosen_lambda", best_lambda}});
        std::printf("cv chose lambda=%s\n", format_double(best_lambda).c_str());
    }

    auto model = init_model(mspec, substream_seed(a.seed, 0));
    TrainReport rep = train(*model, data, cfg);
    write_train_report_json(path_in(a.out, "report.json"), rep);
    write_trajectory_csv(path_in(a.out, "trajectory.csv"), rep.trajectory);
    save_checkpoint(path_in(a.out, "checkpoint.json"), *model);
    std::printf("lambda=%s final_mse=%s final_reg=%s stationary=%d interpolator=%d%s\n",
                format_double(cfg.reg.lambda).c_str(), format_double(rep.final_mse).c_str(),
                format_double(rep.final_reg).c_str(), int(rep.is_stationary),
                int(rep.is_interpolator), rep.diverged ? " DIVERGED" : "");
    std::fprintf(stderr, "wall_time_s=%.3f\n", rep.wall_time_s);
    if (a.check) {
        load_checkpoint(path_in(a.out, "checkpoint.json"));
        check_csv_header(path_in(a.out, "trajectory.csv"), "epoch,mse,reg,total\n");
        json j = json::parse(read_text_file(path_in(a.out, "report.json")));
        if (!j.contains("final_mse"))
            throw std::runtime_error("report.json missing fields");
    }
    return rep.diverged ? 1 : 0;
}

// ---------------------------------------------------------------------------
// lasso

struct LassoArgs {
    std::string data;
    std::string lambda = "0.1";
    int max_iters = 20000;
    double tol = 1e-12;
    double kkt_target = 1e-7;
    double prune_eps = 1e-10;
    bool trace = false;
    std::string out = ".";
    bool check = false;
};

int cmd_lasso(const LassoArgs& a) {
    Dataset data = read_dataset_csv(a.data);
    if (data.d > 16)
        throw std::invalid_argument("lasso needs d <= 16 (explicit 2^d design)");
    LassoConfig cfg;
    cfg.lambda = resolve_lambda(a.lambda, data.d, data.size());
    cfg.max_iters = a.max_iters;
    cfg.tol = a.tol;
    cfg.kkt_target = a.kkt_target;
    cfg.prune_eps = a.prune_eps;
    cfg.record_trace = a.trace;
    Stopwatch watch;
    LassoResult res = lasso_fista(data, cfg);
    ensure_dir(a.out);
    write_spectrum_json(path_in(a.out, "spectrum.json"), res.spectrum);
    json support = json::array();
    for (const auto& e : res.spectrum.entries)
        support.push_back(e.mask);
    dump_json(path_in(a.out, "lasso.json"), json{{"lambda", cfg.lambda},
                                                 {"objective", res.objective},
                                                 {"mse", res.mse},
                                                 {"l1", res.l1},
                                                 {"iters", res.iters},
                                                 {"converged", res.converged},
                                                 {"kkt_violation", res.kkt_violation},
                                                 {"step", res.step},
                                                 {"support", support}});
    if (a.trace) {
        std::string text = "iter,objective\n";
        for (size_t i = 0; i < res.trace.size(); ++i)
            text += std::to_string(i) + "," + format_double(res.trace[i]) + "\n";
        write_text_file(path_in(a.out, "trace.csv"), text);
    }
    std::printf("lambda=%s support=%zu objective=%s kkt=%s iters=%d%s\n",
                format_double(cfg.lambda).c_str(), res.spectrum.entries.size(),
                format_double(res.objective).c_str(), format_double(res.kkt_violation).c_str(),
                res.iters, res.converged ? "" : " NOT-CONVERGED");
    std::fprintf(stderr, "wall_time_s=%.3f\n", watch.seconds());
    if (a.check)
        read_spectrum_json(path_in(a.out, "spectrum.json"));
    return res.converged ? 0 : 1;
}

// ---------------------------------------------------------------------------
// qg

struct QgArgs {
    std::string checkpoint;
    std::string data;
    std::string preset;
    size_t n = 1000;
    std::string sigmas = "0.01,0.02,0.05,0.1,0.2,0.5,1";
    int K = 500;
    uint64_t seed = 1;
    bool rsi = false;
    std::string out = ".";
    bool check = false;
};

int cmd_qg(const QgArgs& a) {
    std::unique_ptr<Model> model;
    Dataset data;
    ensure_dir(a.out);
    if (!a.preset.empty()) {
        if (a.preset != "qg_preset")
            throw std::invalid_argument("unknown preset: " + a.preset);
        GroundTruth truth = qg_preset();
        std::vector<uint32_t> support;
        std::vector<double> coeffs;
        for (const auto& e : truth.spectrum.entries) {
            support.push_back(e.mask);
            coeffs.push_back(e.coeff);
        }
        auto poly = std::make_unique<PolynomialModel>(truth.spectrum.d, support);
        std::copy(coeffs.begin(), coeffs.end(), poly->params().begin());
        model = std::move(poly);
        data = sample_dataset(truth.spectrum, a.n, 0.0, substream_seed(a.seed, 1));
        write_spectrum_json(path_in(a.out, "spectrum.json"), truth.spectrum);
    } else {
        if (a.checkpoint.empty() || a.data.empty())
            throw std::invalid_argument("qg needs --checkpoint and --data (or --preset)");
        model = load_checkpoint(a.checkpoint);
        data = read_dataset_csv(a.data);
        if (model->dim() != data.d) {
            std::fprintf(stderr, "error: checkpoint d=%d but dataset d=%d\n", model->dim(),
                         data.d);
            return 1;
        }
    }
    const std::vector<double> sigma_grid = parse_double_list(a.sigmas);
    Stopwatch watch;
    std::vector<QGRow> rows =
        qg_estimate(*model, data, sigma_grid, a.K, substream_seed(a.seed, 2));
    write_qg_csv(path_in(a.out, "qg.csv"), rows);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& row : rows)
        best = std::min(best, row.min_ratio_per_param);
    std::printf("sigmas=%zu K=%d M=%d min_ratio_per_param=%s\n", rows.size(), a.K,
                rows.empty() ? 0 : rows.front().M, format_double(best).c_str());
    if (a.rsi) {
        std::vector<RsiRow> rrows =
            rsi_estimate(*model, data, sigma_grid, a.K, substream_seed(a.seed, 3));
        write_rsi_csv(path_in(a.out, "rsi.csv"), rrows);
        double rbest = std::numeric_limits<double>::infinity();
        for (const auto& row : rrows)
            rbest = std::min(rbest, row.min_ratio);
        std::printf("rsi_min_ratio=%s\n", format_double(rbest).c_str());
    }
    std::fprintf(stderr, "wall_time_s=%.3f\n", watch.seconds());
    if (a.check) {
        check_csv_header(path_in(a.out, "qg.csv"), "sigma,min_ratio,min_ratio_per_param,K,M\n");
        if (a.rsi)
            check_csv_header(path_in(a.out, "rsi.csv"), "sigma,min_ratio,K,M\n");
    }
    return 0;
}

// ---------------------------------------------------------------------------
// phase

struct PhaseArgs {
    std::string family = "monomial";
    int d = 10;
    std::string model = "mlp:64,64,64";
    std::string params = "1,2,3";
    std::string n_grid = "25,50,100,200,400,800";
    int trials = 5;
    double tau = 0.45;
    double sigma = 0.0;
    size_t test_n = 500;
    std::string lambda = "0.1";
    double lr = 0.05;
    int epochs = 500;
    int batch = 0;
    int warmup = 100;
    bool halve_lr = false;
    int order = 2;
    double gamma = 1.0;
    uint64_t seed = 1;
    int threads = 0;
    std::string out = ".";
    bool check = false;
};

struct PhaseTrial {
    double r2_sp = -std::numeric_limits<double>::infinity();
    double r2_nosp = -std::numeric_limits<double>::infinity();
    bool failed_sp = true;
    bool failed_nosp = true;
};

int cmd_phase(const PhaseArgs& a) {
    if (!(a.tau > 0.0 && a.tau < 1.0))
        throw std::invalid_argument("--tau must be in (0,1)");
    if (a.trials < 1)
        throw std::invalid_argument("--trials must be positive");
    if (a.family == "qg_preset")
        throw std::invalid_argument("phase needs a parameterized family");
    const std::vector<double> params = parse_double_list(a.params);
    const std::vector<size_t> n_grid = parse_size_list(a.n_grid);
    if (params.empty() || n_grid.empty())
        throw std::invalid_argument("grids must be nonempty");
    const ModelSpec mspec = parse_model_spec(a.model, a.d);
    const size_t cells = params.size() * n_grid.size();
    const size_t T = size_t(a.trials);
    std::vector<PhaseTrial> slots(cells * T);
    const int threads = a.threads > 0 ? a.threads : default_thread_count();
    Stopwatch watch;

    auto run_task = [&](size_t task) {
        const size_t cell = task / T;
        const size_t trial = task % T;
        const double param = params[cell / n_grid.size()];
        const size_t n = n_grid[cell % n_grid.size()];
        PhaseTrial& slot = slots[task];

        int order = a.order, k = 5;
        double ratio = 0.5;
        if (a.family == "monomial" || a.family == "power_law") {
            if (param < 1.0 || param != std::floor(param))
                throw std::invalid_argument("param grid must be positive integers here");
            if (a.family == "monomial")
                order = int(param);
            else
                k = int(param);
        } else {
            ratio = param;
        }
        GroundTruth truth;
        Dataset train_set, test_set;
        std::unique_ptr<Model> model_sp, model_nosp;
        try {
            truth = make_truth(a.family, a.d, order, k, a.gamma, ratio,
                               substream_seed(a.seed, cell, trial, 0));
            train_set =
                sample_dataset(truth.spectrum, n, a.sigma, substream_seed(a.seed, cell, trial, 1));
            test_set = sample_dataset(truth.spectrum, a.test_n, 0.0,
                                      substream_seed(a.seed, cell, trial, 2));
            model_sp = init_model(mspec, substream_seed(a.seed, cell, trial, 3));
            model_nosp = model_sp->clone(); // paired initialization
        } catch (const std::exception&) {
            return; // malformed cell counts as two failures
        }
        TrainConfig cfg;
        cfg.learning_rate = a.lr;
        cfg.epochs = a.epochs;
        cfg.batch_size = a.batch;
        cfg.seed = substream_seed(a.seed, cell, trial, 4);
        cfg.log_every = a.epochs; // endpoints only; the grid is about outcomes
        cfg.halve_lr_on_increase = a.halve_lr;
        auto evaluate = [&](Model& model) {
            std::vector<double> preds(test_set.size());
            model.eval_batch(test_set.X.data(), test_set.size(), preds.data());
            return r_squared(preds, test_set.y);
        };
        try {
            TrainConfig sp = cfg;
            sp.reg.lambda = resolve_lambda(a.lambda, a.d, n);
            sp.warmup_epochs = a.warmup;
            TrainReport rep = train(*model_sp, train_set, sp);
            if (!rep.diverged) {
                slot.r2_sp = evaluate(*model_sp);
                slot.failed_sp = false;
            }
        } catch (const std::exception&) {
        }
        try {
            TrainConfig nosp = cfg;
            nosp.reg.lambda = 0.0;
            TrainReport rep = train(*model_nosp, train_set, nosp);
            if (!rep.diverged) {
                slot.r2_nosp = evaluate(*model_nosp);
                slot.failed_nosp = false;
            }
        } catch (const std::exception&) {
        }
    };
    parallel_for(slots.size(), threads, run_task);

    std::vector<PhaseRow> rows;
    std::string detail = "param,n,trial,r2_sp,r2_nosp\n";
    for (size_t cell = 0; cell < cells; ++cell) {
        const double param = params[cell / n_grid.size()];
        const size_t n = n_grid[cell % n_grid.size()];
        int hits_sp = 0, hits_nosp = 0;
        for (size_t trial = 0; trial < T; ++trial) {
            const PhaseTrial& slot = slots[cell * T + trial];
            if (!slot.failed_sp && slot.r2_sp >= a.tau)
                ++hits_sp;
            if (!slot.failed_nosp && slot.r2_nosp >= a.tau)
                ++hits_nosp;
            detail += format_double(param) + "," + std::to_string(n) + "," +
                      std::to_string(trial) + "," + format_double(slot.r2_sp) + "," +
                      format_double(slot.r2_nosp) + "\n";
        }
        PhaseRow row;
        row.param = param;
        row.n = n;
        row.frac_sp = double(hits_sp) / double(T);
        row.frac_nosp = double(hits_nosp) / double(T);
        row.T = a.trials;
        row.tau = a.tau;
        rows.push_back(row);
        std::fprintf(stderr, "cell param=%s n=%zu frac_sp=%s frac_nosp=%s\n",
                     format_double(param).c_str(), n, format_double(row.frac_sp).c_str(),
                     format_double(row.frac_nosp).c_str());
    }
    ensure_dir(a.out);
    write_phase_csv(path_in(a.out, "phase.csv"), rows);
    write_text_file(path_in(a.out, "phase_detail.csv"), detail);
    std::printf("cells=%zu trials=%d tau=%s\n", cells, a.trials, format_double(a.tau).c_str());
    std::fprintf(stderr, "wall_time_s=%.3f\n", watch.seconds());
    if (a.check) {
        check_csv_header(path_in(a.out, "phase.csv"), "param,n,frac_sp,frac_nosp,T,tau\n");
        check_csv_header(path_in(a.out, "phase_detail.csv"), "param,n,trial,r2_sp,r2_nosp\n");
    }
    return 0;
}

// ---------------------------------------------------------------------------
// rate

struct RateArgs {
    int d = 8;
    int order = 2;
    int k = 3;
    double gamma = 1.0;
    double sigma = 0.1;
    std::string n_grid = "100,200,400,800,1600";
    int seeds = 10;
    double delta = 0.05;
    std::string solver = "fista";
    double lr = 0.02;
    int epochs = 3000;
    int batch = 0;
    int warmup = 0;
    uint64_t seed = 1;
    int threads = 0;
    std::string out = ".";
    bool check = false;
};

int cmd_rate(const RateArgs& a) {
    const std::vector<size_t> n_grid = parse_size_list(a.n_grid);
    if (n_grid.size() < 3)
        throw std::invalid_argument("rate needs at least 3 sample sizes for the slope fit");
    if (a.seeds < 1)
        throw std::invalid_argument("--seeds must be positive");
    if (a.solver != "fista" && a.solver != "sgd")
        throw std::invalid_argument("--solver must be fista|sgd");
    if (a.d > 16)
        throw std::invalid_argument("rate needs d <= 16 (explicit 2^d comparison)");
    const size_t S = size_t(a.seeds);
    const size_t M = size_t(1) << a.d;
    std::vector<double> errs(S * n_grid.size(), 0.0);
    const int threads = a.threads > 0 ? a.threads : default_thread_count();
    Stopwatch watch;

    auto run_task = [&](size_t task) {
        const size_t s = task / n_grid.size();
        const size_t j = task % n_grid.size();
        const size_t n = n_grid[j];
        GroundTruth truth =
            gen_power_law(a.d, a.order, a.k, a.gamma, substream_seed(a.seed, s, 0, 0));
        Dataset data =
            sample_dataset(truth.spectrum, n, a.sigma, substream_seed(a.seed, s, j + 1, 1));
        const double lambda = theoretical_lambda(a.sigma, a.d, n, a.delta);
        std::vector<double> alpha_hat;
        if (a.solver == "fista") {
            LassoConfig cfg;
            cfg.lambda = lambda;
            LassoResult res = lasso_fista(data, cfg);
            alpha_hat = std::move(res.alpha);
        } else {
            auto model = init_model(parse_model_spec("poly:full", a.d), 0);
            TrainConfig cfg;
            cfg.reg.lambda = lambda;
            cfg.learning_rate = a.lr;
            cfg.epochs = a.epochs;
            cfg.batch_size = a.batch;
            cfg.warmup_epochs = a.warmup;
            cfg.seed = substream_seed(a.seed, s, j + 1, 2);
            cfg.halve_lr_on_increase = true;
            train(*model, data, cfg);
            alpha_hat.assign(model->params().begin(), model->params().end());
        }
        std::vector<double> alpha_star(M, 0.0);
        for (const auto& e : truth.spectrum.entries)
            alpha_star[e.mask] = e.coeff;
        double err2 = 0.0;
        for (size_t m = 0; m < M; ++m)
            err2 += (alpha_hat[m] - alpha_star[m]) * (alpha_hat[m] - alpha_star[m]);
        errs[task] = std::sqrt(err2);
    };
    parallel_for(errs.size(), threads, run_task);

    std::vector<RateRow> rows;
    std::vector<double> medians;
    for (size_t j = 0; j < n_grid.size(); ++j) {
        std::vector<double> col;
        for (size_t s = 0; s < S; ++s)
            col.push_back(errs[s * n_grid.size() + j]);
        RateRow row;
        row.n = n_grid[j];
        row.median_err = median_of(col);
        medians.push_back(row.median_err);
        rows.push_back(row);
    }
    ensure_dir(a.out);
    write_rate_csv(path_in(a.out, "rate.csv"), rows);

    json summary{{"d", a.d},          {"order", a.order},   {"k", a.k},
                 {"gamma", a.gamma},  {"sigma", a.sigma},   {"delta", a.delta},
                 {"solver", a.solver}, {"seeds", a.seeds}};
    summary["n_grid"] = n_grid;
    summary["median_err"] = medians;
    bool fit_ok = a.sigma > 0.0;
    for (double m : medians)
        if (m <= 0.0)
            fit_ok = false;
    if (fit_ok) {
        double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
        const double cnt = double(n_grid.size());
        for (size_t j = 0; j < n_grid.size(); ++j) {
            const double x = std::log(double(n_grid[j]));
            const double y = std::log(medians[j]);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        const double slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
        const double intercept = (sy - slope * sx) / cnt;
        summary["slope"] = slope;
        summary["intercept"] = intercept;
        std::printf("slope=%s\n", format_double(slope).c_str());
    } else {
        summary["slope"] = nullptr;
        summary["intercept"] = nullptr;
        std::printf("slope fit skipped (zero noise or exact recovery)\n");
    }
    dump_json(path_in(a.out, "rate_summary.json"), summary);
    std::fprintf(stderr, "wall_time_s=%.3f\n", watch.seconds());
    if (a.check)
        check_csv_header(path_in(a.out, "rate.csv"), "n,median_err\n");
    return 0;
}

// ---------------------------------------------------------------------------
// validate

struct ValidateArgs {
    int d = 8;
    size_t n = 200;
    double sigma = 1.0;
    double delta = 0.05;
    int trials = 2000;
    uint64_t seed = 1;
    std::string out = ".";
    bool check = false;
};

int cmd_validate(const ValidateArgs& a) {
    Stopwatch watch;
    bool all_ok = true;
    json hadamard = json::array();
    for (int d = 1; d <= 4; ++d) {
        HadamardL1Extremum ext = hadamard_l1_extremum(d);
        const double bound = double(2 * d + 1) * double(1 << d);
        const bool ok = ext.max_l1 <= bound;
        all_ok = all_ok && ok;
        hadamard.push_back(
            {{"d", d}, {"max_l1", ext.max_l1}, {"bound", bound}, {"ok", ok}});
        std::printf("hadamard d=%d max_l1=%s bound=%s %s\n", d,
                    format_double(ext.max_l1).c_str(), format_double(bound).c_str(),
                    ok ? "ok" : "VIOLATION");
    }
    NoiseCheck noise = noise_linf_check(a.d, a.n, a.sigma, a.delta, a.trials, a.seed);
    const bool noise_ok = noise.quantile <= noise.envelope;
    all_ok = all_ok && noise_ok;
    std::printf("noise d=%d n=%zu quantile=%s envelope=%s %s\n", a.d, a.n,
                format_double(noise.quantile).c_str(), format_double(noise.envelope).c_str(),
                noise_ok ? "ok" : "VIOLATION");
    ensure_dir(a.out);
    dump_json(path_in(a.out, "validate.json"),
              json{{"hadamard", hadamard},
                   {"noise",
                    {{"d", a.d},
                     {"n", a.n},
                     {"sigma", a.sigma},
                     {"delta", a.delta},
                     {"trials", a.trials},
                     {"quantile", noise.quantile},
                     {"bound", noise.bound},
                     {"envelope", noise.envelope},
                     {"ok", noise_ok}}},
                   {"ok", all_ok}});
    std::fprintf(stderr, "wall_time_s=%.3f\n", watch.seconds());
    if (a.check) {
        const json back = json::parse(read_text_file(path_in(a.out, "validate.json")));
        if (!back.contains("ok"))
            throw std::runtime_error("validate.json missing fields");
    }
    return all_ok ? 0 : 1;
}

// ---------------------------------------------------------------------------
// wht

struct WhtArgs {
    std::string in;
    std::string out_file;
    bool inverse = false;
    double prune_eps = 0.0;
};

int cmd_wht(const WhtArgs& a) {
    if (a.inverse) {
        Spectrum s = read_spectrum_json(a.in);
        FunctionTable table = spectrum_to_function(s);
        write_function_table_csv(a.out_file, table);
        std::printf("wrote table d=%d rows=%zu\n", table.d, table.values.size());
    } else {
        FunctionTable table = read_function_table_csv(a.in);
        Spectrum s = function_to_spectrum(table, a.prune_eps);
        write_spectrum_json(a.out_file, s);
        std::printf("wrote spectrum d=%d entries=%zu\n", s.d, s.entries.size());
    }
    return 0;
}

// ---------------------------------------------------------------------------
// config file injection + dispatch

std::vector<std::string> config_tokens(const std::string& path) {
    const json j = json::parse(read_text_file(path));
    if (!j.is_object())
        throw std::invalid_argument("--config must hold a JSON object of flag values");
    std::vector<std::string> out;
    for (auto it = j.begin(); it != j.end(); ++it) {
        std::string value;
        if (it->is_string()) {
            value = it->get<std::string>();
        } else if (it->is_boolean()) {
            value = it->get<bool>() ? "true" : "false";
        } else if (it->is_array()) {
            for (const auto& piece : *it) {
                if (!value.empty())
                    value += ',';
                value += piece.is_string() ? piece.get<std::string>() : piece.dump();
            }
        } else {
            value = it->dump();
        }
        out.push_back("--" + it.key() + "=" + value);
    }
    return out;
}

template <typename T>
CLI::Option* opt(CLI::App* cmd, const std::string& name, T& var, const std::string& desc) {
    return cmd->add_option(name, var, desc)->capture_default_str();
}

void add_common(CLI::App* cmd, std::string& config, std::string& out, bool& check) {
    cmd->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    cmd->add_option("--config", config, "JSON object of option values; flags override");
    opt(cmd, "--out", out, "output directory");
    cmd->add_flag("--check", check, "re-parse every output file after writing");
}

} // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"sparse spectral learning on the Boolean hypercube"};
    app.require_subcommand(1);

    SynthArgs synth;
    TrainArgs train_args;
    LassoArgs lasso;
    QgArgs qg;
    PhaseArgs phase;
    RateArgs rate;
    ValidateArgs validate;
    WhtArgs wht;
    std::string cfg_path; // shared --config backing store (one subcommand runs)

    CLI::App* c_synth = app.add_subcommand("synth", "generate a ground truth and dataset");
    add_common(c_synth, cfg_path, synth.out, synth.check);
    opt(c_synth, "--family", synth.family, "monomial|power_law|staircase|qg_preset");
    opt(c_synth, "--d", synth.d, "cube dimension");
    opt(c_synth, "--order", synth.order, "monomial/interaction order");
    opt(c_synth, "--k", synth.k, "sparsity (power_law)");
    opt(c_synth, "--gamma", synth.gamma, "power-law decay exponent");
    opt(c_synth, "--ratio", synth.ratio, "staircase decay ratio");
    opt(c_synth, "--n", synth.n, "sample count");
    opt(c_synth, "--sigma", synth.sigma, "label noise standard deviation");
    opt(c_synth, "--seed", synth.seed, "master seed");

    CLI::App* c_train = app.add_subcommand("train", "fit a model by (sub)gradient descent");
    add_common(c_train, cfg_path, train_args.out, train_args.check);
    opt(c_train, "--data", train_args.data, "dataset CSV")->required();
    opt(c_train, "--model", train_args.model, "linear | poly:full | poly:m1,m2 | mlp:w1,w2");
    opt(c_train, "--lambda", train_args.lambda, "penalty strength or theory:<sigma>,<delta>");
    opt(c_train, "--lr", train_args.lr, "learning rate");
    opt(c_train, "--epochs", train_args.epochs, "training epochs");
    opt(c_train, "--batch", train_args.batch, "minibatch size (0 = full batch)");
    opt(c_train, "--warmup", train_args.warmup, "epochs before the penalty activates");
    opt(c_train, "--seed", train_args.seed, "master seed (init + shuffling)");
    opt(c_train, "--zero-sign", train_args.zero_sign, "sign rule at zero: zero|positive|negative");
    opt(c_train, "--weight-decay", train_args.weight_decay, "none|l1|l2 on raw weights");
    opt(c_train, "--wd-strength", train_args.wd_strength, "weight decay strength");
    opt(c_train, "--stationarity-tol", train_args.stationarity_tol, "stationarity threshold");
    opt(c_train, "--interp-delta", train_args.interp_delta,
        "interpolation threshold (-1 = 1e-3 * Var(y))");
    opt(c_train, "--log-every", train_args.log_every, "trajectory sampling stride");
    c_train->add_flag("--halve-lr", train_args.halve_lr,
                      "halve the step on logged objective increases");
    opt(c_train, "--cv", train_args.cv, "comma list of lambdas; pick by validation fold");
    opt(c_train, "--cv-frac", train_args.cv_frac, "validation fraction for --cv");

    CLI::App* c_lasso = app.add_subcommand("lasso", "convex solver on the explicit design");
    add_common(c_lasso, cfg_path, lasso.out, lasso.check);
    opt(c_lasso, "--data", lasso.data, "dataset CSV")->required();
    opt(c_lasso, "--lambda", lasso.lambda, "penalty strength or theory:<sigma>,<delta>");
    opt(c_lasso, "--max-iters", lasso.max_iters, "iteration cap");
    opt(c_lasso, "--tol", lasso.tol, "relative objective-change tolerance");
    opt(c_lasso, "--kkt-target", lasso.kkt_target, "early-stop KKT residual");
    opt(c_lasso, "--prune-eps", lasso.prune_eps, "drop |coeff| <= eps from the spectrum");
    c_lasso->add_flag("--trace", lasso.trace, "write per-iteration objective CSV");

    CLI::App* c_qg = app.add_subcommand("qg", "perturbation curvature ratios around a model");
    add_common(c_qg, cfg_path, qg.out, qg.check);
    opt(c_qg, "--checkpoint", qg.checkpoint, "model checkpoint JSON");
    opt(c_qg, "--data", qg.data, "dataset CSV (inputs only)");
    opt(c_qg, "--preset", qg.preset, "qg_preset: built-in sparse reference function");
    opt(c_qg, "--n", qg.n, "inputs to sample in preset mode");
    opt(c_qg, "--sigmas", qg.sigmas, "comma list of perturbation scales");
    opt(c_qg, "--K", qg.K, "perturbations per scale");
    opt(c_qg, "--seed", qg.seed, "master seed");
    c_qg->add_flag("--rsi", qg.rsi, "also write the secant ratio CSV");

    CLI::App* c_phase = app.add_subcommand("phase", "success-fraction grid with/without penalty");
    add_common(c_phase, cfg_path, phase.out, phase.check);
    opt(c_phase, "--family", phase.family, "monomial|power_law|staircase");
    opt(c_phase, "--d", phase.d, "cube dimension");
    opt(c_phase, "--model", phase.model, "model spec");
    opt(c_phase, "--params", phase.params, "function-class parameter grid (family-specific)");
    opt(c_phase, "--n-grid", phase.n_grid, "training sample sizes");
    opt(c_phase, "--trials", phase.trials, "independent trials per cell");
    opt(c_phase, "--tau", phase.tau, "test R^2 success threshold");
    opt(c_phase, "--sigma", phase.sigma, "label noise");
    opt(c_phase, "--test-n", phase.test_n, "held-out test points (noiseless labels)");
    opt(c_phase, "--lambda", phase.lambda, "penalty strength or theory:<sigma>,<delta>");
    opt(c_phase, "--lr", phase.lr, "learning rate");
    opt(c_phase, "--epochs", phase.epochs, "training epochs");
    opt(c_phase, "--batch", phase.batch, "minibatch size (0 = full batch)");
    opt(c_phase, "--warmup", phase.warmup, "penalty warmup epochs");
    c_phase->add_flag("--halve-lr", phase.halve_lr, "halve the step on objective increases");
    opt(c_phase, "--order", phase.order, "interaction order (power_law cells)");
    opt(c_phase, "--gamma", phase.gamma, "power-law decay exponent");
    opt(c_phase, "--seed", phase.seed, "master seed");
    opt(c_phase, "--threads", phase.threads, "worker cap (0 = SPECBOOL_THREADS/auto)");

    CLI::App* c_rate = app.add_subcommand("rate", "parameter-error decay across sample sizes");
    add_common(c_rate, cfg_path, rate.out, rate.check);
    opt(c_rate, "--d", rate.d, "cube dimension (<= 16)");
    opt(c_rate, "--order", rate.order, "interaction order of the truth");
    opt(c_rate, "--k", rate.k, "sparsity of the truth");
    opt(c_rate, "--gamma", rate.gamma, "power-law decay exponent");
    opt(c_rate, "--sigma", rate.sigma, "label noise");
    opt(c_rate, "--n-grid", rate.n_grid, "sample sizes (>= 3 for the slope fit)");
    opt(c_rate, "--seeds", rate.seeds, "trials per sample size");
    opt(c_rate, "--delta", rate.delta, "confidence level in the theoretical lambda");
    opt(c_rate, "--solver", rate.solver, "fista|sgd");
    opt(c_rate, "--lr", rate.lr, "sgd learning rate");
    opt(c_rate, "--epochs", rate.epochs, "sgd epochs");
    opt(c_rate, "--batch", rate.batch, "sgd minibatch size (0 = full batch)");
    opt(c_rate, "--warmup", rate.warmup, "sgd warmup epochs");
    opt(c_rate, "--seed", rate.seed, "master seed");
    opt(c_rate, "--threads", rate.threads, "worker cap (0 = SPECBOOL_THREADS/auto)");

    CLI::App* c_validate = app.add_subcommand("validate", "exhaustive + Monte-Carlo bound checks");
    add_common(c_validate, cfg_path, validate.out, validate.check);
    opt(c_validate, "--d", validate.d, "noise-check dimension");
    opt(c_validate, "--n", validate.n, "noise-check sample count");
    opt(c_validate, "--sigma", validate.sigma, "noise standard deviation");
    opt(c_validate, "--delta", validate.delta, "noise-check quantile level");
    opt(c_validate, "--trials", validate.trials, "Monte-Carlo trials");
    opt(c_validate, "--seed", validate.seed, "master seed");

    CLI::App* c_wht = app.add_subcommand("wht", "transform a table file to a spectrum file");
    c_wht->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    opt(c_wht, "--in", wht.in, "input file")->required();
    opt(c_wht, "--out", wht.out_file, "output file")->required();
    c_wht->add_flag("--inverse", wht.inverse, "spectrum JSON -> table CSV");
    opt(c_wht, "--prune-eps", wht.prune_eps, "forward transform pruning threshold");

    // Inject config-file values (if any) between the subcommand name and the
    // explicit flags, so explicit flags win under the take-last policy.
    std::vector<std::string> tokens;
    for (int i = 1; i < argc; ++i)
        tokens.emplace_back(argv[i]);
    try {
        std::string cfile;
        for (size_t i = 0; i < tokens.size(); ++i) {
            if (tokens[i] == "--config" && i + 1 < tokens.size())
                cfile = tokens[i + 1];
            else if (tokens[i].rfind("--config=", 0) == 0)
                cfile = tokens[i].substr(9);
        }
        if (!cfile.empty()) {
            size_t sub_pos = tokens.size();
            for (size_t i = 0; i < tokens.size(); ++i) {
                if (!tokens[i].empty() && tokens[i][0] != '-') {
                    sub_pos = i;
                    break;
                }
            }
            if (sub_pos < tokens.size()) {
                const std::vector<std::string> injected = config_tokens(cfile);
                tokens.insert(tokens.begin() + long(sub_pos) + 1, injected.begin(),
                              injected.end());
            }
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }

    std::vector<const char*> cargv;
    cargv.push_back(argv[0]);
    for (const auto& t : tokens)
        cargv.push_back(t.c_str());
    try {
        app.parse(int(cargv.size()), cargv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }

    try {
        if (app.got_subcommand(c_synth)) {
            write_effective_config(c_synth, (ensure_dir(synth.out), synth.out));
            return cmd_synth(synth);
        }
        if (app.got_subcommand(c_train)) {
            write_effective_config(c_train, (ensure_dir(train_args.out), train_args.out));
            return cmd_train(train_args);
        }
        if (app.got_subcommand(c_lasso)) {
            write_effective_config(c_lasso, (ensure_dir(lasso.out), lasso.out));
            return cmd_lasso(lasso);
        }
        if (app.got_subcommand(c_qg)) {
            write_effective_config(c_qg, (ensure_dir(qg.out), qg.out));
            return cmd_qg(qg);
        }
        if (app.got_subcommand(c_phase)) {
            write_effective_config(c_phase, (ensure_dir(phase.out), phase.out));
            return cmd_phase(phase);
        }
        if (app.got_subcommand(c_rate)) {
            write_effective_config(c_rate, (ensure_dir(rate.out), rate.out));
            return cmd_rate(rate);
        }
        if (app.got_subcommand(c_validate)) {
            write_effective_config(c_validate, (ensure_dir(validate.out), validate.out));
            return cmd_validate(validate);
        }
        if (app.got_subcommand(c_wht))
            return cmd_wht(wht);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    std::fprintf(stderr, "error: no subcommand\n");
    return 2;
}

} // namespace specbool
