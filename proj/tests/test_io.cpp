#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "specbool/io.hpp"
#include "specbool/rng.hpp"
#include "specbool/synth.hpp"

using namespace specbool;
namespace fs = std::filesystem;

namespace {

struct TmpDir {
    fs::path path;
    TmpDir() {
        path = fs::temp_directory_path() /
               ("specbool_io_test_" + std::to_string(uint64_t(::getpid())));
        fs::create_directories(path);
    }
    ~TmpDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

double reparse(const std::string& text) {
    return std::stod(text);
}

} // namespace

TEST_CASE("shortest round-trip double formatting") {
    Rng rng(1);
    for (int i = 0; i < 2000; ++i) {
        double v = rng.gaussian() * std::pow(10.0, rng.uniform(-300.0, 300.0));
        if (!std::isfinite(v))
            continue;
        CHECK(reparse(format_double(v)) == v);
    }
    CHECK(format_double(1.0) == "1");
    CHECK(format_double(-0.5) == "-0.5");
    CHECK(reparse(format_double(0.1)) == 0.1);
}

TEST_CASE("function table round trip is exact") {
    TmpDir tmp;
    Rng rng(5);
    FunctionTable table;
    table.d = 4;
    table.values.resize(16);
    for (double& v : table.values)
        v = rng.gaussian();
    const std::string path = tmp.file("table.csv");
    write_function_table_csv(path, table);
    FunctionTable back = read_function_table_csv(path);
    CHECK(back.d == 4);
    CHECK(back.values == table.values); // bitwise
    // Rewrites are byte-identical.
    const std::string bytes = read_text_file(path);
    write_function_table_csv(path, back);
    CHECK(read_text_file(path) == bytes);
}

TEST_CASE("spectrum round trip is exact") {
    TmpDir tmp;
    GroundTruth truth = gen_power_law(9, 2, 6, 1.3, 77);
    const std::string path = tmp.file("spectrum.json");
    write_spectrum_json(path, truth.spectrum);
    Spectrum back = read_spectrum_json(path);
    CHECK(back.d == truth.spectrum.d);
    REQUIRE(back.entries.size() == truth.spectrum.entries.size());
    for (size_t i = 0; i < back.entries.size(); ++i) {
        CHECK(back.entries[i].mask == truth.spectrum.entries[i].mask);
        CHECK(back.entries[i].coeff == truth.spectrum.entries[i].coeff);
    }
    const std::string bytes = read_text_file(path);
    write_spectrum_json(path, back);
    CHECK(read_text_file(path) == bytes);
}

TEST_CASE("dataset round trip is exact") {
    TmpDir tmp;
    GroundTruth truth = gen_power_law(6, 2, 3, 1.0, 3);
    Dataset data = sample_dataset(truth.spectrum, 50, 0.3, 4);
    const std::string path = tmp.file("data.csv");
    write_dataset_csv(path, data);
    Dataset back = read_dataset_csv(path);
    CHECK(back.d == data.d);
    CHECK(back.X == data.X);
    CHECK(back.y == data.y);
    const std::string bytes = read_text_file(path);
    write_dataset_csv(path, back);
    CHECK(read_text_file(path) == bytes);
}

TEST_CASE("checkpoints restore every model kind exactly") {
    TmpDir tmp;
    Rng rng(11);
    std::vector<std::string> specs = {"linear", "poly:full", "poly:1,5,9", "mlp:6,4"};
    const int d = 4;
    for (const auto& text : specs) {
        auto model = init_model(parse_model_spec(text, d), 21);
        for (auto& t : model->params())
            t += rng.gaussian();
        const std::string path = tmp.file("ckpt.json");
        save_checkpoint(path, *model);
        auto back = load_checkpoint(path);
        CHECK(back->kind() == model->kind());
        CHECK(back->dim() == d);
        REQUIRE(back->param_count() == model->param_count());
        for (int j = 0; j < model->param_count(); ++j)
            REQUIRE(back->params()[size_t(j)] == model->params()[size_t(j)]);
        for (uint32_t i = 0; i < (1u << d); ++i) {
            auto x = index_to_point(i, d);
            REQUIRE(back->eval(std::span<const double>(x)) ==
                    model->eval(std::span<const double>(x)));
        }
        const std::string bytes = read_text_file(path);
        save_checkpoint(path, *back);
        CHECK(read_text_file(path) == bytes);
    }
}

TEST_CASE("training artifacts serialize with stable headers") {
    TmpDir tmp;
    TrainReport rep;
    rep.theta = {0.5, -1.0};
    rep.trajectory = {{0, 1.0, 0.5, 1.5}, {10, 0.25, 0.4, 0.65}};
    rep.final_mse = 0.25;
    rep.final_reg = 0.4;
    rep.final_total = 0.65;
    rep.stationarity_residual = 1e-4;
    rep.is_stationary = true;
    rep.is_interpolator = false;
    rep.interpolation_delta = 1e-3;
    rep.epochs_run = 10;
    rep.final_learning_rate = 0.01;
    const std::string rpath = tmp.file("report.json");
    write_train_report_json(rpath, rep);
    const std::string rtext = read_text_file(rpath);
    CHECK(rtext.find("\"final_mse\"") != std::string::npos);
    CHECK(rtext.find("\"stationarity_residual\"") != std::string::npos);
    CHECK(rtext.find("wall_time") == std::string::npos);

    const std::string tpath = tmp.file("trajectory.csv");
    write_trajectory_csv(tpath, rep.trajectory);
    const std::string ttext = read_text_file(tpath);
    CHECK(ttext.rfind("epoch,mse,reg,total\n", 0) == 0);
    CHECK(ttext.find("\n10,0.25,0.4,0.65\n") != std::string::npos);

    std::vector<QGRow> qg = {{0.1, 3.0, 1.0, 40, 3}};
    const std::string qpath = tmp.file("qg.csv");
    write_qg_csv(qpath, qg);
    CHECK(read_text_file(qpath) == "sigma,min_ratio,min_ratio_per_param,K,M\n0.1,3,1,40,3\n");

    std::vector<RsiRow> rsi = {{0.1, 2.0, 40, 3}};
    const std::string spath = tmp.file("rsi.csv");
    write_rsi_csv(spath, rsi);
    CHECK(read_text_file(spath) == "sigma,min_ratio,K,M\n0.1,2,40,3\n");

    std::vector<PhaseRow> phase = {{100.0, 32, 0.8, 0.2, 5, 0.45}};
    const std::string ppath = tmp.file("phase.csv");
    write_phase_csv(ppath, phase);
    CHECK(read_text_file(ppath) ==
          "param,n,frac_sp,frac_nosp,T,tau\n100,32,0.8,0.2,5,0.45\n");

    std::vector<RateRow> rate = {{100, 0.5}, {200, 0.25}};
    const std::string rpath2 = tmp.file("rate.csv");
    write_rate_csv(rpath2, rate);
    CHECK(read_text_file(rpath2) == "n,median_err\n100,0.5\n200,0.25\n");
}

TEST_CASE("malformed files are rejected") {
    TmpDir tmp;
    const std::string path = tmp.file("bad");
    write_text_file(path, "index,value\n0,1.0\n1,2.0\n2,3.0\n");
    CHECK_THROWS_AS(read_function_table_csv(path), std::invalid_argument); // 3 rows
    write_text_file(path, "wrong,header\n0,1.0\n1,2.0\n");
    CHECK_THROWS_AS(read_function_table_csv(path), std::invalid_argument);
    write_text_file(path, "x_1,x_2,y\n1,0,0.5\n");
    CHECK_THROWS_AS(read_dataset_csv(path), std::invalid_argument); // input not +-1
    write_text_file(path, "x_1,x_2,y\n1,-1\n");
    CHECK_THROWS_AS(read_dataset_csv(path), std::invalid_argument); // short row
    write_text_file(path, R"({"d": 3, "entries": [{"coeff": 1.0, "mask": 9}]})");
    CHECK_THROWS_AS(read_spectrum_json(path), std::invalid_argument); // mask >= 2^d
    write_text_file(path,
                    R"({"d": 3, "entries": [{"coeff": 1.0, "mask": 4}, {"coeff": 1.0, "mask": 2}]})");
    CHECK_THROWS_AS(read_spectrum_json(path), std::invalid_argument); // unsorted
    write_text_file(path, R"({"kind": "linear", "spec": {"d": 3}, "theta": [1.0]})");
    CHECK_THROWS_AS(load_checkpoint(path), std::invalid_argument); // theta length
    write_text_file(path, "not json at all {");
    CHECK_THROWS_AS(read_spectrum_json(path), std::invalid_argument);
    CHECK_THROWS_AS(read_text_file(tmp.file("missing")), std::runtime_error);
}

TEST_CASE("dataset reader accepts +1 and windows line endings") {
    TmpDir tmp;
    const std::string path = tmp.file("crlf.csv");
    write_text_file(path, "x_1,x_2,y\r\n+1,-1,0.5\r\n-1,+1,-0.25\r\n");
    Dataset data = read_dataset_csv(path);
    REQUIRE(data.size() == 2);
    CHECK(data.X == std::vector<double>{1.0, -1.0, -1.0, 1.0});
    CHECK(data.y == std::vector<double>{0.5, -0.25});
}
