#pragma once

// File formats.  All floating-point output uses shortest round-trip
// formatting (std::to_chars / the JSON library's equivalent), so identical
// values serialize to identical bytes and reruns with the same seed and
// config reproduce output files exactly.
//
//   function table CSV:  header "index,value", rows in index order
//   dataset CSV:         header "x_1,...,x_d,y", inputs written as 1 / -1
//   spectrum JSON:       {"d": int, "entries": [{"coeff": f, "mask": int}..]}
//   checkpoint JSON:     {"kind": str, "spec": {...}, "theta": [floats]}
//   trajectory CSV:      header "epoch,mse,reg,total"
//   qg CSV:              header "sigma,min_ratio,min_ratio_per_param,K,M"
//   rsi CSV:             header "sigma,min_ratio,K,M"
//   phase CSV:           header "param,n,frac_sp,frac_nosp,T,tau"
//   rate CSV:            header "n,median_err"

#include <memory>
#include <string>
#include <vector>

#include "specbool/analysis.hpp"
#include "specbool/hypercube.hpp"
#include "specbool/models.hpp"
#include "specbool/trainer.hpp"

namespace specbool {

std::string format_double(double v);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

void write_function_table_csv(const std::string& path, const FunctionTable& table);
FunctionTable read_function_table_csv(const std::string& path);

void write_spectrum_json(const std::string& path, const Spectrum& spectrum);
Spectrum read_spectrum_json(const std::string& path);

void write_dataset_csv(const std::string& path, const Dataset& data);
Dataset read_dataset_csv(const std::string& path);

void save_checkpoint(const std::string& path, const Model& model);
std::unique_ptr<Model> load_checkpoint(const std::string& path);

// report JSON omits wall time (a timing, not a result) so reruns compare
// byte-identical; it is printed to stderr by the CLI instead.
void write_train_report_json(const std::string& path, const TrainReport& report);
void write_trajectory_csv(const std::string& path, const std::vector<TrainStep>& trajectory);

void write_qg_csv(const std::string& path, const std::vector<QGRow>& rows);
void write_rsi_csv(const std::string& path, const std::vector<RsiRow>& rows);

struct PhaseRow {
    double param = 0.0;
    size_t n = 0;
    double frac_sp = 0.0;
    double frac_nosp = 0.0;
    int T = 0;
    double tau = 0.0;
};
void write_phase_csv(const std::string& path, const std::vector<PhaseRow>& rows);

struct RateRow {
    size_t n = 0;
    double median_err = 0.0;
};
void write_rate_csv(const std::string& path, const std::vector<RateRow>& rows);

} // namespace specbool
