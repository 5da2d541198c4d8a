#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ssd::bench {

enum class Dtype { f64, f32 };
enum class Format { json, csv, text };

/// Grid of layer sizes. `npq` ties N = P = Q when nonempty and overrides
/// the separate axes.
struct Grid {
    std::vector<std::size_t> t{64, 128, 256, 512};
    std::vector<std::size_t> n{8};
    std::vector<std::size_t> p{8};
    std::vector<std::size_t> q{16};
    std::vector<std::size_t> h{1};
    std::vector<std::size_t> g{1};
    std::vector<std::size_t> npq;
};

/// Parses "T=64:128:256,N=8,P=8,Q=16,H=1". Keys: T N P Q H G NPQ.
/// Throws std::invalid_argument on unknown keys, empty lists or zero sizes.
Grid parse_grid(const std::string& text);

struct BenchConfig {
    std::uint64_t seed = 0;
    Dtype dtype = Dtype::f64;
    Grid grid;
    std::vector<std::string> algorithms;  ///< empty means the default set
    std::vector<std::string> suites;      ///< empty means every suite
    std::size_t repetitions = 1;
    bool timing = false;                  ///< wall_ns stays 0 unless set
    bool inject_fault = false;            ///< perturbs the first oracle of every suite

    /// Throws std::invalid_argument on empty grids, zero repetitions,
    /// unknown suites or algorithms.
    void validate() const;
};

struct Record {
    std::string case_id;
    std::string suite;
    std::string params;
    double max_rel_err = 0.0;
    std::uint64_t mul_adds = 0;
    std::uint64_t elementwise = 0;
    std::uint64_t wall_ns = 0;
    bool pass = true;
    std::string note;
};

/// Least-squares slope of log(y) against log(x).
struct Fit {
    std::string name;
    std::string axis;
    std::vector<std::pair<double, double>> points;
    double exponent = 0.0;
    std::optional<double> expected;  ///< absent for informational fits
    double tolerance = 0.15;
    bool pass = true;
};

struct TableRow {
    std::string model;
    std::string state_size;
    std::string training_flops;
    double t_exponent = 0.0;
    double n_exponent = 0.0;
    double state_t_exponent = 0.0;
    double expected_t = 0.0;
    double expected_n = 0.0;
    double expected_state_t = 0.0;
    bool pass = true;
};

struct Report {
    std::string command;
    std::uint64_t seed = 0;
    std::string dtype = "f64";
    std::vector<std::string> suites;
    std::vector<Record> records;
    std::vector<Fit> fits;
    std::vector<TableRow> table;

    bool all_pass() const;
    std::size_t failures() const;
};

std::vector<std::string> suite_names();
std::vector<std::string> algorithm_names();
std::vector<std::string> default_algorithms();

double fit_exponent(const std::vector<std::pair<double, double>>& points);

Report cmd_verify(const BenchConfig& config);
Report cmd_bench(const BenchConfig& config);
Report cmd_table(const BenchConfig& config);

std::string to_json(const Report& report);
/// Fixed header: case,params,max_rel_err,mul_adds,wall_ns,status
std::string to_csv(const Report& report);
/// Fixed header: model,state_size,training_flops,t_exponent,expected_t,n_exponent,expected_n,state_t_exponent,expected_state_t,status
std::string table_csv(const Report& report);
std::string table_text(const Report& report);
std::string summary_text(const Report& report);

}  // namespace ssd::bench
