#pragma once

// Machine-readable formats: OptimizationConfig JSON, report and trace JSON,
// and the binary FactorSet archive.

#include "dfshift/factorization.hpp"
#include "dfshift/optimizer.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace dfshift::io {

using json = nlohmann::json;

/// Version stamped into report and summary documents.
inline constexpr int kSchemaVersion = 1;

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// OptimizationConfig

inline json config_to_json(const OptimizationConfig& c) {
  json j;
  j["c_approx"] = c.c_approx ? json(*c.c_approx) : json(nullptr);
  j["max_iters"] = c.max_iters;
  j["learning_rate"] = c.learning_rate;
  j["adam_beta1"] = c.adam_beta1;
  j["adam_beta2"] = c.adam_beta2;
  j["adam_epsilon"] = c.adam_epsilon;
  j["rel_tol"] = c.rel_tol;
  j["patience"] = c.patience;
  j["seed"] = c.seed;
  j["err_budget"] = c.err_budget;
  return j;
}

/// Missing keys keep their defaults; unknown keys are rejected. `c_approx`
/// may be null to request automatic scaling.
inline OptimizationConfig config_from_json(const json& j) {
  if (!j.is_object()) throw FormatError("config: expected a JSON object");
  static const std::set<std::string> known{"c_approx", "max_iters",    "learning_rate", "adam_beta1", "adam_beta2",
                                           "adam_epsilon", "rel_tol", "patience",      "seed",       "err_budget"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw FormatError("config: unknown key '" + key + "'");
  }
  OptimizationConfig c;
  auto number = [&](const char* key, double& dst) {
    if (!j.contains(key)) return;
    if (!j[key].is_number()) throw FormatError(std::string("config: '") + key + "' must be a number");
    dst = j[key].get<double>();
  };
  auto count = [&](const char* key, auto& dst) {
    if (!j.contains(key)) return;
    if (!j[key].is_number_unsigned()) throw FormatError(std::string("config: '") + key + "' must be a nonnegative integer");
    dst = j[key].get<std::remove_reference_t<decltype(dst)>>();
  };
  if (j.contains("c_approx") && !j["c_approx"].is_null()) {
    double v = 0.0;
    number("c_approx", v);
    c.c_approx = v;
  }
  count("max_iters", c.max_iters);
  number("learning_rate", c.learning_rate);
  number("adam_beta1", c.adam_beta1);
  number("adam_beta2", c.adam_beta2);
  number("adam_epsilon", c.adam_epsilon);
  number("rel_tol", c.rel_tol);
  count("patience", c.patience);
  count("seed", c.seed);
  number("err_budget", c.err_budget);
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
  return c;
}

inline OptimizationConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open config '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw FormatError("config '" + path.string() + "': " + e.what());
  }
  return config_from_json(j);
}

// ---------------------------------------------------------------------------
// Reports

inline json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline json lambda_to_json(const LambdaBreakdown& l) {
  return {{"lambda_total", l.lambda_total},
          {"two_body_part", l.two_body_part},
          {"one_body_part", l.one_body_part},
          {"per_factor", l.per_factor}};
}

/// One row of the comparison table printed by `dfshift report`.
struct RunRow {
  std::string method;
  std::size_t n_orbitals = 0;
  std::size_t rank = 0;
  double lambda = 0.0;
  double err = 0.0;
};

inline json run_to_json(const RunRow& r) {
  return {{"method", r.method}, {"N", r.n_orbitals}, {"R", r.rank}, {"lambda", r.lambda}, {"err", r.err}};
}

/// Report document for an optimization run. Contains no timestamps, so
/// identical inputs produce identical bytes.
inline json report_to_json(const OptimizationReport& rep, std::size_t n_orbitals, const std::string& input_checksum,
                           const OptimizationConfig& cfg) {
  const std::size_t R = rep.best_params.factors.rank();
  json j;
  j["schema_version"] = kSchemaVersion;
  j["manifest"] = "manifest.json";
  j["input_checksum"] = input_checksum;
  j["integral_convention"] = "fcidump-chemist-normal-ordered";
  j["config"] = config_to_json(cfg);
  j["runs"] = json::array({run_to_json({"XDF", n_orbitals, R, rep.initial_lambda.lambda_total, rep.initial_err}),
                           run_to_json({"optimized", n_orbitals, R, rep.lambda_breakdown.lambda_total, rep.err_final})});
  json opt;
  opt["c_approx"] = rep.c_approx;
  opt["err_budget"] = rep.err_budget;
  opt["iterations_run"] = rep.iterations_run;
  opt["best_iteration"] = rep.best_iteration;
  opt["stop_reason"] = to_string(rep.stop_reason);
  opt["non_finite_iteration"] = rep.non_finite_iteration ? json(*rep.non_finite_iteration) : json(nullptr);
  opt["err_final"] = rep.err_final;
  opt["total_final"] = rep.total_final;
  opt["lambda"] = lambda_to_json(rep.lambda_breakdown);
  opt["initial_lambda"] = lambda_to_json(rep.initial_lambda);
  opt["initial_err"] = rep.initial_err;
  opt["kappa"] = rep.best_params.kappa;
  opt["xi"] = matrix_to_json(rep.best_params.xi.matrix());
  j["optimization"] = std::move(opt);
  return j;
}

/// Validates the parts of a report that `dfshift report` consumes.
inline std::vector<RunRow> runs_from_report(const json& j) {
  if (!j.is_object() || !j.contains("schema_version") || !j["schema_version"].is_number_integer()) {
    throw FormatError("report: missing integer 'schema_version'");
  }
  const int version = j["schema_version"].get<int>();
  if (version > kSchemaVersion) {
    throw FormatError("report: schema_version " + std::to_string(version) + " is newer than supported version " +
                      std::to_string(kSchemaVersion));
  }
  if (version < 1) throw FormatError("report: invalid schema_version " + std::to_string(version));
  if (!j.contains("runs") || !j["runs"].is_array()) throw FormatError("report: missing 'runs' array");
  std::vector<RunRow> rows;
  for (const auto& r : j["runs"]) {
    try {
      rows.push_back({r.at("method").get<std::string>(), r.at("N").get<std::size_t>(), r.at("R").get<std::size_t>(),
                      r.at("lambda").get<double>(), r.at("err").get<double>()});
    } catch (const json::exception& e) {
      throw FormatError(std::string("report: malformed run entry: ") + e.what());
    }
  }
  return rows;
}

inline json trace_line(const TracePoint& t) {
  return {{"iter", t.iter}, {"total", t.total}, {"err", t.err}, {"lambda", t.lambda}};
}

inline void write_trace(std::ostream& out, const std::vector<TracePoint>& trace) {
  for (const auto& t : trace) out << trace_line(t).dump() << '\n';
}

// ---------------------------------------------------------------------------
// FactorSet archive
//
//   bytes 0..7   magic "DFSFACT1"
//   u64 LE       manifest length L
//   L bytes      manifest JSON (format, version, n_orbitals, rank,
//                source_checksum, has_shift, n_electrons)
//   R*N*N f64 LE factor matrices, row-major, in order
//   if has_shift: f64 kappa, then N*N f64 xi (row-major)

struct FactorArchive {
  FactorSet factors;
  std::optional<ShiftParams> shift;
  std::string source_checksum;
};

inline constexpr std::array<char, 8> kArchiveMagic{'D', 'F', 'S', 'F', 'A', 'C', 'T', '1'};

namespace detail {

inline void put_u64(std::ostream& out, std::uint64_t v) {
  std::array<char, 8> b{};
  for (int i = 0; i < 8; ++i) b[static_cast<std::size_t>(i)] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b.data(), 8);
}

inline std::uint64_t get_u64(std::istream& in) {
  std::array<unsigned char, 8> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), 8)) throw FormatError("archive: truncated");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[static_cast<std::size_t>(i)];
  return v;
}

inline void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }
inline double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

inline void put_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index k = 0; k < m.cols(); ++k) put_f64(out, m(i, k));
}

inline Eigen::MatrixXd get_matrix(std::istream& in, std::size_t n) {
  Eigen::MatrixXd m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k) m(i, k) = get_f64(in);
  if (m != m.transpose()) throw FormatError("archive: stored matrix is not symmetric");
  return m;
}

}  // namespace detail

inline void write_archive(std::ostream& out, const FactorArchive& a) {
  const std::size_t n = a.factors.n_orbitals();
  json manifest{{"format", "dfshift-factors"},
                {"version", 1},
                {"n_orbitals", n},
                {"rank", a.factors.rank()},
                {"source_checksum", a.source_checksum},
                {"has_shift", a.shift.has_value()},
                {"n_electrons", a.shift ? json(a.shift->n_e) : json(nullptr)}};
  const std::string text = manifest.dump();
  out.write(kArchiveMagic.data(), kArchiveMagic.size());
  detail::put_u64(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& f : a.factors.factors()) detail::put_matrix(out, f.matrix());
  if (a.shift) {
    detail::put_f64(out, a.shift->kappa);
    detail::put_matrix(out, a.shift->xi.matrix());
  }
}

inline FactorArchive read_archive(std::istream& in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kArchiveMagic) throw FormatError("archive: bad magic");
  const std::uint64_t len = detail::get_u64(in);
  if (len > (1u << 20)) throw FormatError("archive: manifest too large");
  std::string text(len, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(len))) throw FormatError("archive: truncated manifest");
  json m;
  try {
    m = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("archive: manifest: ") + e.what());
  }
  FactorArchive a;
  std::size_t n = 0, R = 0;
  bool has_shift = false;
  try {
    if (m.at("format") != "dfshift-factors" || m.at("version") != 1) throw FormatError("archive: unsupported format");
    n = m.at("n_orbitals").get<std::size_t>();
    R = m.at("rank").get<std::size_t>();
    a.source_checksum = m.at("source_checksum").get<std::string>();
    has_shift = m.at("has_shift").get<bool>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("archive: manifest: ") + e.what());
  }
  std::vector<OneBodyMatrix> fs;
  fs.reserve(R);
  for (std::size_t r = 0; r < R; ++r) fs.emplace_back(detail::get_matrix(in, n));
  a.factors = FactorSet(n, std::move(fs));
  if (has_shift) {
    ShiftParams s;
    s.n_e = m.at("n_electrons").get<std::size_t>();
    s.kappa = detail::get_f64(in);
    s.xi = OneBodyMatrix(detail::get_matrix(in, n));
    a.shift = std::move(s);
  }
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError("archive: trailing bytes");
  return a;
}

inline void write_archive(const std::filesystem::path& path, const FactorArchive& a) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write archive '" + path.string() + "'");
  write_archive(out, a);
}

inline FactorArchive read_archive(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open archive '" + path.string() + "'");
  return read_archive(in);
}

}  // namespace dfshift::io
