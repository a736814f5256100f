// dfshift: factorize, optimize, verify and report on electronic Hamiltonians.
//
// Exit codes: 0 ok, 1 input error, 2 data error, 3 numeric failure,
// 4 verification failure.

#include "dfshift/factorization.hpp"
#include "dfshift/fcidump.hpp"
#include "dfshift/io.hpp"
#include "dfshift/optimizer.hpp"
#include "dfshift/verify.hpp"

#include <CLI11.hpp>
#include <openssl/evp.h>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using dfshift::io::json;

namespace {

constexpr const char* kToolVersion = "1.0.0";

enum Exit : int { kOk = 0, kInputError = 1, kDataError = 2, kNumericError = 3, kVerificationError = 4 };

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return "sha256:" + hex.str();
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string platform() {
  std::string os =
#if defined(__linux__)
      "linux";
#elif defined(__APPLE__)
      "darwin";
#elif defined(_WIN32)
      "windows";
#else
      "unknown";
#endif
  std::string arch =
#if defined(__x86_64__)
      "x86_64";
#elif defined(__aarch64__)
      "aarch64";
#else
      "unknown";
#endif
  return os + "-" + arch;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw dfshift::io::FormatError("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

json manifest(const std::string& command, const std::string& checksum, const json& config, std::size_t rank,
              const std::string& started) {
  return {{"tool_version", kToolVersion},
          {"command", command},
          {"input_checksum", checksum},
          {"rank", rank},
          {"config", config},
          {"platform", platform()},
          {"timestamps", {{"started", started}, {"finished", utc_now()}}}};
}

void prepare_out(const fs::path& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw dfshift::io::FormatError("cannot create output directory '" + out.string() + "': " + ec.message());
}

// Runs f, mapping library exceptions onto the exit-code taxonomy.
template <typename F>
int guarded(F&& f) {
  try {
    return f();
  } catch (const dfshift::FcidumpError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const dfshift::io::FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const dfshift::IndefiniteTensorError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  }
}

int cmd_factorize(const fs::path& input, std::size_t rank, const fs::path& out) {
  return guarded([&] {
    const std::string started = utc_now();
    const dfshift::Hamiltonian H = dfshift::load_integrals(input);
    const std::string checksum = sha256_file(input);
    const dfshift::FactorSet F = dfshift::initial_double_factorization(H.g, rank);
    const dfshift::LambdaBreakdown lam = dfshift::lambda_df(F, dfshift::effective_one_body(H));
    const double err = dfshift::frobenius_error(H.g, F);

    prepare_out(out);
    dfshift::io::write_archive(out / "factors.dfa", {F, std::nullopt, checksum});
    json summary{{"schema_version", dfshift::io::kSchemaVersion},
                 {"manifest", "manifest.json"},
                 {"input_checksum", checksum},
                 {"N", H.n_orbitals()},
                 {"R", F.rank()},
                 {"lambda_df", lam.lambda_total},
                 {"err", err},
                 {"two_body_part", lam.two_body_part},
                 {"one_body_part", lam.one_body_part},
                 {"per_factor", lam.per_factor}};
    write_json(out / "summary.json", summary);
    write_json(out / "manifest.json", manifest("factorize", checksum, nullptr, F.rank(), started));
    std::cout << "N=" << H.n_orbitals() << " R=" << F.rank() << " lambda_df=" << lam.lambda_total << " err=" << err
              << '\n';
    return kOk;
  });
}

int cmd_optimize(const fs::path& input, std::size_t rank, const std::string& config_path,
                 std::optional<std::uint64_t> seed, const fs::path& out) {
  return guarded([&] {
    const std::string started = utc_now();
    dfshift::OptimizationConfig cfg = config_path.empty() ? dfshift::OptimizationConfig{}
                                                          : dfshift::io::load_config(config_path);
    if (seed) cfg.seed = *seed;
    const dfshift::Hamiltonian H = dfshift::load_integrals(input);
    const std::string checksum = sha256_file(input);
    const dfshift::OptimizationReport rep = dfshift::optimize(H, rank, cfg);

    prepare_out(out);
    write_json(out / "report.json", dfshift::io::report_to_json(rep, H.n_orbitals(), checksum, cfg));
    {
      std::ofstream trace(out / "trace.jsonl");
      dfshift::io::write_trace(trace, rep.trace);
    }
    dfshift::io::write_archive(out / "factors.dfa",
                               {rep.best_params.factors, rep.best_params.shift(H.n_electrons), checksum});
    write_json(out / "manifest.json",
               manifest("optimize", checksum, dfshift::io::config_to_json(cfg), rep.best_params.factors.rank(), started));

    std::cout << "lambda=" << rep.lambda_breakdown.lambda_total << " (initial " << rep.initial_lambda.lambda_total
              << ") err=" << rep.err_final << " iterations=" << rep.iterations_run
              << " stop=" << dfshift::to_string(rep.stop_reason) << '\n';
    if (rep.stop_reason == dfshift::StopReason::NonFiniteCost) {
      std::cerr << "error: non-finite cost at iteration " << *rep.non_finite_iteration << '\n';
      return kNumericError;
    }
    return kOk;
  });
}

int cmd_verify(const std::string& level, const std::string& fault) {
  dfshift::verify::ShiftFunction shift = dfshift::apply_symmetry_shift;
  if (fault == "shift-sign") {
    // Deliberately wrong: flips the sign of the two-body xi term.
    shift = [](const dfshift::Hamiltonian& H, const dfshift::ShiftParams& s) {
      dfshift::Hamiltonian out = dfshift::apply_symmetry_shift(H, s);
      out.g = dfshift::TwoBodyTensor::from_supermatrix(H.n_orbitals(),
                                                       2.0 * H.g.supermatrix() - out.g.supermatrix());
      return out;
    };
  } else if (!fault.empty()) {
    std::cerr << "error: unknown fault '" << fault << "'\n";
    return kInputError;
  }
  const auto lvl = level == "full" ? dfshift::verify::Level::Full : dfshift::verify::Level::Fast;
  bool ok = true;
  for (const auto& r : dfshift::verify::run(lvl, shift)) {
    std::printf("%-4s %-45s max_dev=%.3e tol=%.1e\n", r.passed() ? "ok" : "FAIL", r.name.c_str(), r.max_deviation,
                r.tolerance);
    if (!r.passed()) {
      std::cerr << "verification failed: " << r.name << '\n';
      ok = false;
    }
  }
  return ok ? kOk : kVerificationError;
}

int cmd_report(const fs::path& path) {
  return guarded([&] {
    std::ifstream in(path);
    if (!in) throw dfshift::io::FormatError("cannot open report '" + path.string() + "'");
    json j;
    try {
      in >> j;
    } catch (const json::parse_error& e) {
      throw dfshift::io::FormatError(std::string("report: ") + e.what());
    }
    const auto rows = dfshift::io::runs_from_report(j);
    std::printf("%-12s %5s %5s %14s %12s\n", "method", "N", "R", "lambda", "error");
    for (const auto& r : rows) {
      std::printf("%-12s %5zu %5zu %14.4f %12.3e\n", r.method.c_str(), r.n_orbitals, r.rank, r.lambda, r.err);
    }
    return kOk;
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Block-encoding lambda reduction by symmetry shifts and double factorization"};
  app.require_subcommand(1);

  std::string input, out, config, level = "fast", fault;
  std::size_t rank = 0;
  std::optional<std::uint64_t> seed;

  auto* fac = app.add_subcommand("factorize", "standard double factorization of an FCIDUMP");
  fac->add_option("--input", input, "FCIDUMP file")->required();
  fac->add_option("--rank", rank, "number of rank-2 factors R")->required()->check(CLI::PositiveNumber);
  fac->add_option("--out", out, "output directory")->required();

  auto* opt = app.add_subcommand("optimize", "joint shift + factorization optimization");
  opt->add_option("--input", input, "FCIDUMP file")->required();
  opt->add_option("--rank", rank, "number of rank-2 factors R")->required()->check(CLI::PositiveNumber);
  opt->add_option("--config", config, "OptimizationConfig JSON");
  opt->add_option("--seed", seed, "overrides the config seed");
  opt->add_option("--out", out, "output directory")->required();

  auto* ver = app.add_subcommand("verify", "run the dense-oracle self checks");
  ver->add_option("--level", level, "fast (N <= 2) or full (N <= 3 plus gradient checks)")
      ->check(CLI::IsMember({"fast", "full"}));
  ver->add_option("--inject-fault", fault)->group("");

  auto* rep = app.add_subcommand("report", "print the runs of a report as a table");
  rep->add_option("--input", input, "report.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInputError;
  }

  if (*fac) return cmd_factorize(input, rank, out);
  if (*opt) return cmd_optimize(input, rank, config, seed, out);
  if (*ver) return cmd_verify(level, fault);
  if (*rep) return cmd_report(input);
  return kInputError;
}
