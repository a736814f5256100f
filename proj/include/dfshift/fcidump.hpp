#pragma once

#include "dfshift/hamiltonian.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dfshift {

class FcidumpError : public std::runtime_error {
 public:
  enum class Kind { Io, MalformedHeader, MalformedRecord, NonFiniteValue, IndexOutOfRange, Asymmetric };

  FcidumpError(Kind kind, std::size_t line, const std::string& what)
      : std::runtime_error(format(kind, line, what)), kind_(kind), line_(line) {}

  Kind kind() const { return kind_; }
  /// 1-based line number, 0 when not tied to a line.
  std::size_t line() const { return line_; }

  static const char* kind_name(Kind k) {
    switch (k) {
      case Kind::Io: return "io error";
      case Kind::MalformedHeader: return "malformed header";
      case Kind::MalformedRecord: return "malformed record";
      case Kind::NonFiniteValue: return "non-finite value";
      case Kind::IndexOutOfRange: return "index out of range";
      case Kind::Asymmetric: return "asymmetric integrals";
    }
    return "error";
  }

 private:
  static std::string format(Kind k, std::size_t line, const std::string& what) {
    std::string s = std::string("FCIDUMP ") + kind_name(k);
    if (line > 0) s += " at line " + std::to_string(line);
    return s + ": " + what;
  }

  Kind kind_;
  std::size_t line_;
};

/// FCIDUMP contents exactly as stored: one-body h_ij and chemists'-notation
/// (ij|kl) for the normal-ordered Hamiltonian.
struct IntegralFile {
  std::size_t n_orbitals = 0;
  std::size_t n_electrons = 0;
  int ms2 = 0;
  double core_constant = 0.0;
  OneBodyMatrix one_body;
  TwoBodyTensor eri;
};

namespace detail {

/// Relative tolerance under which duplicate entries of one symmetry orbit are
/// averaged instead of rejected.
inline constexpr double kAsymmetryTolerance = 1e-10;

inline std::string upper(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::toupper(c); });
  return out;
}

inline std::optional<double> parse_real(std::string token) {
  // Fortran writers sometimes emit 1.0D-03.
  std::replace(token.begin(), token.end(), 'D', 'E');
  std::replace(token.begin(), token.end(), 'd', 'e');
  const char* first = token.data();
  if (!token.empty() && token[0] == '+') ++first;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(first, token.data() + token.size(), v);
  if (ec == std::errc::result_out_of_range) return HUGE_VAL;
  if (ec != std::errc() || ptr != token.data() + token.size()) return std::nullopt;
  return v;
}

inline std::optional<long long> parse_int(std::string_view token) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size()) return std::nullopt;
  return v;
}

inline std::string format_real(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

// Merges a value into a slot that may already hold an entry of the same
// symmetry orbit.
inline double merge_entry(bool seen, double old, double v, std::size_t line) {
  if (!seen) return v;
  const double scale = std::max(std::abs(old), std::abs(v));
  if (std::abs(old - v) > kAsymmetryTolerance * scale) {
    throw FcidumpError(FcidumpError::Kind::Asymmetric, line,
                       "value " + format_real(v) + " conflicts with symmetric partner " + format_real(old));
  }
  return 0.5 * (old + v);
}

inline std::size_t tri(std::size_t i, std::size_t j) {
  if (i < j) std::swap(i, j);
  return i * (i + 1) / 2 + j;
}

}  // namespace detail

/// Parses FCIDUMP text. Header `&FCI NORB=..,NELEC=..,MS2=..,` terminated by
/// `&END` or `/`, then records `value i j k l` with 1-based indices.
inline IntegralFile read_fcidump(std::istream& in) {
  using Kind = FcidumpError::Kind;
  std::string line;
  std::size_t lineno = 0;

  std::string header;
  bool started = false;
  bool closed = false;
  while (!closed && std::getline(in, line)) {
    ++lineno;
    std::string up = detail::upper(line);
    if (!started) {
      const auto pos = up.find("&FCI");
      if (pos == std::string::npos) {
        if (up.find_first_not_of(" \t\r") == std::string::npos) continue;
        throw FcidumpError(Kind::MalformedHeader, lineno, "expected '&FCI'");
      }
      started = true;
      up = up.substr(pos + 4);
    }
    for (const char* end : {"&END", "$END"}) {
      if (const auto p = up.find(end); p != std::string::npos) {
        up = up.substr(0, p);
        closed = true;
      }
    }
    if (!closed) {
      std::string trimmed = up;
      trimmed.erase(0, trimmed.find_first_not_of(" \t\r"));
      trimmed.erase(trimmed.find_last_not_of(" \t\r") + 1);
      if (trimmed == "/" || (!trimmed.empty() && trimmed.back() == '/')) {
        up = trimmed.substr(0, trimmed.size() - 1);
        closed = true;
      }
    }
    header += up + ",";
  }
  if (!started) throw FcidumpError(Kind::MalformedHeader, 0, "missing '&FCI' header");
  if (!closed) throw FcidumpError(Kind::MalformedHeader, lineno, "header not terminated by '&END' or '/'");
  const std::size_t header_end_line = lineno;

  // KEY=value[,value...] pairs; list values (ORBSYM) are skipped.
  std::map<std::string, std::string> fields;
  {
    std::string current_key;
    std::string token;
    std::istringstream hs(header);
    while (std::getline(hs, token, ',')) {
      token.erase(std::remove_if(token.begin(), token.end(), [](unsigned char c) { return std::isspace(c); }),
                  token.end());
      if (token.empty()) continue;
      const auto eq = token.find('=');
      if (eq == std::string::npos) continue;
      current_key = token.substr(0, eq);
      fields[current_key] = token.substr(eq + 1);
    }
  }
  auto int_field = [&](const std::string& key, std::optional<long long> fallback) -> long long {
    const auto it = fields.find(key);
    if (it == fields.end()) {
      if (fallback) return *fallback;
      throw FcidumpError(Kind::MalformedHeader, header_end_line, "missing " + key);
    }
    const auto v = detail::parse_int(it->second);
    if (!v) throw FcidumpError(Kind::MalformedHeader, header_end_line, key + " is not an integer: '" + it->second + "'");
    return *v;
  };
  const long long norb = int_field("NORB", std::nullopt);
  const long long nelec = int_field("NELEC", std::nullopt);
  const long long ms2 = int_field("MS2", 0);
  if (norb < 1) throw FcidumpError(Kind::MalformedHeader, header_end_line, "NORB must be positive");
  if (nelec < 0 || nelec > 2 * norb) {
    throw FcidumpError(Kind::MalformedHeader, header_end_line, "NELEC out of range [0, 2*NORB]");
  }

  const auto n = static_cast<std::size_t>(norb);
  IntegralFile out;
  out.n_orbitals = n;
  out.n_electrons = static_cast<std::size_t>(nelec);
  out.ms2 = static_cast<int>(ms2);

  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  std::vector<char> h_seen(n * (n + 1) / 2, 0);
  const std::size_t npair = n * (n + 1) / 2;
  std::vector<double> eri(npair * (npair + 1) / 2, 0.0);
  std::vector<char> eri_seen(eri.size(), 0);
  bool core_seen = false;

  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    if (tok.size() != 5) {
      throw FcidumpError(Kind::MalformedRecord, lineno, "expected 'value i j k l', got " +
                                                            std::to_string(tok.size()) + " fields");
    }
    const auto value = detail::parse_real(tok[0]);
    if (!value) throw FcidumpError(Kind::MalformedRecord, lineno, "unparsable value '" + tok[0] + "'");
    if (!std::isfinite(*value)) throw FcidumpError(Kind::NonFiniteValue, lineno, "value '" + tok[0] + "'");
    std::array<long long, 4> idx{};
    for (int a = 0; a < 4; ++a) {
      const auto v = detail::parse_int(tok[a + 1]);
      if (!v) throw FcidumpError(Kind::MalformedRecord, lineno, "unparsable index '" + tok[a + 1] + "'");
      if (*v < 0 || *v > norb) {
        throw FcidumpError(Kind::IndexOutOfRange, lineno,
                           "index " + tok[a + 1] + " outside [0, NORB=" + std::to_string(norb) + "]");
      }
      idx[a] = *v;
    }
    const auto [i, j, k, l] = idx;
    if (i == 0 && j == 0 && k == 0 && l == 0) {
      out.core_constant = detail::merge_entry(core_seen, out.core_constant, *value, lineno);
      core_seen = true;
    } else if (i > 0 && j == 0 && k == 0 && l == 0) {
      // Orbital energy record; carries no Hamiltonian information.
      continue;
    } else if (i > 0 && j > 0 && k == 0 && l == 0) {
      const std::size_t a = static_cast<std::size_t>(i - 1), b = static_cast<std::size_t>(j - 1);
      const std::size_t t = detail::tri(a, b);
      const double v = detail::merge_entry(h_seen[t], h(a, b), *value, lineno);
      h(a, b) = h(b, a) = v;
      h_seen[t] = 1;
    } else if (i > 0 && j > 0 && k > 0 && l > 0) {
      const std::size_t p = detail::tri(static_cast<std::size_t>(i - 1), static_cast<std::size_t>(j - 1));
      const std::size_t q = detail::tri(static_cast<std::size_t>(k - 1), static_cast<std::size_t>(l - 1));
      const std::size_t t = detail::tri(p, q);
      eri[t] = detail::merge_entry(eri_seen[t], eri[t], *value, lineno);
      eri_seen[t] = 1;
    } else {
      throw FcidumpError(Kind::MalformedRecord, lineno, "index pattern is neither one-body, two-body nor core");
    }
  }

  out.one_body = OneBodyMatrix(h);
  out.eri = TwoBodyTensor(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j)
      for (std::size_t k = 0; k < n; ++k)
        for (std::size_t l = 0; l <= k; ++l) {
          const std::size_t p = detail::tri(i, j), q = detail::tri(k, l);
          if (q > p) continue;
          out.eri.set(i, j, k, l, eri[detail::tri(p, q)]);
        }
  return out;
}

inline IntegralFile read_fcidump(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FcidumpError(FcidumpError::Kind::Io, 0, "cannot open '" + path.string() + "'");
  return read_fcidump(in);
}

/// Writes the canonical representative of each symmetry orbit; exact zeros are
/// omitted. Values use the shortest round-trip decimal form.
inline void write_fcidump(std::ostream& out, const IntegralFile& f) {
  const std::size_t n = f.n_orbitals;
  out << "&FCI NORB=" << n << ",NELEC=" << f.n_electrons << ",MS2=" << f.ms2 << ",\n";
  out << " ORBSYM=";
  for (std::size_t i = 0; i < n; ++i) out << "1,";
  out << "\n ISYM=1,\n&END\n";
  auto record = [&](double v, std::size_t i, std::size_t j, std::size_t k, std::size_t l) {
    out << detail::format_real(v) << ' ' << i << ' ' << j << ' ' << k << ' ' << l << '\n';
  };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j)
      for (std::size_t k = 0; k <= i; ++k)
        for (std::size_t l = 0; l <= k; ++l) {
          if (detail::tri(k, l) > detail::tri(i, j)) continue;
          const double v = f.eri(i, j, k, l);
          if (v != 0.0) record(v, i + 1, j + 1, k + 1, l + 1);
        }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      const double v = f.one_body(i, j);
      if (v != 0.0) record(v, i + 1, j + 1, 0, 0);
    }
  record(f.core_constant, 0, 0, 0, 0);
}

inline void write_fcidump(const std::filesystem::path& path, const IntegralFile& f) {
  std::ofstream out(path);
  if (!out) throw FcidumpError(FcidumpError::Kind::Io, 0, "cannot write '" + path.string() + "'");
  write_fcidump(out, f);
}

/// Converts normal-ordered chemists' integrals to the E_ij E_kl form:
/// g_ijkl = (ij|kl)/2 and h_ij -= sum_k (ik|kj)/2.
inline Hamiltonian to_hamiltonian(const IntegralFile& f) {
  const std::size_t n = f.n_orbitals;
  Eigen::MatrixXd g = 0.5 * f.eri.supermatrix();
  Eigen::MatrixXd h = f.one_body.matrix();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double c = 0.0;
      for (std::size_t k = 0; k < n; ++k) c += g(TwoBodyTensor::pair(n, i, k), TwoBodyTensor::pair(n, k, j));
      h(i, j) -= c;
    }
  return Hamiltonian(OneBodyMatrix(h), TwoBodyTensor::from_supermatrix(n, g), f.core_constant, f.n_electrons);
}

/// Inverse of to_hamiltonian. Exact for the two-body part; the one-body
/// correction is re-added in the same summation order.
inline IntegralFile to_integral_file(const Hamiltonian& H, int ms2 = 0) {
  const std::size_t n = H.n_orbitals();
  const auto& g = H.g.supermatrix();
  Eigen::MatrixXd h = H.h.matrix();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double c = 0.0;
      for (std::size_t k = 0; k < n; ++k) c += g(TwoBodyTensor::pair(n, i, k), TwoBodyTensor::pair(n, k, j));
      h(i, j) += c;
    }
  IntegralFile f;
  f.n_orbitals = n;
  f.n_electrons = H.n_electrons;
  f.ms2 = ms2;
  f.core_constant = H.core_constant;
  f.one_body = OneBodyMatrix(h);
  f.eri = TwoBodyTensor::from_supermatrix(n, 2.0 * g);
  return f;
}

inline Hamiltonian load_integrals(const std::filesystem::path& path) { return to_hamiltonian(read_fcidump(path)); }

inline void write_integrals(const Hamiltonian& H, const std::filesystem::path& path) {
  write_fcidump(path, to_integral_file(H));
}

}  // namespace dfshift
