#include "dfshift/fcidump.hpp"
#include "dfshift/fermi_oracle.hpp"
#include "dfshift/hamiltonian.hpp"
#include "dfshift/synthetic.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

using namespace dfshift;

namespace {

IntegralFile parse(const std::string& text) {
  std::istringstream in(text);
  return read_fcidump(in);
}

Hamiltonian hamiltonian_from(const std::string& text) { return to_hamiltonian(parse(text)); }

FcidumpError::Kind parse_error_kind(const std::string& text, std::size_t* line = nullptr) {
  try {
    parse(text);
  } catch (const FcidumpError& e) {
    if (line) *line = e.line();
    return e.kind();
  }
  ADD_FAILURE() << "expected FcidumpError";
  return FcidumpError::Kind::Io;
}

constexpr const char* kHeader2 = "&FCI NORB=2,NELEC=2,MS2=0,\n ORBSYM=1,1,\n ISYM=1,\n&END\n";

}  // namespace

// ---------------------------------------------------------------------------
// FCIDUMP ingestion

TEST(Fcidump, SingleOneBodyEntry) {
  const Hamiltonian H = hamiltonian_from(std::string(kHeader2) + "1.5 1 1 0 0\n");
  EXPECT_EQ(H.n_orbitals(), 2u);
  EXPECT_EQ(H.n_electrons, 2u);
  EXPECT_EQ(H.h(0, 0), 1.5);
  EXPECT_EQ(H.h(1, 1), 0.0);
  EXPECT_EQ(H.g.squared_norm(), 0.0);
}

TEST(Fcidump, OneBodySymmetrized) {
  const Hamiltonian H = hamiltonian_from(std::string(kHeader2) + "0.7 1 2 0 0\n");
  EXPECT_EQ(H.h(0, 1), 0.7);
  EXPECT_EQ(H.h(1, 0), 0.7);
}

TEST(Fcidump, SlashTerminatorAndFortranExponent) {
  const IntegralFile f = parse("&FCI NORB=1, NELEC=1,\n/\n 2.5D-01 1 1 1 1\n -3.0 0 0 0 0\n");
  EXPECT_EQ(f.eri(0, 0, 0, 0), 0.25);
  EXPECT_EQ(f.core_constant, -3.0);
  EXPECT_EQ(f.ms2, 0);
}

TEST(Fcidump, ChemistToExcitationConvention) {
  // (11|11) = 0.8 at N=1: g = 0.4, h -= 0.4.
  const Hamiltonian H = hamiltonian_from("&FCI NORB=1,NELEC=2,\n&END\n0.8 1 1 1 1\n-1.0 1 1 0 0\n0.5 0 0 0 0\n");
  EXPECT_EQ(H.g(0, 0, 0, 0), 0.4);
  EXPECT_DOUBLE_EQ(H.h(0, 0), -1.4);
  EXPECT_EQ(H.core_constant, 0.5);
}

TEST(Fcidump, ConventionReproducesSecondQuantizedSpectrum) {
  // Build the normal-ordered Hamiltonian h a+a + 1/2 (pq|rs) a+_p a+_r a_s a_q
  // directly from ladder operators and compare every sector.
  synthetic::Rng rng(7);
  const std::size_t n = 2;
  IntegralFile f;
  f.n_orbitals = n;
  f.n_electrons = 2;
  f.one_body = OneBodyMatrix(synthetic::random_symmetric(n, rng));
  f.eri = synthetic::random_psd_two_body(n, 3, rng);
  f.core_constant = 0.25;
  const Hamiltonian H = to_hamiltonian(f);

  using namespace oracle;
  DenseOperator ref = cplx(f.core_constant) * identity(n);
  for (Spin s : {Spin::Alpha, Spin::Beta})
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = 0; q < n; ++q)
        ref = ref + cplx(f.one_body(p, q)) * (ladder_operator(p, s, true, n) * ladder_operator(q, s, false, n));
  for (Spin s : {Spin::Alpha, Spin::Beta})
    for (Spin t : {Spin::Alpha, Spin::Beta})
      for (std::size_t p = 0; p < n; ++p)
        for (std::size_t q = 0; q < n; ++q)
          for (std::size_t r = 0; r < n; ++r)
            for (std::size_t u = 0; u < n; ++u)
              ref = ref + cplx(0.5 * f.eri(p, q, r, u)) *
                              (ladder_operator(p, s, true, n) * ladder_operator(r, t, true, n) *
                               ladder_operator(u, t, false, n) * ladder_operator(q, s, false, n));
  const DenseOperator ours = build_hamiltonian_dense(H);
  for (std::size_t ne = 0; ne <= 2 * n; ++ne) {
    const auto a = sector_eigenvalues(ref, ne), b = sector_eigenvalues(ours, ne);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k], b[k], 1e-10) << "sector " << ne;
  }
}

TEST(Fcidump, ErrorsCarryKindAndLine) {
  std::size_t line = 0;
  EXPECT_EQ(parse_error_kind("NORB=2\n"), FcidumpError::Kind::MalformedHeader);
  EXPECT_EQ(parse_error_kind("&FCI NORB=2,\n&END\n"), FcidumpError::Kind::MalformedHeader);  // no NELEC
  EXPECT_EQ(parse_error_kind("&FCI NORB=x,NELEC=1\n&END\n"), FcidumpError::Kind::MalformedHeader);
  EXPECT_EQ(parse_error_kind("&FCI NORB=2,NELEC=1\n"), FcidumpError::Kind::MalformedHeader);  // unterminated
  EXPECT_EQ(parse_error_kind("&FCI NORB=1,NELEC=3\n&END\n"), FcidumpError::Kind::MalformedHeader);

  EXPECT_EQ(parse_error_kind(std::string(kHeader2) + "1.0 1 1\n", &line), FcidumpError::Kind::MalformedRecord);
  EXPECT_EQ(line, 5u);
  EXPECT_EQ(parse_error_kind(std::string(kHeader2) + "0.1 1 1 0 0\nnan 1 1 1 1\n", &line),
            FcidumpError::Kind::NonFiniteValue);
  EXPECT_EQ(line, 6u);
  EXPECT_EQ(parse_error_kind(std::string(kHeader2) + "inf 1 1 1 1\n"), FcidumpError::Kind::NonFiniteValue);
  EXPECT_EQ(parse_error_kind(std::string(kHeader2) + "1.0 3 1 0 0\n", &line), FcidumpError::Kind::IndexOutOfRange);
  EXPECT_EQ(line, 5u);
  EXPECT_EQ(parse_error_kind(std::string(kHeader2) + "1.0 1 -1 0 0\n"), FcidumpError::Kind::IndexOutOfRange);
  EXPECT_EQ(parse_error_kind(std::string(kHeader2) + "1.0 1 0 1 0\n"), FcidumpError::Kind::MalformedRecord);
}

TEST(Fcidump, DuplicateEntriesWithinToleranceAreAveraged) {
  const IntegralFile f = parse(std::string(kHeader2) + "0.5 1 2 0 0\n0.50000000000001 2 1 0 0\n");
  EXPECT_NEAR(f.one_body(0, 1), 0.500000000000005, 1e-16);
  EXPECT_EQ(f.one_body(0, 1), f.one_body(1, 0));
}

TEST(Fcidump, AsymmetricEntriesRejected) {
  std::size_t line = 0;
  EXPECT_EQ(parse_error_kind(std::string(kHeader2) + "0.5 1 2 0 0\n0.6 2 1 0 0\n", &line),
            FcidumpError::Kind::Asymmetric);
  EXPECT_EQ(line, 6u);
  EXPECT_EQ(parse_error_kind(std::string(kHeader2) + "0.3 1 2 1 1\n0.31 1 1 2 1\n"), FcidumpError::Kind::Asymmetric);
}

TEST(Fcidump, MissingFileIsIoError) {
  try {
    load_integrals("/nonexistent/path/FCIDUMP");
    FAIL();
  } catch (const FcidumpError& e) {
    EXPECT_EQ(e.kind(), FcidumpError::Kind::Io);
    EXPECT_NE(std::string(e.what()).find("/nonexistent/path/FCIDUMP"), std::string::npos);
  }
}

TEST(Fcidump, RawRoundTripIsBitExact) {
  synthetic::Rng rng(11);
  for (std::size_t n : {1u, 2u, 4u}) {
    IntegralFile f;
    f.n_orbitals = n;
    f.n_electrons = n;
    f.ms2 = 0;
    f.core_constant = 1.0 / 3.0;
    f.one_body = OneBodyMatrix(synthetic::random_symmetric(n, rng));
    f.eri = synthetic::random_psd_two_body(n, 2, rng);
    std::stringstream ss;
    write_fcidump(ss, f);
    const IntegralFile back = read_fcidump(ss);
    EXPECT_EQ(back.n_orbitals, n);
    EXPECT_EQ(back.core_constant, f.core_constant);
    EXPECT_TRUE(back.one_body == f.one_body);
    EXPECT_TRUE(back.eri == f.eri);
  }
}

TEST(Fcidump, HamiltonianRoundTripReproducesFileValues) {
  // Dyadic values make the convention correction exactly reversible.
  const std::string text = std::string(kHeader2) +
                           "0.625 1 1 1 1\n0.125 2 1 1 1\n0.25 2 1 2 1\n0.5 2 2 1 1\n0.75 2 2 2 2\n"
                           "-1.25 1 1 0 0\n0.375 2 1 0 0\n-0.5 2 2 0 0\n0.71875 0 0 0 0\n";
  const IntegralFile original = parse(text);
  const auto dir = std::filesystem::temp_directory_path() / "dfshift_rt";
  std::filesystem::create_directories(dir);
  write_integrals(to_hamiltonian(original), dir / "out.fcidump");
  const IntegralFile back = read_fcidump(dir / "out.fcidump");
  EXPECT_TRUE(back.one_body == original.one_body);
  EXPECT_TRUE(back.eri == original.eri);
  EXPECT_EQ(back.core_constant, original.core_constant);
  EXPECT_EQ(back.n_electrons, original.n_electrons);
}

TEST(Fcidump, HamiltonianRoundTripWithinRoundingForGeneralValues) {
  synthetic::Rng rng(12);
  const Hamiltonian H = synthetic::random_hamiltonian(3, 2, rng);
  std::stringstream ss;
  write_fcidump(ss, to_integral_file(H));
  const Hamiltonian back = to_hamiltonian(read_fcidump(ss));
  EXPECT_TRUE(back.g == H.g);
  EXPECT_LE((back.h.matrix() - H.h.matrix()).cwiseAbs().maxCoeff(), 1e-15);
}

// ---------------------------------------------------------------------------
// Symmetry shift

TEST(SymmetryShift, ZeroShiftIsIdentity) {
  synthetic::Rng rng(1);
  const Hamiltonian H = synthetic::random_hamiltonian(3, 2, rng);
  const Hamiltonian S = apply_symmetry_shift(H, ShiftParams::zero(3, 2));
  EXPECT_TRUE(S.h == H.h);
  EXPECT_TRUE(S.g == H.g);
  EXPECT_EQ(S.core_constant, H.core_constant);
}

TEST(SymmetryShift, KappaOnlyShiftsDiagonalAndConstant) {
  synthetic::Rng rng(2);
  const Hamiltonian H = synthetic::random_hamiltonian(3, 4, rng);
  const double c = 0.75;
  const Hamiltonian S = apply_symmetry_shift(H, {c, OneBodyMatrix(3), 4});
  EXPECT_TRUE(S.g == H.g);
  EXPECT_EQ(S.h.matrix(), (H.h.matrix() + c * Eigen::MatrixXd::Identity(3, 3)).eval());
  EXPECT_EQ(S.core_constant, H.core_constant - c * 4);
}

TEST(SymmetryShift, MatchesEntrywiseFormula) {
  synthetic::Rng rng(3);
  const Hamiltonian H = synthetic::random_hamiltonian(3, 3, rng);
  const ShiftParams s = synthetic::random_shift(3, 3, rng);
  const Hamiltonian S = apply_symmetry_shift(H, s);
  const auto ref = oracles::shift(H, s.kappa, s.xi.matrix(), s.n_e);
  EXPECT_LE((S.h.matrix() - ref.h).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LE(oracles::squared_distance(oracles::to_tensor(S.g), ref.g), 1e-28);
  EXPECT_EQ(S.core_constant, ref.c);
}

TEST(SymmetryShift, PreservesEightFoldSymmetryAndIsAffine) {
  synthetic::Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + trial % 3;
    const Hamiltonian H = synthetic::random_hamiltonian(n, n, rng);
    const ShiftParams s1 = synthetic::random_shift(n, n, rng);
    const ShiftParams s2 = synthetic::random_shift(n, n, rng);
    const Hamiltonian once = apply_symmetry_shift(H, s1);
    EXPECT_EQ(once.g.symmetry_violation(), 0.0);
    const Hamiltonian twice = apply_symmetry_shift(once, s2);
    const Hamiltonian combined =
        apply_symmetry_shift(H, {s1.kappa + s2.kappa, OneBodyMatrix(s1.xi.matrix() + s2.xi.matrix()), n});
    EXPECT_LE((twice.h.matrix() - combined.h.matrix()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((twice.g.supermatrix() - combined.g.supermatrix()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(twice.core_constant, combined.core_constant, 1e-12);
  }
}

TEST(SymmetryShift, SectorSpectrumInvariantN2) {
  synthetic::Rng rng(5);
  const Hamiltonian H = synthetic::random_hamiltonian(2, 2, rng);
  const ShiftParams s = synthetic::random_shift(2, 2, rng);
  const auto a = oracle::sector_eigenvalues(oracle::build_hamiltonian_dense(H), 2);
  const auto b = oracle::sector_eigenvalues(oracle::build_hamiltonian_dense(apply_symmetry_shift(H, s)), 2);
  ASSERT_EQ(a.size(), 6u);
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k], b[k], 1e-10);
}

TEST(SymmetryShift, DimensionMismatchThrows) {
  synthetic::Rng rng(6);
  const Hamiltonian H = synthetic::random_hamiltonian(3, 2, rng);
  EXPECT_THROW(apply_symmetry_shift(H, ShiftParams::zero(2, 2)), DimensionError);
}

TEST(SymmetryShift, ShiftedEffectiveOneBodyMatchesDefinition) {
  synthetic::Rng rng(8);
  for (int trial = 0; trial < 5; ++trial) {
    const Hamiltonian H = synthetic::random_hamiltonian(4, 3, rng);
    const ShiftParams s = synthetic::random_shift(4, 3, rng);
    const OneBodyMatrix hp = effective_one_body(apply_symmetry_shift(H, s));
    const auto ref = oracles::shift(H, s.kappa, s.xi.matrix(), s.n_e);
    EXPECT_LE((hp.matrix() - oracles::effective_one_body(ref.h, ref.g, 4)).cwiseAbs().maxCoeff(), 1e-13);
  }
}

// ---------------------------------------------------------------------------
// effective_one_body / reconstruct_two_body / frobenius_error

TEST(EffectiveOneBody, ZeroTwoBody) {
  synthetic::Rng rng(9);
  const Hamiltonian H(OneBodyMatrix(synthetic::random_symmetric(3, rng)), TwoBodyTensor(3), 0.0, 2);
  EXPECT_TRUE(effective_one_body(H) == H.h);
}

TEST(EffectiveOneBody, KroneckerDeltaTwoBody) {
  const std::size_t n = 3;
  synthetic::Rng rng(10);
  TwoBodyTensor g(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k) g.set(i, i, k, k, 1.0);
  const Hamiltonian H(OneBodyMatrix(synthetic::random_symmetric(n, rng)), g, 0.0, 2);
  const Eigen::MatrixXd expect = H.h.matrix() + 2.0 * n * Eigen::MatrixXd::Identity(n, n);
  EXPECT_LE((effective_one_body(H).matrix() - expect).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(EffectiveOneBody, MatchesTripleLoop) {
  synthetic::Rng rng(13);
  const Hamiltonian H = synthetic::random_hamiltonian(4, 4, rng);
  const Eigen::MatrixXd ref = oracles::effective_one_body(H.h.matrix(), oracles::to_tensor(H.g), 4);
  EXPECT_LE((effective_one_body(H).matrix() - ref).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Reconstruct, EmptyAndSingleFactor) {
  EXPECT_EQ(reconstruct_two_body(FactorSet(3)).squared_norm(), 0.0);
  synthetic::Rng rng(14);
  const OneBodyMatrix a(synthetic::random_symmetric(3, rng));
  const TwoBodyTensor g = reconstruct_two_body(FactorSet(3, {a}));
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      for (std::size_t k = 0; k < 3; ++k)
        for (std::size_t l = 0; l < 3; ++l) EXPECT_NEAR(g(i, j, k, l), a(i, j) * a(k, l), 1e-15);
}

TEST(Reconstruct, MatchesQuadrupleLoop) {
  synthetic::Rng rng(15);
  std::vector<OneBodyMatrix> fs;
  std::vector<Eigen::MatrixXd> raw;
  for (int r = 0; r < 3; ++r) {
    fs.emplace_back(synthetic::random_symmetric(4, rng));
    raw.push_back(fs.back().matrix());
  }
  const TwoBodyTensor g = reconstruct_two_body(FactorSet(4, fs));
  EXPECT_LE(oracles::squared_distance(oracles::to_tensor(g), oracles::reconstruct(4, raw)), 1e-26);
  EXPECT_EQ(g.symmetry_violation(), 0.0);
}

TEST(FrobeniusError, Examples) {
  synthetic::Rng rng(16);
  const FactorSet F(3, {OneBodyMatrix(synthetic::random_symmetric(3, rng)),
                        OneBodyMatrix(synthetic::random_symmetric(3, rng))});
  EXPECT_LE(frobenius_error(reconstruct_two_body(F), F), 1e-26);
  EXPECT_DOUBLE_EQ(frobenius_error(TwoBodyTensor(2), FactorSet(2, {OneBodyMatrix::identity(2)})), 4.0);
}

TEST(FrobeniusError, MatchesNaiveLoop) {
  synthetic::Rng rng(17);
  const TwoBodyTensor g = synthetic::random_psd_two_body(4, 5, rng);
  std::vector<OneBodyMatrix> fs;
  std::vector<Eigen::MatrixXd> raw;
  for (int r = 0; r < 3; ++r) {
    fs.emplace_back(synthetic::random_symmetric(4, rng));
    raw.push_back(fs.back().matrix());
  }
  const double ref = oracles::squared_distance(oracles::to_tensor(g), oracles::reconstruct(4, raw));
  EXPECT_NEAR(frobenius_error(g, FactorSet(4, fs)), ref, 1e-12 * ref);
  EXPECT_THROW(frobenius_error(g, FactorSet(3)), DimensionError);
}
