#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>

#include "json.hpp"
#include "qsep/io.hpp"
#include "test_support.hpp"

using namespace qsep;
using namespace qsep::testsupport;

namespace {

void write_text(const std::string& path, const std::string& content) {
  atomic_write(path, content);
}

struct TempFile {
  std::string path;
  explicit TempFile(std::string p) : path(std::move(p)) {}
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("floating-point formatting keeps 12 significant digits") {
  CHECK(fmt12(1.0) == "1");
  CHECK(fmt12(0.5) == "0.5");
  CHECK(fmt12(-2.0) == "-2");
  CHECK(fmt12(1234.56789012345) == "1234.56789012");
  CHECK(fmt12(0.123456789012345) == "0.123456789012");
  CHECK(fmt12(-3.5e-7) == "-3.5e-07");
  CHECK(fmt12(0.0) == "0");
}

TEST_CASE("complex formatting writes a signed imaginary tail") {
  CHECK(fmt12(Complex(1.5, 2.25)) == "1.5+2.25i");
  CHECK(fmt12(Complex(1.5, -2.25)) == "1.5-2.25i");
  CHECK(fmt12(Complex(0.0, 1.0)) == "0+1i");
  CHECK(fmt12(Complex(-0.25, 0.0)) == "-0.25+0i");
}

TEST_CASE("atomic writes land complete and leave no temporary behind") {
  TempFile file("/tmp/qsep_io_roundtrip.txt");
  const std::string content = "line one\nline two\n# tail";
  atomic_write(file.path, content);
  CHECK(read_file(file.path) == content);
  CHECK_FALSE(std::filesystem::exists(file.path + ".tmp"));

  // Overwrite keeps the latest content.
  atomic_write(file.path, "second");
  CHECK(read_file(file.path) == "second");

  CHECK_THROWS_AS(
      atomic_write("/nonexistent_qsep_dir/out.txt", "payload"), IoError);
  CHECK_THROWS_AS(read_file("/tmp/qsep_io_missing_file.txt"), IoError);
}

TEST_CASE("hamiltonian files round-trip through JSON") {
  const ManyBodyOperator op = build_two_site(demo_params());
  TempFile file("/tmp/qsep_io_hamiltonian.json");
  const std::string text = hamiltonian_to_json(op);
  CHECK(text.back() == '\n');
  write_text(file.path, text);
  const ManyBodyOperator loaded = load_hamiltonian_json(file.path);
  CHECK(loaded.basis.soi_dim == op.basis.soi_dim);
  CHECK(loaded.basis.bath_dim == op.basis.bath_dim);
  CHECK((loaded.matrix - op.matrix).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("hamiltonian loader rejects malformed files") {
  TempFile file("/tmp/qsep_io_bad_hamiltonian.json");

  write_text(file.path, "not json at all");
  CHECK_THROWS_AS(load_hamiltonian_json(file.path), InvalidInputError);

  write_text(file.path, R"({"soi_dim": 1, "bath_dim": 2})");
  CHECK_THROWS_AS(load_hamiltonian_json(file.path), InvalidInputError);

  write_text(file.path, R"({"soi_dim": 0, "bath_dim": 2,
                            "matrix_re": []})");
  CHECK_THROWS_AS(load_hamiltonian_json(file.path), InvalidInputError);

  // Wrong row count.
  write_text(file.path, R"({"soi_dim": 1, "bath_dim": 2,
                            "matrix_re": [[0, 1]]})");
  CHECK_THROWS_AS(load_hamiltonian_json(file.path), InvalidInputError);

  // Imaginary block with mismatched shape.
  write_text(file.path, R"({"soi_dim": 1, "bath_dim": 2,
                            "matrix_re": [[0, 1], [1, 0]],
                            "matrix_im": [[0, 0]]})");
  CHECK_THROWS_AS(load_hamiltonian_json(file.path), InvalidInputError);

  // Non-Hermitian content.
  write_text(file.path, R"({"soi_dim": 1, "bath_dim": 2,
                            "matrix_re": [[0, 1], [2, 0]]})");
  CHECK_THROWS_AS(load_hamiltonian_json(file.path), InvalidInputError);
}

TEST_CASE("two-site configs parse from text and from disk") {
  const std::string text = R"({
    "omega0": 6.0, "omega_d": [2.0, 2.0],
    "V00": 1.5, "V0x": 1.0, "Vxx": 0.5, "J0x": 1.0
  })";
  const TwoSiteParams from_text = load_two_site_json(text, false);
  const TwoSiteParams expected = demo_params();
  CHECK(from_text.omega0 == expected.omega0);
  CHECK(from_text.omega_d == expected.omega_d);
  CHECK(from_text.V00 == expected.V00);
  CHECK(from_text.V0x == expected.V0x);
  CHECK(from_text.Vxx == expected.Vxx);
  CHECK(from_text.J0x == expected.J0x);

  TempFile file("/tmp/qsep_io_two_site.json");
  write_text(file.path, text);
  const TwoSiteParams from_disk = load_two_site_json(file.path);
  CHECK(from_disk.omega0 == expected.omega0);
  CHECK(from_disk.omega_d == expected.omega_d);

  CHECK_THROWS_AS(
      load_two_site_json(R"({"omega0": 1, "omega_d": [0, 0],
                             "V00": 0, "V0x": 0, "J0x": 0})",
                         false),
      InvalidInputError);  // Vxx missing
  CHECK_THROWS_AS(
      load_two_site_json(R"({"omega0": 1, "omega_d": 2,
                             "V00": 0, "V0x": 0, "Vxx": 0, "J0x": 0})",
                         false),
      InvalidInputError);  // omega_d must be a pair
  CHECK_THROWS_AS(load_two_site_json("{", false), InvalidInputError);
}

TEST_CASE("bath states load from explicit amplitudes") {
  TempFile file("/tmp/qsep_io_bath_amp.json");
  write_text(file.path, R"({"amplitudes_re": [0.6, 0.8]})");
  BathState real_state = load_bath_state_json(file.path, 2);
  CHECK(std::abs(real_state.amplitudes(0) - Complex(0.6, 0.0)) <= 1e-15);
  CHECK(std::abs(real_state.amplitudes(1) - Complex(0.8, 0.0)) <= 1e-15);

  write_text(file.path,
             R"({"amplitudes_re": [0.6, 0.0], "amplitudes_im": [0.0, 0.8]})");
  BathState complex_state = load_bath_state_json(file.path, 2);
  CHECK(std::abs(complex_state.amplitudes(1) - Complex(0.0, 0.8)) <= 1e-15);

  write_text(file.path, R"({"amplitudes_re": [1.0, 1.0]})");
  CHECK_THROWS_AS(load_bath_state_json(file.path, 2), InvalidInputError);

  write_text(file.path, R"({"amplitudes_re": [1.0, 0.0, 0.0]})");
  CHECK_THROWS_AS(load_bath_state_json(file.path, 2), InvalidInputError);
}

TEST_CASE("bath states load from an axis-angle rotation recipe") {
  TempFile file("/tmp/qsep_io_bath_axis.json");
  write_text(file.path, R"({"axis": [0.0, 0.0, 1.0], "phi": 1.1})");
  BathState spun = load_bath_state_json(file.path, 2);
  const BathState oracle = rotate_bath_state(
      BathState::basis_state(2, 0), BlochRotation({0.0, 0.0, 1.0}, 1.1));
  CHECK((spun.amplitudes - oracle.amplitudes).norm() <= 1e-15);

  // Explicit base index and pair on a three-level bath.
  write_text(file.path, R"({"axis": [1.0, 0.0, 0.0], "phi": 2.2,
                            "base_index": 0, "pair": [0, 2]})");
  BathState three = load_bath_state_json(file.path, 3);
  const BathState oracle3 =
      rotate_bath_state(BathState::basis_state(3, 0),
                        BlochRotation({1.0, 0.0, 0.0}, 2.2), {0, 2});
  CHECK((three.amplitudes - oracle3.amplitudes).norm() <= 1e-15);

  write_text(file.path, R"({"axis": [0.0, 1.0], "phi": 1.0})");
  CHECK_THROWS_AS(load_bath_state_json(file.path, 2), InvalidInputError);

  write_text(file.path, R"({"axis": [0.0, 0.0, 1.0]})");
  CHECK_THROWS_AS(load_bath_state_json(file.path, 2), InvalidInputError);

  write_text(file.path, R"({"phi": 0.2})");
  CHECK_THROWS_AS(load_bath_state_json(file.path, 2), InvalidInputError);
}

TEST_CASE("bath specs resolve shorthand and file paths") {
  const BathState canonical = resolve_bath_spec("0up", 2);
  CHECK(std::abs(canonical.amplitudes(0) - Complex(1.0, 0.0)) <= 1e-15);
  CHECK(std::abs(canonical.amplitudes(1)) <= 1e-15);
  const BathState wide = resolve_bath_spec("0up", 4);
  CHECK(wide.dim() == 4);

  TempFile file("/tmp/qsep_io_bath_spec.json");
  write_text(file.path, R"({"amplitudes_re": [0.0, 1.0]})");
  const BathState from_file = resolve_bath_spec(file.path, 2);
  CHECK(std::abs(from_file.amplitudes(1) - Complex(1.0, 0.0)) <= 1e-15);

  CHECK_THROWS_AS(resolve_bath_spec("/tmp/qsep_io_no_such.json", 2), IoError);
}
