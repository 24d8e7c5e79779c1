#include "qsep/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace qsep {

namespace {

using nlohmann::json;

json parse_json(const std::string& text, const std::string& what) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) {
    throw InvalidInputError("failed to parse " + what + " as JSON");
  }
  return doc;
}

double require_number(const json& doc, const std::string& key) {
  if (!doc.contains(key) || !doc[key].is_number()) {
    throw InvalidInputError("missing numeric field \"" + key + "\"");
  }
  return doc[key].get<double>();
}

}  // namespace

std::string fmt12(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::string fmt12(Complex v) {
  std::string out = fmt12(v.real());
  const std::string im = fmt12(v.imag());
  if (!im.empty() && im[0] == '-') {
    out += im + "i";
  } else {
    out += "+" + im + "i";
  }
  return out;
}

void atomic_write(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path dir = target.parent_path();
  if (dir.empty()) dir = ".";
  const fs::path temp = dir / (target.filename().string() + ".tmp");
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw IoError("cannot open temporary file " + temp.string());
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      throw IoError("failed writing " + temp.string());
    }
  }
  std::error_code ec;
  fs::rename(temp, target, ec);
  if (ec) {
    fs::remove(temp, ec);
    throw IoError("failed to move output into place at " + path);
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open " + path);
  }
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

ManyBodyOperator load_hamiltonian_json(const std::string& path) {
  const json doc = parse_json(read_file(path), path);
  const int soi_dim = static_cast<int>(require_number(doc, "soi_dim"));
  const int bath_dim = static_cast<int>(require_number(doc, "bath_dim"));
  if (soi_dim < 1 || bath_dim < 1) {
    throw InvalidInputError("dimensions must be positive in " + path);
  }
  const int total = soi_dim * bath_dim;
  if (!doc.contains("matrix_re") || !doc["matrix_re"].is_array()) {
    throw InvalidInputError("missing \"matrix_re\" in " + path);
  }
  const json& re = doc["matrix_re"];
  const json im = doc.value("matrix_im", json::array());
  MatrixXcd h = MatrixXcd::Zero(total, total);
  if (static_cast<int>(re.size()) != total) {
    throw InvalidInputError("matrix_re has wrong row count in " + path);
  }
  for (int i = 0; i < total; ++i) {
    if (static_cast<int>(re[i].size()) != total) {
      throw InvalidInputError("matrix_re has wrong column count in " + path);
    }
    for (int j = 0; j < total; ++j) {
      double imag = 0.0;
      if (!im.empty()) {
        if (static_cast<int>(im.size()) != total ||
            static_cast<int>(im[i].size()) != total) {
          throw InvalidInputError("matrix_im shape mismatch in " + path);
        }
        imag = im[i][j].get<double>();
      }
      h(i, j) = Complex(re[i][j].get<double>(), imag);
    }
  }
  return ManyBodyOperator(BipartiteBasis{soi_dim, bath_dim}, h);
}

std::string hamiltonian_to_json(const ManyBodyOperator& op) {
  json doc;
  doc["soi_dim"] = op.basis.soi_dim;
  doc["bath_dim"] = op.basis.bath_dim;
  const int total = op.basis.total_dim();
  json re = json::array(), im = json::array();
  for (int i = 0; i < total; ++i) {
    json row_re = json::array(), row_im = json::array();
    for (int j = 0; j < total; ++j) {
      row_re.push_back(op.matrix(i, j).real());
      row_im.push_back(op.matrix(i, j).imag());
    }
    re.push_back(std::move(row_re));
    im.push_back(std::move(row_im));
  }
  doc["matrix_re"] = std::move(re);
  doc["matrix_im"] = std::move(im);
  return doc.dump(2) + "\n";
}

TwoSiteParams load_two_site_json(const std::string& text_or_path,
                                 bool is_path) {
  const std::string text = is_path ? read_file(text_or_path) : text_or_path;
  const json doc = parse_json(text, is_path ? text_or_path : "config");
  TwoSiteParams p;
  p.omega0 = require_number(doc, "omega0");
  if (!doc.contains("omega_d") || !doc["omega_d"].is_array() ||
      doc["omega_d"].size() != 2) {
    throw InvalidInputError("\"omega_d\" must be a [re, im] pair");
  }
  p.omega_d = Complex(doc["omega_d"][0].get<double>(),
                      doc["omega_d"][1].get<double>());
  p.V00 = require_number(doc, "V00");
  p.V0x = require_number(doc, "V0x");
  p.Vxx = require_number(doc, "Vxx");
  p.J0x = require_number(doc, "J0x");
  return p;
}

BathState load_bath_state_json(const std::string& path, int bath_dim) {
  const json doc = parse_json(read_file(path), path);
  if (doc.contains("amplitudes_re")) {
    const json& re = doc["amplitudes_re"];
    const json im = doc.value("amplitudes_im", json::array());
    if (static_cast<int>(re.size()) != bath_dim) {
      throw InvalidInputError("bath state length mismatch in " + path);
    }
    VectorXcd amps(bath_dim);
    for (int j = 0; j < bath_dim; ++j) {
      const double imag = im.empty() ? 0.0 : im[j].get<double>();
      amps(j) = Complex(re[j].get<double>(), imag);
    }
    return BathState(amps);
  }
  if (doc.contains("axis")) {
    const json& axis = doc["axis"];
    if (!axis.is_array() || axis.size() != 3) {
      throw InvalidInputError("\"axis\" must be a 3-vector in " + path);
    }
    const double phi = require_number(doc, "phi");
    const int base_index = doc.value("base_index", 0);
    std::pair<int, int> pair{0, 1};
    if (doc.contains("pair")) {
      pair = {doc["pair"][0].get<int>(), doc["pair"][1].get<int>()};
    }
    const BathState base = BathState::basis_state(bath_dim, base_index);
    const BlochRotation rot(
        {axis[0].get<double>(), axis[1].get<double>(), axis[2].get<double>()},
        phi);
    return rotate_bath_state(base, rot, pair);
  }
  throw InvalidInputError(
      "bath state file must contain \"amplitudes_re\" or \"axis\": " + path);
}

BathState resolve_bath_spec(const std::string& spec, int bath_dim) {
  if (spec == "0up") {
    return BathState::basis_state(bath_dim, 0);
  }
  return load_bath_state_json(spec, bath_dim);
}

}  // namespace qsep
