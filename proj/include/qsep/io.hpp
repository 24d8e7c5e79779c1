#pragma once

#include <string>
#include <vector>

#include "qsep/hilbert.hpp"
#include "qsep/projection.hpp"

namespace qsep {

// ---------------------------------------------------------------------------
// Formatting: all floating-point output uses 12 significant digits so that
// identical configurations produce byte-identical files.
// ---------------------------------------------------------------------------
std::string fmt12(double v);
std::string fmt12(Complex v);  // "re+imi" / "re-imi"

// Write content to path atomically (temp file in the same directory, then
// rename).  Throws IoError on failure.
void atomic_write(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

// ---------------------------------------------------------------------------
// JSON model files
// ---------------------------------------------------------------------------
// Hamiltonian: { "soi_dim": int, "bath_dim": int,
//                "matrix_re": [[...]], "matrix_im": [[...]] }
ManyBodyOperator load_hamiltonian_json(const std::string& path);
std::string hamiltonian_to_json(const ManyBodyOperator& op);

// Two-site config: { "omega0": f, "omega_d": [re, im],
//                    "V00": f, "V0x": f, "Vxx": f, "J0x": f }
TwoSiteParams load_two_site_json(const std::string& text_or_path,
                                 bool is_path = true);

// Bath state: { "amplitudes_re": [...], "amplitudes_im": [...] }
//          or { "axis": [x,y,z], "phi": f, "base_index": int, "pair": [i,j] }
BathState load_bath_state_json(const std::string& path, int bath_dim);

// Resolve a --bath CLI spec: the shorthand "0up" (canonical first bath basis
// state), or a path to a bath-state JSON file.
BathState resolve_bath_spec(const std::string& spec, int bath_dim);

}  // namespace qsep
