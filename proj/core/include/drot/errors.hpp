// Copyright 2026 The drot Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DROT_ERRORS_HPP_
#define DROT_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace drot {

// Stable error identifiers. The CLI maps these to machine-readable reason
// strings, so the names here are part of the external contract.
enum class Errc {
  negative_cost,
  marginal_not_simplex,
  empty_dimension,
  non_finite_entry,
  shape_mismatch,
  non_positive_rho,
  invalid_initial_plan,
  non_finite_iterate,
  zero_marginal,
  too_large,
  degenerate_cost,
  dimension_mismatch,
  fold_state_mismatch,
  bad_magic,
  version_unsupported,
  size_mismatch,
  ragged_csv,
  empty_image,
  k_too_large,
  io_error,
  bad_config,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::negative_cost: return "negative_cost";
    case Errc::marginal_not_simplex: return "marginal_not_simplex";
    case Errc::empty_dimension: return "empty_dimension";
    case Errc::non_finite_entry: return "non_finite_entry";
    case Errc::shape_mismatch: return "shape_mismatch";
    case Errc::non_positive_rho: return "non_positive_rho";
    case Errc::invalid_initial_plan: return "invalid_initial_plan";
    case Errc::non_finite_iterate: return "non_finite_iterate";
    case Errc::zero_marginal: return "zero_marginal";
    case Errc::too_large: return "too_large";
    case Errc::degenerate_cost: return "degenerate_cost";
    case Errc::dimension_mismatch: return "dimension_mismatch";
    case Errc::fold_state_mismatch: return "fold_state_mismatch";
    case Errc::bad_magic: return "bad_magic";
    case Errc::version_unsupported: return "version_unsupported";
    case Errc::size_mismatch: return "size_mismatch";
    case Errc::ragged_csv: return "ragged_csv";
    case Errc::empty_image: return "empty_image";
    case Errc::k_too_large: return "k_too_large";
    case Errc::io_error: return "io_error";
    case Errc::bad_config: return "bad_config";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) {
  throw Error(code, std::string(errc_name(code)) + ": " + what);
}

}  // namespace drot

#endif  // DROT_ERRORS_HPP_
