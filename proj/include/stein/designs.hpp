#pragma once

#include <string>

#include "stein/core.hpp"

namespace stein {

enum class DesignKind { orthonormal, iid_gaussian, equicorrelated };

struct DesignSpec {
  DesignKind kind = DesignKind::iid_gaussian;
  double rho = 0.0;  // equicorrelated only
};

// Population covariance of the rows (identity for the orthonormal design).
Mat design_covariance(const DesignSpec& spec, Index p);

// orthonormal: X^T X = n I (needs n >= p), a random rotation scaled by sqrt(n).
// iid_gaussian: rows N(0, I). equicorrelated: rows N(0, (1 - rho) I + rho 1 1^T).
Mat make_design(const DesignSpec& spec, Index n, Index p, RngStream& stream);

enum class BetaKind { zeros, spiked, custom };

struct BetaSpec {
  BetaKind kind = BetaKind::spiked;
  double amplitude = 1.0;  // spiked: first s0 coordinates
  std::string path;        // custom: one value per line
};

Vec make_beta(const BetaSpec& spec, Index p, Index s0);

std::string to_string(DesignKind kind);
std::string to_string(BetaKind kind);
DesignKind parse_design_kind(const std::string& name);
BetaKind parse_beta_kind(const std::string& name);

}  // namespace stein
