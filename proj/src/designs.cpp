#include "stein/designs.hpp"

#include <stdexcept>

#include "stein/io.hpp"

namespace stein {

Mat design_covariance(const DesignSpec& spec, Index p) {
  if (spec.kind != DesignKind::equicorrelated) return Mat::Identity(p, p);
  if (!(spec.rho > -1.0 / static_cast<double>(std::max<Index>(p - 1, 1)) && spec.rho < 1.0))
    throw std::invalid_argument("design: rho outside the positive-definite range");
  Mat S = Mat::Constant(p, p, spec.rho);
  S.diagonal().setOnes();
  return S;
}

Mat make_design(const DesignSpec& spec, Index n, Index p, RngStream& stream) {
  if (n < 1 || p < 1) throw std::invalid_argument("make_design: n and p must be positive");
  switch (spec.kind) {
    case DesignKind::orthonormal: {
      if (n < p) throw std::invalid_argument("make_design: orthonormal design needs n >= p");
      const Mat G = gaussian_design(stream, n, p, Mat::Identity(p, p));
      Eigen::HouseholderQR<Mat> qr(G);
      const Mat Q = qr.householderQ() * Mat::Identity(n, p);
      return std::sqrt(static_cast<double>(n)) * Q;
    }
    case DesignKind::iid_gaussian:
      return gaussian_design(stream, n, p, Mat::Identity(p, p));
    case DesignKind::equicorrelated:
      return gaussian_design(stream, n, p, design_covariance(spec, p));
  }
  throw std::logic_error("make_design: unknown design");
}

Vec make_beta(const BetaSpec& spec, Index p, Index s0) {
  if (s0 < 0 || s0 > p) throw std::invalid_argument("make_beta: s0 must lie in [0, p]");
  switch (spec.kind) {
    case BetaKind::zeros:
      return Vec::Zero(p);
    case BetaKind::spiked: {
      Vec b = Vec::Zero(p);
      b.head(s0).setConstant(spec.amplitude);
      return b;
    }
    case BetaKind::custom: {
      const Mat M = load_matrix_csv(spec.path);
      if (M.size() != p || (M.cols() != 1 && M.rows() != 1))
        throw std::invalid_argument("make_beta: custom beta must be a vector of length p");
      return Eigen::Map<const Vec>(M.data(), p);
    }
  }
  throw std::logic_error("make_beta: unknown kind");
}

std::string to_string(DesignKind kind) {
  switch (kind) {
    case DesignKind::orthonormal: return "orthonormal";
    case DesignKind::iid_gaussian: return "iid_gaussian";
    case DesignKind::equicorrelated: return "equicorrelated";
  }
  return "?";
}

std::string to_string(BetaKind kind) {
  switch (kind) {
    case BetaKind::zeros: return "zeros";
    case BetaKind::spiked: return "spiked";
    case BetaKind::custom: return "custom";
  }
  return "?";
}

DesignKind parse_design_kind(const std::string& name) {
  if (name == "orthonormal") return DesignKind::orthonormal;
  if (name == "iid_gaussian") return DesignKind::iid_gaussian;
  if (name == "equicorrelated") return DesignKind::equicorrelated;
  throw std::invalid_argument("unknown design '" + name + "'");
}

BetaKind parse_beta_kind(const std::string& name) {
  if (name == "zeros") return BetaKind::zeros;
  if (name == "spiked") return BetaKind::spiked;
  if (name == "custom") return BetaKind::custom;
  throw std::invalid_argument("unknown beta_spec '" + name + "'");
}

}  // namespace stein
