#pragma once

#include <span>

#include "stein/fields.hpp"

namespace stein {

// Monte Carlo comparison of the two sides of an identity. z_score uses the
// standard error of the per-draw difference, since both sides share draws.
struct IdentityReport {
  double lhs_mean = 0.0;
  double rhs_mean = 0.0;
  double lhs_se = 0.0;
  double rhs_se = 0.0;
  Index reps = 0;
  double z_score = 0.0;
};

// One draw z ~ N(0, sigma^2 I): (lhs, rhs) terms of the identity below.
std::pair<double, double> sos_draw(const VectorField& f, double sigma, RngStream& rng);

// E[(z^T f - sigma^2 div f)^2] = E[sigma^2 ||f||^2 + sigma^4 trace((grad f)^2)],
// z ~ N(0, sigma^2 I_n). Draw i uses stream.substream(i).
IdentityReport verify_sos_identity(const VectorField& f, double sigma, Index reps, const RngStream& stream,
                                   unsigned threads = 0);

// E[(z^T f - sigma^2 div f)(z^T h - sigma^2 div h)] = E[sigma^2 f^T h + sigma^4 trace(grad f grad h)].
IdentityReport verify_sos_inner_product(const VectorField& f, const VectorField& h, double sigma, Index reps,
                                        const RngStream& stream, unsigned threads = 0);

// Var(z^T f - sigma^2 div f - g) = E[sigma^2 ||f - grad g||^2 + sigma^4 trace((grad f)^2)]
//                                  + Var(g) - sigma^2 E ||grad g||^2.
IdentityReport verify_variance_identity(const VectorField& f, const ScalarField& g, double sigma, Index reps,
                                        const RngStream& stream, unsigned threads = 0);

// Paired comparison used by all of the above: lhs_i vs rhs_i.
IdentityReport compare_paired(std::span<const double> lhs, std::span<const double> rhs);

}  // namespace stein
