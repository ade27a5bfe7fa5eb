#pragma once

#include <memory>
#include <vector>

#include "stein/fields.hpp"
#include "stein/sure.hpp"

namespace stein {

struct CandidateSet {
  std::vector<Fit> fits;
  Vec sure_values;
  double L = 1.0;
  double s_star = 0.0;
};

// Candidates on a shared y with their SURE values filled in.
CandidateSet make_candidates(std::vector<Fit> fits, const Vec& y, double sigma, double L = 1.0);

// 0-based argmin of the SURE values; ties go to the lowest index.
Index sure_tune(const Vec& sure_values);
inline Index sure_tune(const CandidateSet& candidates) { return sure_tune(candidates.sure_values); }

// Probability-(1 - alpha) bound on ||mu_tilde - mu|| - ||mu_hat^{j0} - mu||.
double oracle_gap_bound(Index m, double alpha, double L, double s_star, double sigma);
// Probability-(1 - delta) bound on ||mu_hat^{j0} - mu|| - min_j ||mu_hat^j - mu||.
double subgaussian_gap_bound(double L, double sigma, Index m, double delta);
// Squared-risk companion L sigma^2 (32 n m)^{1/2}.
double squared_risk_gap_bound(double L, double sigma, Index n, Index m);

// Symmetric triangle wave with slope +-1, g(0) = 0, peak 2^K sigma and
// period 2^{K+1} sigma.
class TriangleWave {
 public:
  TriangleWave(double sigma, int period_exponent);
  double operator()(double u) const;
  double slope(double u) const;
  double peak() const { return peak_; }
  double period() const { return 2.0 * peak_; }

 private:
  double peak_;
};

// y -> v + G(y) with G the componentwise triangle wave and ||v||^2 = sigma^2 sqrt(n).
class TriangleEstimator final : public VectorField {
 public:
  TriangleEstimator(Index n, double sigma, int period_exponent);
  std::string name() const override { return "triangle"; }
  Vec value(const Vec& y) const override;
  Mat jacobian(const Vec& y) const override;
  FieldValue evaluate(const Vec& y) const override;
  const Vec& offset() const { return v_; }
  const TriangleWave& wave() const { return wave_; }

 private:
  TriangleWave wave_;
  Vec v_;
};

struct AdversarialPair {
  std::shared_ptr<const VectorField> zero;      // y -> 0
  std::shared_ptr<const VectorField> triangle;  // y -> v + G(y)
};

inline int default_period_exponent(Index n) { return static_cast<int>(std::min<Index>(n, 20)); }

AdversarialPair adversarial_pair(Index n, double sigma, int period_exponent);

}  // namespace stein
