#pragma once

#include <string>

namespace qunravel {

/// One-dimensional potential with an analytic gradient.
///   free:        V = 0
///   harmonic:    V = k x^2 / 2
///   double_well: V = a (x^2 - b^2)^2
///   cosine:      V = v0 cos(q x)
struct PotentialSpec {
  enum class Kind { free, harmonic, double_well, cosine };

  Kind kind = Kind::free;
  double k = 0.0;
  double a = 0.0;
  double b = 0.0;
  double v0 = 0.0;
  double q = 1.0;

  static PotentialSpec free_particle() { return {}; }
  static PotentialSpec harmonic(double mass, double omega);
  static PotentialSpec double_well(double a, double b);
  static PotentialSpec cosine(double v0, double q);

  double value(double x) const;
  double gradient(double x) const;
  std::string name() const;

  static Kind parse_kind(const std::string& name);  // ValidationError on unknown names
};

}  // namespace qunravel
