#pragma once

namespace gpmkl {

/// log(1 / (1 + exp(-z))) without overflow.
double log_sigmoid(double z);
double sigmoid(double z);

/// Moments of the tilted density  N(f | mean, var) * sigmoid(y f)  with
/// y in {-1, +1}: log normalizer, mean and variance of the normalized density.
struct TiltedMoments {
  double log_z = 0.0;
  double mean = 0.0;
  double var = 0.0;
};

/// Adaptive Gauss-Kronrod integration in standardized coordinates around the
/// mode of the (log-concave) integrand.
TiltedMoments logistic_tilted_moments(double y, double mean, double var);

/// int sigmoid(f) N(f | mean, var) df
double averaged_sigmoid(double mean, double var);

}  // namespace gpmkl
