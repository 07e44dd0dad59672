#include "gpmkl/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace gpmkl {

double log_sigmoid(double z) {
  return z >= 0.0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z));
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

namespace {

// Gauss-Kronrod 7/15 nodes and weights on [-1, 1].
constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

using Moments = std::array<double, 3>;

// Integrand of the tilted density in t = (f - mean) / sd, scaled by
// exp(-peak) and expressed about the mode t0.
struct Tilted {
  double y, mean, sd, t0, peak;

  double log_density(double t) const { return -0.5 * t * t + log_sigmoid(y * (mean + sd * t)); }

  Moments operator()(double t) const {
    const double w = std::exp(log_density(t) - peak);
    const double d = t - t0;
    return {w, w * d, w * d * d};
  }
};

struct Segment {
  Moments kronrod;
  double error;
};

Segment gauss_kronrod(const Tilted& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  Moments k{}, g{};
  const Moments fc = f(c);
  for (int m = 0; m < 3; ++m) {
    k[m] = kKronrodWeights[7] * fc[m];
    g[m] = kGaussWeights[3] * fc[m];
  }
  for (std::size_t i = 0; i < 7; ++i) {
    const Moments lo = f(c - h * kKronrodNodes[i]);
    const Moments hi = f(c + h * kKronrodNodes[i]);
    for (int m = 0; m < 3; ++m) {
      k[m] += kKronrodWeights[i] * (lo[m] + hi[m]);
      if (i % 2 == 1) g[m] += kGaussWeights[i / 2] * (lo[m] + hi[m]);
    }
  }
  for (auto& v : k) v *= h;
  for (auto& v : g) v *= h;
  double err = 0.0;
  for (int m = 0; m < 3; ++m) err = std::max(err, std::abs(k[m] - g[m]));
  return {k, err};
}

Moments integrate(const Tilted& f, double a, double b, double tol, int depth) {
  const Segment seg = gauss_kronrod(f, a, b);
  if (seg.error <= tol || depth >= 30) return seg.kronrod;
  const double c = 0.5 * (a + b);
  const Moments left = integrate(f, a, c, tol, depth + 1);
  const Moments right = integrate(f, c, b, tol, depth + 1);
  return {left[0] + right[0], left[1] + right[1], left[2] + right[2]};
}

// Root of d/dt log_density, which is strictly decreasing. It lies between 0
// and y * sd.
double find_mode(const Tilted& f) {
  const auto slope = [&](double t) { return -t + f.y * f.sd * sigmoid(-f.y * (f.mean + f.sd * t)); };
  double lo = std::min(0.0, f.y * f.sd), hi = std::max(0.0, f.y * f.sd);
  double t = 0.0;
  for (int it = 0; it < 200; ++it) {
    const double g = slope(t);
    if (g > 0.0) lo = t; else hi = t;
    const double p = sigmoid(f.y * (f.mean + f.sd * t));
    const double curvature = -1.0 - f.sd * f.sd * p * (1.0 - p);
    double next = t - g / curvature;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - t) <= 1e-14 * (1.0 + std::abs(t)) || hi - lo <= 1e-14 * (1.0 + std::abs(t))) return next;
    t = next;
  }
  return t;
}

}  // namespace

TiltedMoments logistic_tilted_moments(double y, double mean, double var) {
  if (!std::isfinite(mean) || !std::isfinite(var) || var < 0.0) {
    throw std::domain_error("tilted moments need a finite mean and non-negative variance");
  }
  if (var == 0.0) return {log_sigmoid(y * mean), mean, 0.0};

  Tilted f{y, mean, std::sqrt(var), 0.0, 0.0};
  f.t0 = find_mode(f);
  f.peak = f.log_density(f.t0);

  // log_density'' <= -1, so the integrand is below exp(-(t - t0)^2 / 2)
  // relative to its peak; +-14 leaves < 1e-42 outside.
  constexpr double kHalfWidth = 14.0;
  const double a = f.t0 - kHalfWidth, b = f.t0 + kHalfWidth;
  // Split at the mode and around the sigmoid's centre, whose transition is
  // only about 1/sd wide in t.
  const double centre = -mean / f.sd;
  const double band = 1.0 / f.sd;
  std::array<double, 8> cuts = {a, f.t0, b, centre};
  for (std::size_t i = 0; i < 4; ++i) {
    const double offset = (i < 2 ? 4.0 : 40.0) * band * (i % 2 == 0 ? -1.0 : 1.0);
    cuts[4 + i] = centre + offset;
  }
  for (auto& c : cuts) c = std::clamp(c, a, b);
  std::sort(cuts.begin(), cuts.end());
  // Per-segment tolerance relative to a coarse estimate of the mass.
  double coarse = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (cuts[i + 1] > cuts[i]) coarse += gauss_kronrod(f, cuts[i], cuts[i + 1]).kronrod[0];
  }
  const double tol = 1e-8 * std::max(coarse, 1e-300);
  Moments total{};
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (cuts[i + 1] <= cuts[i]) continue;
    const Moments part = integrate(f, cuts[i], cuts[i + 1], tol, 0);
    for (int m = 0; m < 3; ++m) total[m] += part[m];
  }

  const double m1 = total[1] / total[0];
  const double var_t = std::max(total[2] / total[0] - m1 * m1, 0.0);
  TiltedMoments out;
  out.log_z = f.peak + std::log(total[0]) - 0.5 * std::log(2.0 * std::numbers::pi);
  out.mean = mean + f.sd * (f.t0 + m1);
  out.var = var * var_t;
  return out;
}

double averaged_sigmoid(double mean, double var) {
  return std::exp(logistic_tilted_moments(1.0, mean, var).log_z);
}

}  // namespace gpmkl
