#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace corl {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x * std::numbers::sqrt2 / 2.0); }

inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

namespace detail {

template <int N>
double horner(const double (&c)[N], double r) {
  double acc = c[N - 1];
  for (int i = N - 2; i >= 0; --i) acc = acc * r + c[i];
  return acc;
}

// Wichura (1988), AS 241 PPND16. Coefficients in ascending powers.
inline double ppnd16(double p) {
  static constexpr double a[8] = {3.3871328727963666080e0,  1.3314166789178437745e2,
                                  1.9715909503065514427e3,  1.3731693765509461125e4,
                                  4.5921953931549871457e4,  6.7265770927008700853e4,
                                  3.3430575583588128105e4,  2.5090809287301226727e3};
  static constexpr double b[8] = {1.0,
                                  4.2313330701600911252e1,  6.8718700749205790830e2,
                                  5.3941960214247511077e3,  2.1213794301586595867e4,
                                  3.9307895800092710610e4,  2.8729085735721942674e4,
                                  5.2264952788528545610e3};
  static constexpr double c[8] = {1.42343711074968357734e0, 4.63033784615654529590e0,
                                  5.76949722146069140550e0, 3.64784832476320460504e0,
                                  1.27045825245236838258e0, 2.41780725177450611770e-1,
                                  2.27238449892691845833e-2, 7.74545014278341407640e-4};
  static constexpr double d[8] = {1.0,
                                  2.05319162663775882187e0,  1.67638483018380384940e0,
                                  6.89767334985100004550e-1, 1.48103976427480074590e-1,
                                  1.51986665636164571966e-2, 5.47593808499534494600e-4,
                                  1.05075007164441684324e-9};
  static constexpr double e[8] = {6.65790464350110377720e0,  5.46378491116411436990e0,
                                  1.78482653991729133580e0,  2.96560571828504891230e-1,
                                  2.65321895265761230930e-2, 1.24266094738807843860e-3,
                                  2.71155556874348757815e-5, 2.01033439929228813265e-7};
  static constexpr double f[8] = {1.0,
                                  5.99832206555887937690e-1, 1.36929880922735805310e-1,
                                  1.48753612908506148525e-2, 7.86869131145613259100e-4,
                                  1.84631831751005468180e-5, 1.42151175831644588870e-7,
                                  2.04426310338993978564e-15};

  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q * horner(a, r) / horner(b, r);
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double x;
  if (r <= 5.0) {
    r -= 1.6;
    x = horner(c, r) / horner(d, r);
  } else {
    r -= 5.0;
    x = horner(e, r) / horner(f, r);
  }
  return q < 0.0 ? -x : x;
}

}  // namespace detail

/// Standard normal quantile. AS 241 followed by one Newton step on erfc,
/// which brings |Phi(x) - p| down to rounding level across (0, 1).
inline double inv_normal_cdf(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw std::domain_error("inv_normal_cdf: probability must lie in (0, 1)");
  double x = detail::ppnd16(p);
  const double pdf = normal_pdf(x);
  if (pdf > 0.0) x -= (normal_cdf(x) - p) / pdf;
  return x;
}

}  // namespace corl
