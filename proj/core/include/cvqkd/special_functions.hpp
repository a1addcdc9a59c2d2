#pragma once

// Special functions needed by the elliptic-beam transmittance model.
// Accuracy target: 1e-10 relative on x >= 0 (tested against extended-precision series).

namespace cvqkd::special {

/// exp(-x) I0(x), x >= 0. Power series up to x = 25, asymptotic expansion beyond.
double bessel_i0e(double x);
/// exp(-x) I1(x), x >= 0.
double bessel_i1e(double x);

/// 1 - exp(-x) I0(x), x >= 0, without cancellation for small x.
double one_minus_i0e(double x);

/// Principal branch W0(x), x >= -1/e.
double lambert_w0(double x);
/// W0(exp(t)) for any real t; avoids overflow when exp(t) is not representable.
double lambert_w0_exp(double t);

}  // namespace cvqkd::special
