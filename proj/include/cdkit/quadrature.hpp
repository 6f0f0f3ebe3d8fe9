#pragma once

#include <functional>

namespace cdkit {

// Adaptive 15-point Gauss-Legendre on [a, b]. Panels split until the halving
// estimate meets abs_tol (distributed per panel) or the machine-relative floor,
// whichever is looser; failure to converge by depth 48 raises NumericalError.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol = 1e-12);

} // namespace cdkit
