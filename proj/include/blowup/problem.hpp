#pragma once

#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>

#include "blowup/poly.hpp"

namespace blowup {

/// Raised when F, the Lipschitz envelope, or an exponential of its integral
/// leaves the range of double precision.
class NumericOverflow : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Right-hand side F(t, u), written into out.
using RhsFunction =
    std::function<void(double t, std::span<const double> u, std::span<double> out)>;

/// Lipschitz envelope L(t, a, b) with a, b >= 0 magnitudes:
/// |F(t,v) - F(t,w)| <= L(t, |v|, |w|) |v - w|.
using LipschitzEnvelope = std::function<double(double t, double a, double b)>;

using ExactSolution = std::function<Vec(double t)>;

/// Initial value problem u' = F(t, u), u(0) = u0 in R^d.
///
/// The user-supplied functions must be pure and reentrant; the envelope
/// must be nondecreasing in a and b.
struct Problem {
    std::string name;
    int dim = 1;
    Vec u0;
    RhsFunction f;
    LipschitzEnvelope lip;
    std::optional<ExactSolution> exact;
    std::optional<double> t_blowup;

    /// F(t, u) with a finiteness check; throws NumericOverflow.
    void rhs(double t, std::span<const double> u, std::span<double> out) const;
};

/// u' = u^2, exact u0 / (1 - u0 t), blow-up at 1 / u0. Requires u0 > 0.
[[nodiscard]] Problem make_power_square(double u0);

/// u' = e^u, exact log(e^u0 / (1 - e^u0 t)), blow-up at e^-u0.
[[nodiscard]] Problem make_exponential(double u0);

/// u' = lambda u with the constant envelope |lambda|; no blow-up.
[[nodiscard]] Problem make_linear(double lambda, Vec u0);

/// Quadrature approximation of the integral over iv of lip(s, a(s), b(s)).
/// Throws NumericOverflow when an integrand value or the sum is not finite.
[[nodiscard]] double lip_integral(const Problem& p, const Interval& iv,
                                  const std::function<double(double)>& a_fn,
                                  const std::function<double(double)>& b_fn,
                                  const QuadRule& quad);

}  // namespace blowup
