#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace fwdsmile {

enum class ErrorKind {
  invalid_parameter,   // parameter validation
  domain,              // argument outside a function's domain
  explosion,           // lmgf infinite at the requested argument
  unsupported,         // model / regime / case combination not covered
  martingale,          // phi(1) != 0 or Lambda0(1) != 0
  regularity,          // Lambda0'(0) != 0 for the small-maturity smile
  singular_strike,     // k inside a singular-strike guard band
  boundary_saturation, // Lambda0' does not reach k inside the domain
  boundary_clearance,  // FD stencil cannot fit inside the domain
  band,                // option price outside the no-arbitrage band
  convergence,         // root finder / quadrature did not converge
  config               // CLI configuration problem
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ExplosionError : public Error {
 public:
  ExplosionError(std::complex<double> z, const std::string& what)
      : Error(ErrorKind::explosion, what), z_(z) {}
  std::complex<double> z() const noexcept { return z_; }

 private:
  std::complex<double> z_;
};

// Quadrature or root finder stopped short; carries the best estimate.
class ToleranceError : public Error {
 public:
  ToleranceError(double estimate, const std::string& what)
      : Error(ErrorKind::convergence, what), estimate_(estimate) {}
  double estimate() const noexcept { return estimate_; }

 private:
  double estimate_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) {
  throw Error(kind, msg);
}

}  // namespace fwdsmile
