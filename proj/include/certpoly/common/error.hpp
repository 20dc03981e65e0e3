#pragma once

#include <stdexcept>
#include <string>

namespace certpoly {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

// Thrown when a certification target cannot be met; carries the best bound reached.
class FitError : public Error {
 public:
  FitError(const std::string& what, double best_eps) : Error(what), best_eps_(best_eps) {}
  double best_eps() const { return best_eps_; }

 private:
  double best_eps_;
};

class DepthExhausted : public Error {
 public:
  using Error::Error;
};

class ParamsError : public Error {
 public:
  using Error::Error;
};

}  // namespace certpoly
