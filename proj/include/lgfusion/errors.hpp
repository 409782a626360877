#ifndef LGFUSION_ERRORS_HPP
#define LGFUSION_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace lgf {

/// Argument outside the domain of a map (e.g. log near the cut locus).
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

/// A closed-form expression hit a vanishing denominator.
class SingularityError : public std::runtime_error {
 public:
  explicit SingularityError(const std::string& what)
      : std::runtime_error(what) {}
};

/// An iterative solver stopped before meeting its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  explicit ConvergenceError(const std::string& what)
      : std::runtime_error(what) {}
};

}  // namespace lgf

#endif  // LGFUSION_ERRORS_HPP
