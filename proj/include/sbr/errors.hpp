#ifndef SBR_ERRORS_HPP
#define SBR_ERRORS_HPP

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace sbr {

/// Invalid argument or state outside a model's domain.
class DomainError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Base for failures of the numerical machinery itself.
class NumericalError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A Laplace transform returned a non-finite value.
class EvaluationError : public NumericalError {
  public:
    EvaluationError(std::complex<double> s, const std::string &what)
        : NumericalError(what), m_s(s) {}
    std::complex<double> s() const { return m_s; }

  private:
    std::complex<double> m_s;
};

class SingularityError : public NumericalError {
  public:
    SingularityError(std::size_t row, const std::string &what)
        : NumericalError(what), m_row(row) {}
    std::size_t row() const { return m_row; }

  private:
    std::size_t m_row;
};

class ConvergenceError : public NumericalError {
  public:
    ConvergenceError(double residual, const std::string &what)
        : NumericalError(what), m_residual(residual) {}
    double residual() const { return m_residual; }

  private:
    double m_residual;
};

/// Malformed or invalid configuration file.
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

} // namespace sbr

#endif
