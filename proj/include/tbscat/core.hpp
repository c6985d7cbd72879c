#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace tbscat {

using cplx = std::complex<double>;

inline constexpr cplx I{0.0, 1.0};
inline constexpr double pi = 3.14159265358979323846;

inline constexpr const char* version = "0.3.0";

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on an argument was not met.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A perturbation or packet reaches into the boundary region of a lattice.
class SupportViolation : public Error {
public:
    using Error::Error;
};

/// The adaptive integrator could not advance (step underflow or non-finite state).
class IntegrationError : public Error {
public:
    using Error::Error;
};

/// A sampled signal does not resolve the frequencies it is asked about.
class Undersampled : public Error {
public:
    using Error::Error;
};

/// Fit input is below the numerical floor.
class InsufficientSignal : public Error {
public:
    using Error::Error;
};

}  // namespace tbscat
