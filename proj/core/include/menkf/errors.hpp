#pragma once

#include <stdexcept>
#include <string>

namespace menkf {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid user-facing configuration (bad key, inconsistent grid sizes, CFL violation, ...).
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(what) {}
};

/// A caller violated an API contract (mismatched grids, too-short arrays, bad preconditions).
class ContractError : public Error {
public:
    explicit ContractError(const std::string& what) : Error(what) {}
};

/// Runtime numerical failure: solution blowup, positivity loss, singular systems.
class NumericsError : public Error {
public:
    explicit NumericsError(const std::string& what) : Error(what) {}
};

} // namespace menkf
