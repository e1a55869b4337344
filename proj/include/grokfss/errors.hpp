#pragma once

#include <stdexcept>
#include <string>

namespace grokfss {

/// Input values violate an operation's preconditions (non-finite, empty, out of domain).
class InvalidInput : public std::invalid_argument {
public:
    explicit InvalidInput(const std::string& what) : std::invalid_argument(what) {}
};

/// Shapes that must agree do not (vector length vs. parameter count, field vs. graph size).
class StructuralError : public std::logic_error {
public:
    explicit StructuralError(const std::string& what) : std::logic_error(what) {}
};

/// A configuration that cannot be realized (graph too small for its topology, bad sweep value).
class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

/// On-disk run store is unreadable or inconsistent.
class StoreError : public std::runtime_error {
public:
    explicit StoreError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace grokfss
