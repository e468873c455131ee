#pragma once

#include <stdexcept>
#include <string>

namespace popcache {

// Bad argument to an operation (out-of-range index, alpha < 0, ...).
class InvalidParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// No configuration satisfies the stated constraints (e.g. subpacketization cap).
class InfeasibleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A candidate violates one of the optimization constraints. Carries the id of
// the violated constraint ("budget", "level_upper:q", ...).
class ConstraintViolationError : public std::runtime_error {
public:
    ConstraintViolationError(std::string constraint, const std::string& what)
        : std::runtime_error(what), constraint_id(std::move(constraint)) {}
    std::string constraint_id;
};

// Segmentation with an empty coded sub-library or a non-increasing boundary.
class InvalidSegmentationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Brute-force reference asked to enumerate beyond its size guard.
class OracleScaleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Transmitter cache overflow during placement.
class CapacityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace popcache
