#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include "tasteprint/diagnostics.hpp"

namespace tasteprint {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text or bytes. `offset` is a byte offset or a 1-based line
/// number, depending on `unit`.
class ParseError : public Error {
public:
    enum class Unit { Byte, Line };
    ParseError(const std::string& what, std::size_t offset, Unit unit)
        : Error(what + (unit == Unit::Byte ? " (byte " : " (line ") + std::to_string(offset) + ")"),
          offset_(offset), unit_(unit) {}
    std::size_t offset() const { return offset_; }
    Unit unit() const { return unit_; }

private:
    std::size_t offset_;
    Unit unit_;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Structurally malformed document (JSON, CSV, PNM) without a precise offset.
class FormatError : public Error {
public:
    using Error::Error;
};

class EmptyMeshError : public Error {
public:
    using Error::Error;
};

class OpenContourError : public Error {
public:
    OpenContourError(const std::string& what, std::size_t layer) : Error(what), layer_(layer) {}
    std::size_t layer() const { return layer_; }

private:
    std::size_t layer_;
};

/// Argument outside the mathematical domain of a model (e.g. non-positive duration).
class DomainError : public Error {
public:
    using Error::Error;
};

class InvalidCalibrationError : public Error {
public:
    using Error::Error;
};

class DegenerateDesignError : public Error {
public:
    using Error::Error;
};

class SingularSystemError : public Error {
public:
    using Error::Error;
};

class EmptySpotError : public Error {
public:
    using Error::Error;
};

class PlacementError : public Error {
public:
    PlacementError(const std::string& what, std::size_t layer) : Error(what), layer_(layer) {}
    std::size_t layer() const { return layer_; }

private:
    std::size_t layer_;
};

class InvalidFootprintError : public Error {
public:
    using Error::Error;
};

class CapacityError : public Error {
public:
    CapacityError(const std::string& what, double achievable_mg) : Error(what), achievable_(achievable_mg) {}
    double achievable_mass() const { return achievable_; }

private:
    double achievable_;
};

class OutOfRangeError : public Error {
public:
    using Error::Error;
};

class OrphanSprayError : public Error {
public:
    OrphanSprayError(const std::string& what, std::size_t line) : Error(what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class SynchronizationError : public Error {
public:
    using Error::Error;
};

class BoundsError : public Error {
public:
    using Error::Error;
};

/// Design does not match the loaded mesh or fails planner validation.
class ValidationError : public Error {
public:
    using Error::Error;
    ValidationError(const std::string& what, Diagnostics diagnostics)
        : Error(what), diagnostics_(std::move(diagnostics)) {}
    const Diagnostics& diagnostics() const { return diagnostics_; }

private:
    Diagnostics diagnostics_;
};

/// Stale write against a versioned document.
class VersionConflictError : public Error {
public:
    VersionConflictError(const std::string& what, long current) : Error(what), current_(current) {}
    long current_version() const { return current_; }

private:
    long current_;
};

}  // namespace tasteprint
