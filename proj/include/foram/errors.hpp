#pragma once

#include <stdexcept>
#include <string>

namespace foram {

// Base class for all errors raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed run-length data (counts do not cover the grid, bad string, ...).
class MaskError : public Error {
public:
    using Error::Error;
};

// Geometric misuse: dimension mismatch, empty mask where one is required,
// inverted boxes, degenerate canvases.
class GeometryError : public Error {
public:
    using Error::Error;
};

// Manifest / prediction file problems: parse errors, schema violations,
// duplicate ids, out-of-bounds geometry. Messages carry the offending
// image/object identifiers.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Invalid configuration values (negative sigma, bad thresholds, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

// Filesystem and codec failures.
class IoError : public Error {
public:
    using Error::Error;
};

// Scene generation could not place the requested objects.
class PlacementError : public Error {
public:
    using Error::Error;
};

} // namespace foram
