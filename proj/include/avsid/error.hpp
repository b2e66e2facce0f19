#pragma once

#include <stdexcept>
#include <string>

namespace avsid {

// Base class for everything this library throws on contract violations.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct InvalidGeometryError : Error {
    using Error::Error;
};

struct InsufficientArrayError : Error {
    using Error::Error;
};

struct InvalidSceneError : Error {
    using Error::Error;
};

struct ShapeError : Error {
    using Error::Error;
};

struct BoundsError : Error {
    using Error::Error;
};

struct InvalidTrainingError : Error {
    using Error::Error;
};

struct SingularScatterError : Error {
    using Error::Error;
};

struct DegenerateModelError : Error {
    using Error::Error;
};

struct InvalidGridError : Error {
    using Error::Error;
};

struct PreprocessingError : Error {
    using Error::Error;
};

struct NoModelError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

struct FormatError : Error {
    using Error::Error;
};

}  // namespace avsid
