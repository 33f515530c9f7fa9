#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace drowsy {

// Base for every error the library raises.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

class DegenerateFace : public Error
{
public:
    using Error::Error;
};

class DegenerateRoi : public Error
{
public:
    using Error::Error;
};

class InvalidObservation : public Error
{
public:
    using Error::Error;
};

class InvalidDimensions : public Error
{
public:
    using Error::Error;
};

class BehindCamera : public Error
{
public:
    using Error::Error;
};

class NotARotation : public Error
{
public:
    using Error::Error;
};

class BackendUnavailable : public Error
{
public:
    using Error::Error;
};

class ProtocolError : public Error
{
public:
    using Error::Error;
};

class EmptyMatrix : public Error
{
public:
    using Error::Error;
};

class InsufficientData : public Error
{
public:
    using Error::Error;
};

class NonMonotonicFrame : public Error
{
public:
    using Error::Error;
};

class SinkError : public Error
{
public:
    using Error::Error;
};

class EmptyStream : public Error
{
public:
    using Error::Error;
};

// Configuration or scenario failed validation (CLI exit code 1).
class ConfigError : public Error
{
public:
    using Error::Error;
};

// A scripted pose would put the face model behind the camera.
class ProjectionError : public ConfigError
{
public:
    using ConfigError::ConfigError;
};

// Malformed input data; carries the 1-based line number (CLI exit code 2).
class ParseError : public Error
{
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line)
    {
    }

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

} // namespace drowsy
