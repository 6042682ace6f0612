#pragma once

#include <stdexcept>
#include <string>

namespace clonecurve {

// Base class for all clonecurve errors. Specific failures derive from this
// so callers can catch narrowly or broadly as they prefer. The what() string
// always starts with a stable error code, e.g. "UnknownPreset(nosuch)".
class error : public std::runtime_error {
public:
    explicit error(const std::string& what) : std::runtime_error(what) {}
};

class parse_error : public error {
public:
    using error::error;
};

class io_error : public error {
public:
    using error::error;
};

} // namespace clonecurve
