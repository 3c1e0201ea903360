#pragma once

#include <stdexcept>
#include <string>

namespace snapcp {

/// Input or contract violation: bad files, inconsistent shapes, out-of-range
/// parameters. The CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace snapcp
