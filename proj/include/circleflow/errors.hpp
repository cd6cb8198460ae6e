#pragma once

#include <stdexcept>
#include <string>

namespace circleflow {

// Bad input: violated precondition. The CLI maps this to exit code 2.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Computation could not meet its tolerance. The CLI maps this to exit code 3.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class RootCountError : public NumericalError {
public:
    RootCountError(int found, int expected)
        : NumericalError("root count deficit: found " + std::to_string(found) +
                         " of " + std::to_string(expected)),
          found_(found), expected_(expected) {}
    int found() const { return found_; }
    int expected() const { return expected_; }

private:
    int found_;
    int expected_;
};

}  // namespace circleflow
