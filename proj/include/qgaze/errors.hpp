// errors.hpp
// Exception taxonomy shared by all modules. Configuration/usage problems
// derive from std::invalid_argument, runtime data/numeric problems from
// std::runtime_error; the CLI maps the former to exit code 2 and the
// latter to exit code 1.

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qgaze {

// Invalid configuration, precondition violation, or bad usage.
class config_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Problems with input data discovered at runtime.
class data_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Degenerate inputs (constant series, zero variance, ...).
class degenerate_data_error : public data_error {
public:
    using data_error::data_error;
};

// Density query outside the support of the fitted model.
class out_of_support_error : public data_error {
public:
    using data_error::data_error;
};

// Non-finite values where finite arithmetic is required.
class numeric_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed file contents; carries file/line context in the message.
class parse_error : public data_error {
public:
    parse_error(const std::string& file, std::size_t line, const std::string& what)
        : data_error(file + ":" + std::to_string(line) + ": " + what) {}
    explicit parse_error(const std::string& what) : data_error(what) {}
};

// Object used after its one-shot lifecycle ended (e.g. a consumed tape).
class state_error : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

} // namespace qgaze
