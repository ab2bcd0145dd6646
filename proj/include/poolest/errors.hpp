#pragma once

#include <stdexcept>
#include <string>

namespace poolest {

// Problems with user-supplied inputs: schema files, observation files,
// matrix files, config documents, event literals.  The CLI maps these to
// exit code 2.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// An estimate (or a decision that needs one) had zero supporting
// observations under the effective condition.  CLI exit code 3.
class StarvedError : public std::runtime_error {
public:
    explicit StarvedError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace poolest
