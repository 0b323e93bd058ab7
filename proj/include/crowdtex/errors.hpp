#ifndef CROWDTEX_ERRORS_HPP
#define CROWDTEX_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace crowdtex {

// Bad or unreadable input data: files, manifests, schema mismatches.
// The CLI maps this to exit code 3.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numeric breakdown: non-finite values, failed factorizations.
// The CLI maps this to exit code 4.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace crowdtex

#endif
