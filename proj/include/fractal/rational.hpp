#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <stdexcept>
#include <string>

namespace fractal {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

// Thrown when a configured resource guard (denominator bits, family size,
// recursion depth) would be exceeded. Guards fail loudly instead of
// degrading precision or truncating silently.
class guard_error : public std::runtime_error {
public:
    explicit guard_error(const std::string& what) : std::runtime_error(what) {}
};

inline unsigned bit_length(const BigInt& v) {
    if (v == 0) return 0;
    return static_cast<unsigned>(boost::multiprecision::msb(abs(v))) + 1;
}

inline void check_denominator_bits(const BigInt& denom, unsigned max_bits, const char* where) {
    if (bit_length(denom) > max_bits) {
        throw guard_error(std::string(where) + ": denominator bit-length " +
                          std::to_string(bit_length(denom)) + " exceeds guard of " +
                          std::to_string(max_bits) + " bits");
    }
}

inline double to_double(const Rational& r) { return r.convert_to<double>(); }
inline double to_double(const BigInt& v) { return v.convert_to<double>(); }

} // namespace fractal
