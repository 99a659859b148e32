#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ncnd {

/// Exact rational used for all costs, densities and ratio audits.
/// Comparisons never go through floating point. Expression templates are
/// disabled so values interact cleanly with std::min/max and containers.
using Rational = boost::multiprecision::number<
    boost::multiprecision::backends::rational_adaptor<
        boost::multiprecision::backends::cpp_int_backend<>>,
    boost::multiprecision::et_off>;
using BigInt = boost::multiprecision::cpp_int;

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

inline Rational rational_from_double(double x) {
    // Doubles are binary rationals, so this conversion is exact.
    return Rational(x);
}

/// Parses "a", "-a" or "a/b". Used by the instance file format.
Rational parse_rational(const std::string& text);

/// Serializes as "a" or "a/b" in lowest terms.
std::string format_rational(const Rational& r);

}  // namespace ncnd
