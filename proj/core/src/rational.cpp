#include "ncnd/rational.hpp"

namespace ncnd {

Rational parse_rational(const std::string& text) {
    if (text.empty()) throw std::invalid_argument("empty rational literal");
    auto slash = text.find('/');
    try {
        if (slash == std::string::npos) return Rational(BigInt(text));
        BigInt num(text.substr(0, slash));
        BigInt den(text.substr(slash + 1));
        if (den == 0) throw std::invalid_argument("zero denominator in '" + text + "'");
        return Rational(num, den);
    } catch (const std::runtime_error& e) {
        throw std::invalid_argument("bad rational literal '" + text + "': " + e.what());
    }
}

std::string format_rational(const Rational& r) {
    if (denominator(r) == 1) return numerator(r).str();
    return numerator(r).str() + "/" + denominator(r).str();
}

}  // namespace ncnd
