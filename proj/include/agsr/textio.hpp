#ifndef AGSR_TEXTIO_HPP
#define AGSR_TEXTIO_HPP

#include <string>
#include <string_view>

namespace agsr {

/// Shortest decimal form that round-trips to the same double
/// (std::to_chars). Used everywhere a float is written to text so that
/// re-reading a file reproduces values bit-exactly.
std::string format_double(double v);

/// Strict full-string parse; throws MalformedMatrix on anything that is
/// not a single floating-point literal.
double parse_double(std::string_view s);

} // namespace agsr

#endif // AGSR_TEXTIO_HPP
