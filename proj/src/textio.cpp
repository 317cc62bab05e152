#include "agsr/textio.hpp"

#include <charconv>
#include <system_error>

#include "agsr/errors.hpp"

namespace agsr {

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc{} || res.ptr != last)
        throw MalformedMatrix("not a number: '" + std::string(s) + "'");
    return v;
}

} // namespace agsr
