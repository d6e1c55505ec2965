#include "apls/units.hpp"
#include "apls/netsim.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace apls::units {

namespace {

std::pair<double, std::string_view> split_number(std::string_view text) {
    std::size_t i = 0;
    while (i < text.size() && (std::isdigit(static_cast<unsigned char>(text[i])) || text[i] == '.' ||
                               text[i] == 'e' || text[i] == 'E' || text[i] == '+' || text[i] == '-')) {
        // Stop at an 'E'/'e' that starts a unit rather than an exponent.
        if ((text[i] == 'e' || text[i] == 'E') &&
            (i + 1 >= text.size() || !(std::isdigit(static_cast<unsigned char>(text[i + 1])) ||
                                      text[i + 1] == '-' || text[i + 1] == '+'))) {
            break;
        }
        ++i;
    }
    double value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + i, value);
    if (i == 0 || ec != std::errc{} || ptr != text.data() + i) {
        throw std::invalid_argument("bad quantity '" + std::string(text) + "'");
    }
    return {value, text.substr(i)};
}

} // namespace

std::uint64_t parse_size(std::string_view text) {
    auto [value, unit] = split_number(text);
    double scale = 1;
    if (unit.empty() || unit == "B") {
        scale = 1;
    } else if (unit == "K" || unit == "KB" || unit == "KiB") {
        scale = static_cast<double>(KiB);
    } else if (unit == "M" || unit == "MB" || unit == "MiB") {
        scale = static_cast<double>(MiB);
    } else if (unit == "G" || unit == "GB" || unit == "GiB") {
        scale = static_cast<double>(1024 * MiB);
    } else {
        throw std::invalid_argument("unknown size unit in '" + std::string(text) + "'");
    }
    const double bytes = value * scale;
    if (bytes < 0 || bytes != std::floor(bytes)) {
        throw std::invalid_argument("size must be a whole number of bytes: '" + std::string(text) + "'");
    }
    return static_cast<std::uint64_t>(bytes);
}

double parse_rate(std::string_view text) {
    if (text == "inf" || text == "unlimited") {
        return sim::kUnlimited;
    }
    auto [value, unit] = split_number(text);
    double scale = 1;
    if (unit.empty() || unit == "bit" || unit == "bps") {
        scale = 1;
    } else if (unit == "K" || unit == "Kbit" || unit == "Kbps") {
        scale = Kbit;
    } else if (unit == "M" || unit == "Mbit" || unit == "Mbps") {
        scale = Mbit;
    } else if (unit == "G" || unit == "Gbit" || unit == "Gbps") {
        scale = Gbit;
    } else {
        throw std::invalid_argument("unknown rate unit in '" + std::string(text) + "'");
    }
    if (!(value > 0)) {
        throw std::invalid_argument("rate must be positive: '" + std::string(text) + "'");
    }
    return value * scale;
}

} // namespace apls::units
