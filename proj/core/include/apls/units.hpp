#pragma once

#include <cstdint>
#include <string_view>

// Size and rate units. KB/MB are binary (KiB/MiB), and so is the megabit:
// 1 Mbit/s = 2^20 bit/s. With both sides binary, a 64 MB chunk at
// 100 Mbit/s takes exactly 5.12 s.
namespace apls::units {

inline constexpr std::uint64_t KiB = 1024;
inline constexpr std::uint64_t MiB = 1024 * KiB;
inline constexpr double Kbit = 1024.0;
inline constexpr double Mbit = 1024.0 * 1024.0;
inline constexpr double Gbit = 1024.0 * Mbit;

/// "65536", "64K", "64KB", "64KiB", "8M", "8MB", "1G". Throws std::invalid_argument.
std::uint64_t parse_size(std::string_view text);

/// Bits per second: "100M", "100Mbit", "1.5G", "1e8", "inf". Throws std::invalid_argument.
double parse_rate(std::string_view text);

} // namespace apls::units
