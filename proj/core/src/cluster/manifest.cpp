#include "apls/cluster/manifest.hpp"

#include "apls/units.hpp"

#include <fmt/format.h>

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace apls::cluster {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
        s.remove_prefix(1);
    }
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
        s.remove_suffix(1);
    }
    return s;
}

template <typename T>
T integer(std::string_view s, std::string_view key) {
    T v{};
    s = trim(s);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw std::invalid_argument("manifest: bad integer for " + std::string(key) + ": '" + std::string(s) + "'");
    }
    return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    while (true) {
        const auto pos = s.find(sep);
        out.push_back(trim(s.substr(0, pos)));
        if (pos == std::string_view::npos) {
            return out;
        }
        s.remove_prefix(pos + 1);
    }
}

std::string rate_text(double bw) { return std::isinf(bw) ? std::string("inf") : fmt::format("{}", bw); }

} // namespace

std::optional<NodeId> ClusterManifest::node_of(const Address& address) const {
    for (const auto& [id, h] : helpers) {
        if (h.address == address) {
            return id;
        }
    }
    return std::nullopt;
}

const HelperInfo& ClusterManifest::helper(NodeId id) const {
    auto it = helpers.find(id);
    if (it == helpers.end()) {
        throw std::invalid_argument("unknown helper " + std::to_string(id));
    }
    return it->second;
}

void ClusterManifest::validate() const {
    params.validate();
    if (coordinator.port == 0) {
        throw std::invalid_argument("manifest: coordinator address missing");
    }
    if (helpers.empty()) {
        throw std::invalid_argument("manifest: no helpers");
    }
    for (std::size_t s = 0; s < placement.size(); ++s) {
        const auto& row = placement[s];
        if (row.size() != params.width()) {
            throw std::invalid_argument("manifest: placement." + std::to_string(s) + " must list k+m helpers");
        }
        std::set<NodeId> distinct(row.begin(), row.end());
        if (distinct.size() != row.size()) {
            throw std::invalid_argument("manifest: placement." + std::to_string(s) + " reuses a helper");
        }
        for (auto h : row) {
            if (!helpers.contains(h)) {
                throw std::invalid_argument("manifest: placement." + std::to_string(s) + " names unknown helper " +
                                            std::to_string(h));
            }
        }
    }
    for (auto [s, c] : failed) {
        if (s >= placement.size() || c >= params.width()) {
            throw std::invalid_argument("manifest: failed entry " + std::to_string(s) + ":" + std::to_string(c) +
                                        " out of range");
        }
    }
}

ClusterManifest parse_manifest(std::string_view text) {
    ClusterManifest m;
    std::size_t stripes = 0;
    std::map<std::size_t, std::vector<NodeId>> placement;
    std::istringstream in{std::string(text)};
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const auto l = trim(raw);
        if (l.empty() || l.front() == '#') {
            continue;
        }
        const auto eq = l.find('=');
        if (eq == std::string_view::npos) {
            throw std::invalid_argument("manifest line " + std::to_string(line) + ": expected key = value");
        }
        const auto key = trim(l.substr(0, eq));
        const auto value = trim(l.substr(eq + 1));
        if (key == "coordinator") {
            m.coordinator = parse_address(value);
        } else if (key == "k") {
            m.params.k = integer<std::size_t>(value, key);
        } else if (key == "m") {
            m.params.m = integer<std::size_t>(value, key);
        } else if (key == "chunk_size") {
            m.params.chunk_size = units::parse_size(value);
        } else if (key == "packet_size") {
            m.params.packet_size = units::parse_size(value);
        } else if (key == "stripe_dir") {
            m.stripe_dir = std::string(value);
        } else if (key == "seed") {
            m.seed = integer<std::uint64_t>(value, key);
        } else if (key == "stripes") {
            stripes = integer<std::size_t>(value, key);
        } else if (key == "failed") {
            if (!value.empty()) {
                for (auto item : split(value, ',')) {
                    m.failed.insert(parse_chunk_id(item));
                }
            }
        } else if (key.starts_with("helper.")) {
            auto rest = key.substr(7);
            const auto dot = rest.find('.');
            const auto id = integer<NodeId>(rest.substr(0, dot), key);
            auto& h = m.helpers[id];
            if (dot == std::string_view::npos) {
                h.address = parse_address(value);
            } else if (rest.substr(dot + 1) == "up_bw") {
                h.up_bw = units::parse_rate(value);
            } else if (rest.substr(dot + 1) == "down_bw") {
                h.down_bw = units::parse_rate(value);
            } else {
                throw std::invalid_argument("manifest: unknown key " + std::string(key));
            }
        } else if (key.starts_with("placement.")) {
            const auto s = integer<std::size_t>(key.substr(10), key);
            auto& row = placement[s];
            for (auto item : split(value, ',')) {
                row.push_back(integer<NodeId>(item, key));
            }
        } else {
            throw std::invalid_argument("manifest: unknown key " + std::string(key));
        }
    }
    for (const auto& [id, h] : m.helpers) {
        if (h.address.port == 0) {
            throw std::invalid_argument("manifest: helper." + std::to_string(id) + " has no address");
        }
    }
    if (!placement.empty() && placement.rbegin()->first >= stripes) {
        throw std::invalid_argument("manifest: placement for stripe beyond 'stripes'");
    }
    m.placement.resize(stripes);
    for (auto& [s, row] : placement) {
        m.placement[s] = std::move(row);
    }
    return m;
}

std::string format_manifest(const ClusterManifest& m) {
    std::string out;
    out += fmt::format("coordinator = {}\n", m.coordinator.to_string());
    out += fmt::format("k = {}\nm = {}\n", m.params.k, m.params.m);
    out += fmt::format("chunk_size = {}\npacket_size = {}\n", m.params.chunk_size, m.params.packet_size);
    out += fmt::format("stripe_dir = {}\nseed = {}\n", m.stripe_dir.string(), m.seed);
    for (const auto& [id, h] : m.helpers) {
        out += fmt::format("helper.{} = {}\n", id, h.address.to_string());
        if (!std::isinf(h.up_bw)) {
            out += fmt::format("helper.{}.up_bw = {}\n", id, rate_text(h.up_bw));
        }
        if (!std::isinf(h.down_bw)) {
            out += fmt::format("helper.{}.down_bw = {}\n", id, rate_text(h.down_bw));
        }
    }
    out += fmt::format("stripes = {}\n", m.placement.size());
    for (std::size_t s = 0; s < m.placement.size(); ++s) {
        out += fmt::format("placement.{} = {}\n", s, fmt::join(m.placement[s], ","));
    }
    std::vector<std::string> failed;
    for (auto [s, c] : m.failed) {
        failed.push_back(fmt::format("{}:{}", s, c));
    }
    out += fmt::format("failed = {}\n", fmt::join(failed, ","));
    return out;
}

ClusterManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open manifest " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_manifest(ss.str());
}

void save_manifest(const ClusterManifest& manifest, const std::filesystem::path& path) {
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) {
            throw std::runtime_error("cannot write manifest " + path.string());
        }
        out << format_manifest(manifest);
    }
    std::filesystem::rename(tmp, path);
}

std::filesystem::path chunk_path(const ClusterManifest& manifest, NodeId helper, std::uint32_t stripe,
                                 std::uint32_t chunk) {
    return manifest.stripe_dir / fmt::format("helper{}", helper) / fmt::format("s{}_c{}.bin", stripe, chunk);
}

std::pair<std::uint32_t, std::uint32_t> parse_chunk_id(std::string_view text) {
    const auto parts = split(text, ':');
    if (parts.size() != 2) {
        throw std::invalid_argument("chunk id must be stripe:index, got '" + std::string(text) + "'");
    }
    return {integer<std::uint32_t>(parts[0], "stripe"), integer<std::uint32_t>(parts[1], "index")};
}

} // namespace apls::cluster
