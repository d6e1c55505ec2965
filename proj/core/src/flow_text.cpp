#include "apls/strategy.hpp"

#include <charconv>
#include <sstream>
#include <stdexcept>
#include <string>

// Line format:
//   flow v1 packet_size=<n> read_offset=<n> read_length=<n> starter=<node>
//   T <id> <src> <dst> <payload> <bytes> l=<list> p=<packet> s=<stage> deps=<a,b,...|->
//   C <id> <node> <output> <bytes> l=<list> p=<packet> s=<stage> in=<term;term;...> deps=<...>
//   O <packet> <payload> <step>
// where a term is L:<chunk>:<offset>:<coeff> or P:<payload>:<coeff>.
namespace apls::flow {

namespace {

[[noreturn]] void fail(std::size_t line, const std::string& what) {
    throw std::invalid_argument("flow text line " + std::to_string(line) + ": " + what);
}

template <typename T>
T number(std::string_view s, std::size_t line) {
    T value{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        fail(line, "bad number '" + std::string(s) + "'");
    }
    return value;
}

std::string_view keyed(std::string_view token, std::string_view key, std::size_t line) {
    if (token.size() <= key.size() || token.substr(0, key.size()) != key || token[key.size()] != '=') {
        fail(line, "expected " + std::string(key) + "=...");
    }
    return token.substr(key.size() + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = s.find(sep, start);
        out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) {
            break;
        }
        start = pos + 1;
    }
    return out;
}

std::vector<StepId> parse_deps(std::string_view v, std::size_t line) {
    std::vector<StepId> deps;
    if (v == "-") {
        return deps;
    }
    for (auto part : split(v, ',')) {
        deps.push_back(number<StepId>(part, line));
    }
    return deps;
}

void write_deps(std::ostringstream& os, const std::vector<StepId>& deps) {
    os << " deps=";
    if (deps.empty()) {
        os << '-';
    }
    for (std::size_t i = 0; i < deps.size(); ++i) {
        os << (i ? "," : "") << deps[i];
    }
}

} // namespace

std::string to_text(const DataFlowGraph& graph) {
    std::ostringstream os;
    os << "flow v1 packet_size=" << graph.packet_size << " read_offset=" << graph.read_offset
       << " read_length=" << graph.read_length << " starter=" << graph.starter << '\n';
    for (const auto& s : graph.steps) {
        if (s.is_transfer()) {
            const auto& t = s.transfer();
            os << "T " << s.id << ' ' << t.src << ' ' << t.dst << ' ' << t.payload << ' ' << t.bytes;
        } else {
            const auto& c = s.compute();
            os << "C " << s.id << ' ' << c.node << ' ' << c.output << ' ' << c.bytes;
        }
        os << " l=" << s.list << " p=" << s.packet << " s=" << s.stage;
        if (!s.is_transfer()) {
            os << " in=";
            const auto& inputs = s.compute().inputs;
            for (std::size_t i = 0; i < inputs.size(); ++i) {
                const auto& t = inputs[i];
                os << (i ? ";" : "");
                if (t.source == Term::Source::Local) {
                    os << "L:" << t.chunk << ':' << t.offset << ':' << unsigned{t.coeff};
                } else {
                    os << "P:" << t.payload << ':' << unsigned{t.coeff};
                }
            }
        }
        write_deps(os, s.deps);
        os << '\n';
    }
    for (const auto& o : graph.outputs) {
        os << "O " << o.packet << ' ' << o.payload << ' ' << o.step << '\n';
    }
    return os.str();
}

DataFlowGraph parse_flow_text(std::string_view text) {
    DataFlowGraph graph;
    std::istringstream in{std::string(text)};
    std::string raw;
    std::size_t line = 0;
    bool header = false;
    while (std::getline(in, raw)) {
        ++line;
        if (raw.empty() || raw[0] == '#') {
            continue;
        }
        std::istringstream ls(raw);
        std::vector<std::string> tok;
        for (std::string t; ls >> t;) {
            tok.push_back(t);
        }
        if (!header) {
            if (tok.size() != 6 || tok[0] != "flow" || tok[1] != "v1") {
                fail(line, "missing 'flow v1' header");
            }
            graph.packet_size = number<std::size_t>(keyed(tok[2], "packet_size", line), line);
            graph.read_offset = number<std::size_t>(keyed(tok[3], "read_offset", line), line);
            graph.read_length = number<std::size_t>(keyed(tok[4], "read_length", line), line);
            graph.starter = number<NodeId>(keyed(tok[5], "starter", line), line);
            header = true;
            continue;
        }
        if (tok[0] == "T" && tok.size() == 10) {
            Step s;
            s.id = number<StepId>(tok[1], line);
            TransferStep t;
            t.src = number<NodeId>(tok[2], line);
            t.dst = number<NodeId>(tok[3], line);
            t.payload = number<PayloadId>(tok[4], line);
            t.bytes = number<std::size_t>(tok[5], line);
            s.op = t;
            s.list = number<std::uint32_t>(keyed(tok[6], "l", line), line);
            s.packet = number<std::uint32_t>(keyed(tok[7], "p", line), line);
            s.stage = number<std::uint32_t>(keyed(tok[8], "s", line), line);
            s.deps = parse_deps(keyed(tok[9], "deps", line), line);
            graph.steps.push_back(std::move(s));
        } else if (tok[0] == "C" && tok.size() == 10) {
            Step s;
            s.id = number<StepId>(tok[1], line);
            ComputeStep c;
            c.node = number<NodeId>(tok[2], line);
            c.output = number<PayloadId>(tok[3], line);
            c.bytes = number<std::size_t>(tok[4], line);
            s.list = number<std::uint32_t>(keyed(tok[5], "l", line), line);
            s.packet = number<std::uint32_t>(keyed(tok[6], "p", line), line);
            s.stage = number<std::uint32_t>(keyed(tok[7], "s", line), line);
            for (auto term : split(keyed(tok[8], "in", line), ';')) {
                auto f = split(term, ':');
                Term t;
                if (f.size() == 4 && f[0] == "L") {
                    t.source = Term::Source::Local;
                    t.chunk = number<rs::ChunkIndex>(f[1], line);
                    t.offset = number<std::size_t>(f[2], line);
                    t.coeff = static_cast<gf::Element>(number<unsigned>(f[3], line));
                } else if (f.size() == 3 && f[0] == "P") {
                    t.source = Term::Source::Payload;
                    t.payload = number<PayloadId>(f[1], line);
                    t.coeff = static_cast<gf::Element>(number<unsigned>(f[2], line));
                } else {
                    fail(line, "bad term '" + std::string(term) + "'");
                }
                c.inputs.push_back(t);
            }
            s.op = std::move(c);
            s.deps = parse_deps(keyed(tok[9], "deps", line), line);
            graph.steps.push_back(std::move(s));
        } else if (tok[0] == "O" && tok.size() == 4) {
            graph.outputs.push_back({number<std::size_t>(tok[1], line), number<PayloadId>(tok[2], line),
                                     number<StepId>(tok[3], line)});
        } else {
            fail(line, "unrecognised record");
        }
    }
    if (!header) {
        fail(line, "empty flow text");
    }
    return graph;
}

} // namespace apls::flow
