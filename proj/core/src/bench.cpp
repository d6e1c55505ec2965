#include "apls/bench.hpp"

#include "apls/cluster/local_cluster.hpp"
#include "apls/netsim.hpp"
#include "apls/strategy.hpp"
#include "apls/units.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

namespace apls::bench {

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

std::vector<std::string> items(std::string_view value) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : value) {
        if (ch == ',' || std::isspace(static_cast<unsigned char>(ch))) {
            if (!cur.empty()) {
                out.push_back(std::move(cur));
                cur.clear();
            }
        } else {
            cur.push_back(ch);
        }
    }
    if (!cur.empty()) {
        out.push_back(std::move(cur));
    }
    return out;
}

template <typename T>
T integer(std::string_view s, std::string_view what) {
    T v{};
    s = trim(s);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw std::invalid_argument("bad " + std::string(what) + " '" + std::string(s) + "'");
    }
    return v;
}

double real(std::string_view s, std::string_view what) {
    s = trim(s);
    if (s == "inf") {
        return std::numeric_limits<double>::infinity();
    }
    double v{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw std::invalid_argument("bad " + std::string(what) + " '" + std::string(s) + "'");
    }
    return v;
}

std::string rate_text(double bw) { return std::isinf(bw) ? std::string("inf") : fmt::format("{:.0f}", bw); }

std::string_view backend_name(Backend b) { return b == Backend::Simulator ? "simulator" : "cluster"; }

// Every configuration input that must agree for two rows to be comparable.
using ConfigKey = std::tuple<std::string, std::size_t, std::size_t, std::size_t, std::size_t, double, double, double>;

ConfigKey config_of(const Row& r) {
    return {r.backend, r.k, r.m, r.chunk_bytes, r.packet_bytes, r.helper_bw, r.starter_bw, r.hop_latency};
}

struct Stats {
    double mean = 0;
    double min = 0;
    double max = 0;
};

Stats stats_of(const std::vector<double>& v) {
    Stats s;
    s.min = *std::min_element(v.begin(), v.end());
    s.max = *std::max_element(v.begin(), v.end());
    double sum = 0;
    for (double x : v) {
        sum += x;
    }
    s.mean = sum / static_cast<double>(v.size());
    return s;
}

constexpr plan::NodeId kSimStarter = 100000;

// Simulator backend: survivors 1..k+m-1 hold chunks 1..k+m-1, chunk 0 is lost,
// and an external node receives.
class Simulator {
public:
    Simulator(const ExperimentSpec& spec) : spec_(spec) {}

    double normal(const Code& code, std::size_t chunk, std::size_t packet, double helper_bw) const {
        const auto graph = flow::build_normal_read_flow(0, 0, kSimStarter, packet, 0, chunk);
        return sim::simulate(graph, profiles(code, helper_bw), {spec_.hop_latency}).latency;
    }

    double degraded(const Code& code, std::size_t chunk, std::size_t packet, double helper_bw, plan::Strategy strategy,
                    std::size_t q) const {
        const rs::CodeParams params{code.k, code.m, chunk, packet};
        const auto generator = gf::build_generator_matrix(code.k, code.m);
        std::vector<plan::Agent> survivors;
        for (std::size_t c = 1; c < params.width(); ++c) {
            survivors.push_back({static_cast<plan::NodeId>(c), c});
        }
        plan::LoadTable load;
        std::mt19937_64 rng(spec_.seed);
        plan::PlanOptions opts;
        opts.starter = kSimStarter;
        opts.source_limit = q;
        const auto p = plan::build_plan(params, generator, 0, survivors, strategy, load, 0.0, rng, opts);
        const auto graph = flow::build_flow(p);
        return sim::simulate(graph, profiles(code, helper_bw), {spec_.hop_latency}).latency;
    }

private:
    std::map<plan::NodeId, sim::NodeProfile> profiles(const Code& code, double helper_bw) const {
        std::map<plan::NodeId, sim::NodeProfile> out;
        for (std::size_t c = 0; c < code.k + code.m; ++c) {
            out[static_cast<plan::NodeId>(c)] = {helper_bw, helper_bw};
        }
        out[kSimStarter] = {spec_.starter_bw, spec_.starter_bw};
        return out;
    }

    const ExperimentSpec& spec_;
};

} // namespace

void ExperimentSpec::validate() const {
    if (strategies.empty() || codes.empty() || chunk_sizes.empty() || packet_sizes.empty() || helper_bw.empty()) {
        throw std::invalid_argument("experiment spec needs strategies, codes, chunk_sizes, packet_sizes and helper_bw");
    }
    if (repetitions < 1) {
        throw std::invalid_argument("repetitions must be at least 1");
    }
    for (auto c : chunk_sizes) {
        for (auto p : packet_sizes) {
            if (p == 0 || c % p != 0) {
                throw std::invalid_argument(fmt::format("packet size {} does not divide chunk size {}", p, c));
            }
        }
    }
    for (const auto& code : codes) {
        rs::CodeParams{code.k, code.m, 1, 1}.validate();
        if (code.m == 0) {
            throw std::invalid_argument("codes need at least one parity chunk");
        }
        for (auto q : q_values) {
            if (q < code.k || q > code.k + code.m - 1) {
                throw std::invalid_argument(fmt::format("q = {} outside [k, k+m-1] for RS({},{})", q, code.k, code.m));
            }
        }
    }
    for (double bw : helper_bw) {
        if (!(bw > 0)) {
            throw std::invalid_argument("helper bandwidth must be positive");
        }
    }
    if (!(starter_bw > 0) || hop_latency < 0) {
        throw std::invalid_argument("starter bandwidth must be positive and hop latency non-negative");
    }
}

ExperimentSpec parse_spec(std::string_view text) {
    ExperimentSpec spec;
    std::istringstream in{std::string(text)};
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        if (const auto hash = raw.find('#'); hash != std::string::npos) {
            raw.erase(hash);
        }
        const auto l = trim(raw);
        if (l.empty()) {
            continue;
        }
        const auto eq = l.find('=');
        if (eq == std::string_view::npos) {
            throw std::invalid_argument(fmt::format("spec line {}: expected key = value", line));
        }
        const auto key = trim(l.substr(0, eq));
        const auto values = items(l.substr(eq + 1));
        auto single = [&]() -> const std::string& {
            if (values.size() != 1) {
                throw std::invalid_argument(fmt::format("spec line {}: {} takes one value", line, key));
            }
            return values.front();
        };
        if (key == "backend") {
            const auto& v = single();
            if (v == "simulator") {
                spec.backend = Backend::Simulator;
            } else if (v == "cluster") {
                spec.backend = Backend::Cluster;
            } else {
                throw std::invalid_argument("unknown backend '" + v + "'");
            }
        } else if (key == "strategies") {
            for (const auto& v : values) {
                spec.strategies.push_back(plan::parse_strategy(v));
            }
        } else if (key == "codes") {
            for (const auto& v : values) {
                const auto plus = v.find('+');
                if (plus == std::string::npos) {
                    throw std::invalid_argument("code must be written k+m, got '" + v + "'");
                }
                spec.codes.push_back({integer<std::size_t>(std::string_view(v).substr(0, plus), "k"),
                                      integer<std::size_t>(std::string_view(v).substr(plus + 1), "m")});
            }
        } else if (key == "chunk_sizes") {
            for (const auto& v : values) {
                spec.chunk_sizes.push_back(units::parse_size(v));
            }
        } else if (key == "packet_sizes") {
            for (const auto& v : values) {
                spec.packet_sizes.push_back(units::parse_size(v));
            }
        } else if (key == "helper_bw") {
            for (const auto& v : values) {
                spec.helper_bw.push_back(units::parse_rate(v));
            }
        } else if (key == "starter_bw") {
            spec.starter_bw = units::parse_rate(single());
        } else if (key == "q") {
            spec.q_values.clear();
            if (!(values.size() == 1 && values.front() == "auto")) {
                for (const auto& v : values) {
                    spec.q_values.push_back(integer<std::size_t>(v, "q"));
                }
            }
        } else if (key == "repetitions") {
            spec.repetitions = integer<std::size_t>(single(), "repetitions");
        } else if (key == "seed") {
            spec.seed = integer<std::uint64_t>(single(), "seed");
        } else if (key == "hop_latency") {
            spec.hop_latency = real(single(), "hop_latency");
        } else {
            throw std::invalid_argument(fmt::format("spec line {}: unknown key '{}'", line, key));
        }
    }
    spec.validate();
    return spec;
}

ExperimentSpec load_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open spec " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_spec(ss.str());
}

std::string csv_header() {
    return "backend,strategy,k,m,q,chunk_bytes,packet_bytes,helper_bw,starter_bw,hop_latency_s,repetitions,"
           "latency_mean_s,latency_min_s,latency_max_s,normal_latency_s,normalized";
}

std::string to_csv(const Row& r) {
    return fmt::format("{},{},{},{},{},{},{},{},{},{:.6f},{},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f}", r.backend, r.strategy,
                       r.k, r.m, r.q, r.chunk_bytes, r.packet_bytes, rate_text(r.helper_bw), rate_text(r.starter_bw),
                       r.hop_latency, r.repetitions, r.latency_mean, r.latency_min, r.latency_max, r.normal_latency,
                       r.normalized);
}

std::vector<Row> parse_csv(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line) || trim(line) != csv_header()) {
        throw std::invalid_argument("CSV header does not match the report schema");
    }
    std::vector<Row> rows;
    std::size_t n = 1;
    while (std::getline(in, line)) {
        ++n;
        if (trim(line).empty()) {
            continue;
        }
        std::vector<std::string> f;
        std::stringstream ls(line);
        for (std::string cell; std::getline(ls, cell, ',');) {
            f.emplace_back(trim(cell));
        }
        if (f.size() != 16) {
            throw std::invalid_argument(fmt::format("CSV line {}: expected 16 fields, got {}", n, f.size()));
        }
        Row r;
        r.backend = f[0];
        r.strategy = f[1];
        r.k = integer<std::size_t>(f[2], "k");
        r.m = integer<std::size_t>(f[3], "m");
        r.q = integer<std::size_t>(f[4], "q");
        r.chunk_bytes = integer<std::size_t>(f[5], "chunk_bytes");
        r.packet_bytes = integer<std::size_t>(f[6], "packet_bytes");
        r.helper_bw = real(f[7], "helper_bw");
        r.starter_bw = real(f[8], "starter_bw");
        r.hop_latency = real(f[9], "hop_latency_s");
        r.repetitions = integer<std::size_t>(f[10], "repetitions");
        r.latency_mean = real(f[11], "latency_mean_s");
        r.latency_min = real(f[12], "latency_min_s");
        r.latency_max = real(f[13], "latency_max_s");
        r.normal_latency = real(f[14], "normal_latency_s");
        r.normalized = real(f[15], "normalized");
        rows.push_back(std::move(r));
    }
    return rows;
}

std::vector<Row> run_experiment(const ExperimentSpec& spec, const std::function<void(const Row&)>& on_row) {
    spec.validate();
    std::vector<Row> rows;
    const Simulator simulator(spec);

    for (const auto& code : spec.codes) {
        for (auto chunk : spec.chunk_sizes) {
            for (auto packet : spec.packet_sizes) {
                for (double bw : spec.helper_bw) {
                    std::unique_ptr<cluster::LocalCluster> cl;
                    if (spec.backend == Backend::Cluster) {
                        cluster::LocalClusterOptions o;
                        o.params = {code.k, code.m, chunk, packet};
                        o.seed = spec.seed;
                        o.helper_up_bw = bw;
                        o.helper_down_bw = bw;
                        cl = std::make_unique<cluster::LocalCluster>(o);
                    }
                    auto cluster_read = [&](cluster::ReadMode mode, plan::Strategy s, std::size_t q) {
                        auto o = cl->requestor_options();
                        o.mode = mode;
                        o.strategy = s;
                        o.down_bw = spec.starter_bw;
                        o.source_limit = static_cast<std::uint32_t>(q);
                        o.collect_counters = false;
                        const auto r = cl->read(0, 0, o);
                        if (r.data != cl->original(0, 0)) {
                            throw std::runtime_error("cluster read returned wrong bytes");
                        }
                        return r.latency;
                    };

                    // Normal-read reference for this configuration.
                    std::vector<double> normal;
                    if (spec.backend == Backend::Simulator) {
                        normal.push_back(simulator.normal(code, chunk, packet, bw));
                    } else {
                        for (std::size_t i = 0; i < spec.repetitions; ++i) {
                            normal.push_back(cluster_read(cluster::ReadMode::Normal, plan::Strategy::ECPipe, 0));
                        }
                    }
                    const double normal_mean = stats_of(normal).mean;

                    for (auto strategy : spec.strategies) {
                        std::vector<std::size_t> qs{code.k};
                        if (plan::uses_all_survivors(strategy)) {
                            qs = spec.q_values.empty() ? std::vector<std::size_t>{code.k + code.m - 1} : spec.q_values;
                        }
                        for (auto q : qs) {
                            std::vector<double> lat;
                            if (spec.backend == Backend::Simulator) {
                                lat.push_back(simulator.degraded(code, chunk, packet, bw, strategy, q));
                            } else {
                                for (std::size_t i = 0; i < spec.repetitions; ++i) {
                                    lat.push_back(cluster_read(cluster::ReadMode::Degraded, strategy, q));
                                }
                            }
                            const auto st = stats_of(lat);
                            Row r;
                            r.backend = std::string(backend_name(spec.backend));
                            r.strategy = std::string(plan::to_string(strategy));
                            r.k = code.k;
                            r.m = code.m;
                            r.q = q;
                            r.chunk_bytes = chunk;
                            r.packet_bytes = packet;
                            r.helper_bw = bw;
                            r.starter_bw = spec.starter_bw;
                            r.hop_latency = spec.backend == Backend::Simulator ? spec.hop_latency : 0.0;
                            r.repetitions = spec.repetitions;
                            r.latency_mean = st.mean;
                            r.latency_min = st.min;
                            r.latency_max = st.max;
                            r.normal_latency = normal_mean;
                            r.normalized = st.mean / normal_mean;
                            if (on_row) {
                                on_row(r);
                            }
                            rows.push_back(std::move(r));
                        }
                    }
                }
            }
        }
    }
    return rows;
}

double model_latency(plan::Strategy strategy, std::size_t k, std::size_t q, double chunk_bytes, double helper_bw,
                     double starter_bw) {
    const double per_helper = 8.0 * chunk_bytes / helper_bw;
    const double at_starter = 8.0 * chunk_bytes / starter_bw;
    switch (strategy) {
    case plan::Strategy::Traditional:
        return static_cast<double>(k - 1) * per_helper;
    case plan::Strategy::PPR:
        return static_cast<double>(flow::ppr_max_fan_in(k)) * per_helper;
    case plan::Strategy::ECPipe:
    case plan::Strategy::ECPipeMulti:
        return std::max(per_helper, at_starter);
    case plan::Strategy::APLSParallel:
    case plan::Strategy::APLSPipelined:
        return std::max(static_cast<double>(k) * per_helper / static_cast<double>(q), at_starter);
    }
    return 0;
}

std::vector<Comparison> compare_strategies(const std::vector<Row>& rows, plan::Strategy baseline) {
    if (rows.empty()) {
        throw std::invalid_argument("nothing to compare");
    }
    const std::string base(plan::to_string(baseline));
    std::map<ConfigKey, std::set<std::string>> strategies;
    std::map<ConfigKey, const Row*> base_rows;
    for (const auto& r : rows) {
        const auto key = config_of(r);
        strategies[key].insert(r.strategy);
        if (r.strategy == base) {
            if (base_rows.contains(key)) {
                throw std::invalid_argument("configuration has more than one " + base + " row");
            }
            base_rows[key] = &r;
        }
    }
    const auto& reference = strategies.begin()->second;
    for (const auto& [key, set] : strategies) {
        if (set != reference) {
            throw std::invalid_argument("configurations cover different strategy sets");
        }
        if (!base_rows.contains(key)) {
            throw std::invalid_argument("configuration without a " + base + " baseline row");
        }
    }
    std::vector<Comparison> out;
    for (const auto& r : rows) {
        const Row& b = *base_rows.at(config_of(r));
        Comparison c;
        c.row = r;
        c.vs_baseline = r.latency_mean / b.latency_mean;
        c.vs_normal = r.latency_mean / r.normal_latency;
        c.model = model_latency(plan::parse_strategy(r.strategy), r.k, r.q, static_cast<double>(r.chunk_bytes),
                                r.helper_bw, r.starter_bw);
        out.push_back(std::move(c));
    }
    return out;
}

std::string format_comparison(const std::vector<Comparison>& comparisons) {
    std::string out = fmt::format("{:<10} {:<15} {:>6} {:>3} {:>10} {:>9} {:>10} {:>11} {:>9} {:>10} {:>10}\n",
                                  "backend", "strategy", "code", "q", "chunk", "packet", "helper_bw", "latency_s",
                                  "vs_base", "vs_normal", "vs_model");
    for (const auto& c : comparisons) {
        const auto& r = c.row;
        out += fmt::format("{:<10} {:<15} {:>6} {:>3} {:>10} {:>9} {:>10} {:>11.6f} {:>9.3f} {:>10.3f} {:>10.3f}\n",
                           r.backend, r.strategy, fmt::format("{}+{}", r.k, r.m), r.q, r.chunk_bytes, r.packet_bytes,
                           rate_text(r.helper_bw), r.latency_mean, c.vs_baseline, c.vs_normal,
                           r.latency_mean / c.model);
    }
    return out;
}

} // namespace apls::bench
