#pragma once

#include "apls/plan.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

// Parameter sweeps over the simulator or an in-process loopback cluster,
// reported as CSV.
//
// Spec files are key = value lines; list values are separated by commas or
// blanks, '#' starts a comment:
//
//   backend      = simulator        # or cluster
//   strategies   = ecpipe apls
//   codes        = 6+6 10+4         # k+m
//   chunk_sizes  = 64M
//   packet_sizes = 16K 64K 256K 1M
//   helper_bw    = 100M             # bits/s, binary prefixes
//   starter_bw   = inf
//   q            = auto             # or a list; applies to all-survivor strategies
//   repetitions  = 10
//   seed         = 1
//   hop_latency  = 0.0001           # seconds, simulator only
namespace apls::bench {

enum class Backend { Simulator, Cluster };

struct Code {
    std::size_t k = 0;
    std::size_t m = 0;
    bool operator==(const Code&) const = default;
};

struct ExperimentSpec {
    Backend backend = Backend::Simulator;
    std::vector<plan::Strategy> strategies;
    std::vector<Code> codes;
    std::vector<std::size_t> chunk_sizes;
    std::vector<std::size_t> packet_sizes;
    std::vector<double> helper_bw;
    double starter_bw = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> q_values; // empty: every survivor (k+m-1)
    std::size_t repetitions = 1;
    std::uint64_t seed = 1;
    double hop_latency = 0;

    /// Throws std::invalid_argument: empty lists, repetitions < 1, a packet
    /// size not dividing a chunk size, q outside [k, k+m-1].
    void validate() const;
};

ExperimentSpec parse_spec(std::string_view text);
ExperimentSpec load_spec(const std::filesystem::path& path);

struct Row {
    std::string backend;
    std::string strategy;
    std::size_t k = 0;
    std::size_t m = 0;
    std::size_t q = 0;
    std::size_t chunk_bytes = 0;
    std::size_t packet_bytes = 0;
    double helper_bw = 0;
    double starter_bw = 0;
    double hop_latency = 0;
    std::size_t repetitions = 0;
    double latency_mean = 0;
    double latency_min = 0;
    double latency_max = 0;
    double normal_latency = 0; // same chunk size and caps, same batch
    double normalized = 0;     // latency_mean / normal_latency
};

std::string csv_header();
std::string to_csv(const Row& row);
/// Reads a CSV produced by to_csv (header required). Throws std::invalid_argument.
std::vector<Row> parse_csv(std::string_view text);

/// Runs every configuration in order. `on_row` sees each row as soon as it
/// is complete, so a caller can flush partial output if a later
/// configuration throws. Simulator runs are deterministic, so repetitions
/// there reuse one simulation.
std::vector<Row> run_experiment(const ExperimentSpec& spec, const std::function<void(const Row&)>& on_row = {});

struct Comparison {
    Row row;
    double vs_baseline = 0; // latency_mean / baseline latency_mean
    double vs_normal = 0;
    double model = 0; // bandwidth-model latency for the row's configuration
};

/// Ratios of every row against the baseline strategy's row of the same
/// configuration (backend, code, chunk, packet, caps, hop latency). Throws
/// std::invalid_argument when configurations cover different strategy sets
/// or lack the baseline.
std::vector<Comparison> compare_strategies(const std::vector<Row>& rows,
                                           plan::Strategy baseline = plan::Strategy::ECPipe);

std::string format_comparison(const std::vector<Comparison>& comparisons);

/// Bandwidth-model latency in seconds, c in bytes and B in bits/s:
/// Traditional (k-1)c/B, PPR f*c/B with f the largest tree fan-in, ECPipe and EC-B
/// max(c/B, c/B_starter), all-survivor max(k*c/(q*B), c/B_starter).
double model_latency(plan::Strategy strategy, std::size_t k, std::size_t q, double chunk_bytes, double helper_bw,
                     double starter_bw);

} // namespace apls::bench
