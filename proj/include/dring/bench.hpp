#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "dring/net.hpp"
#include "dring/pir.hpp"

namespace dring::bench {

struct SchemeSpec {
    std::string name = "itpir";
    unsigned depth = 1;
    unsigned word_bits = 10;
};

struct SweepConfig {
    std::vector<std::uint64_t> db_bytes = {64ull << 20};
    std::vector<std::uint64_t> record_bytes = {16384};
    std::vector<unsigned> servers = {3};
    std::vector<unsigned> num_ads = {1};
    std::vector<SchemeSpec> schemes = {SchemeSpec{}};
    unsigned privacy = 2;
    unsigned repetitions = 3;
    std::uint64_t seed = 1;
};

struct BenchRow {
    std::string scheme;
    std::uint64_t db_bytes = 0;
    std::uint64_t record_bytes = 0;
    unsigned l = 0, t = 0, w = 0, d = 0, q = 0;
    std::uint64_t up_bytes = 0;
    std::uint64_t down_bytes = 0;
    double encode_s_mean = 0, encode_s_sd = 0;
    double server_s_mean = 0, server_s_sd = 0;
    double decode_s_mean = 0, decode_s_sd = 0;
    double total_s_mean = 0, total_s_sd = 0;
};

// Runs every (scheme, db size, record size, l, q) cell of the grid with
// in-process servers executed sequentially, so server time is the sum of
// per-server compute. Cells whose parameters cannot decode (too few
// servers for the recursion degree) are skipped with a note on `progress`.
std::vector<BenchRow> run_sweep(const SweepConfig& cfg,
                                std::ostream* progress = nullptr);

std::string bench_csv_header();
std::string to_csv_row(const BenchRow& row);
void write_csv(const std::vector<BenchRow>& rows, std::ostream& out);

}  // namespace dring::bench
