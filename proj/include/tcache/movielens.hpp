#pragma once

// MovieLens ratings -> per-slot F x F x N_BS demand tensors.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "tcache/tensor.hpp"

namespace tcache {

struct RatingsRecord {
    std::int64_t user_id = 0;
    std::int64_t movie_id = 0;
    double rating = 0.0;
    std::int64_t timestamp = 0;  // epoch seconds
};

/// Accepts comma, tab, or "::" separated `user,movie,rating,timestamp`, with an
/// optional header line. Extra trailing fields are ignored.
std::vector<RatingsRecord> read_ratings(std::istream& in);
std::vector<RatingsRecord> read_ratings_file(const std::string& path);

enum class Pairing { SelfDiagonal, CoSession };
enum class Weighting { Count, StarSum };

std::string to_string(Pairing p);

struct IngestConfig {
    std::size_t num_files = 128;
    std::size_t num_bs = 3;
    std::size_t slot_days = 30;
    Pairing pairing = Pairing::SelfDiagonal;
    double session_gap_hours = 6.0;
    Weighting weighting = Weighting::Count;
    std::uint64_t seed = 0;  // salts the user -> base station hash

    void validate() const;
};

struct DemandStream {
    std::vector<DenseTensor> slots;     // F x F x N_BS each
    std::vector<std::int64_t> movies;   // file index -> movie_id
    std::int64_t start_timestamp = 0;
    std::size_t kept_ratings = 0;       // ratings of the top-F movies
};

std::size_t assign_bs(std::int64_t user_id, std::size_t num_bs, std::uint64_t seed);

DemandStream build_demand_tensor(std::span<const RatingsRecord> records, const IngestConfig& cfg);

}  // namespace tcache
