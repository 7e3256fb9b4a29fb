#include "tcache/movielens.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <unordered_map>

namespace tcache {

std::string to_string(Pairing p) { return p == Pairing::SelfDiagonal ? "self" : "cosession"; }

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    if (line.find("::") != std::string::npos) {
        std::size_t start = 0;
        for (;;) {
            auto p = line.find("::", start);
            out.push_back(line.substr(start, p == std::string::npos ? std::string::npos : p - start));
            if (p == std::string::npos) break;
            start = p + 2;
        }
        return out;
    }
    const char sep = line.find('\t') != std::string::npos ? '\t' : ',';
    std::size_t start = 0;
    for (;;) {
        auto p = line.find(sep, start);
        out.push_back(line.substr(start, p == std::string::npos ? std::string::npos : p - start));
        if (p == std::string::npos) break;
        start = p + 1;
    }
    return out;
}

template <typename T>
bool parse_number(const std::string& s, T& out) {
    auto b = s.find_first_not_of(" \r");
    auto e = s.find_last_not_of(" \r");
    if (b == std::string::npos) return false;
    const char* first = s.data() + b;
    const char* last = s.data() + e + 1;
    auto [p, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && p == last;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

std::vector<RatingsRecord> read_ratings(std::istream& in) {
    std::vector<RatingsRecord> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto fields = split_fields(line);
        RatingsRecord r;
        const bool ok = fields.size() >= 4 && parse_number(fields[0], r.user_id) &&
                        parse_number(fields[1], r.movie_id) && parse_number(fields[2], r.rating) &&
                        parse_number(fields[3], r.timestamp);
        if (!ok) {
            if (line_no == 1 && out.empty()) continue;  // header
            throw std::runtime_error("ratings line " + std::to_string(line_no) + " is malformed: " + line);
        }
        if (r.timestamp <= 0 || r.rating < 0.0) {
            throw std::runtime_error("ratings line " + std::to_string(line_no) +
                                     ": timestamp must be positive and rating nonnegative");
        }
        out.push_back(r);
    }
    return out;
}

std::vector<RatingsRecord> read_ratings_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return read_ratings(in);
}

void IngestConfig::validate() const {
    if (num_files < 1) throw std::invalid_argument("file count must be >= 1");
    if (num_bs < 1) throw std::invalid_argument("base station count must be >= 1");
    if (slot_days < 1) throw std::invalid_argument("slot length must be at least one day");
    if (pairing == Pairing::CoSession && !(session_gap_hours > 0.0))
        throw std::invalid_argument("session gap must be positive");
}

std::size_t assign_bs(std::int64_t user_id, std::size_t num_bs, std::uint64_t seed) {
    return static_cast<std::size_t>(splitmix64(static_cast<std::uint64_t>(user_id) ^ seed) % num_bs);
}

DemandStream build_demand_tensor(std::span<const RatingsRecord> records, const IngestConfig& cfg) {
    cfg.validate();
    if (records.empty()) throw std::invalid_argument("no ratings records");

    std::map<std::int64_t, std::size_t> counts;
    for (const auto& r : records) ++counts[r.movie_id];
    if (counts.size() < cfg.num_files) {
        throw std::invalid_argument("only " + std::to_string(counts.size()) + " distinct movies, need " +
                                    std::to_string(cfg.num_files));
    }
    // map iteration is by ascending movie_id, so stable sort breaks ties on it
    std::vector<std::pair<std::int64_t, std::size_t>> ranked(counts.begin(), counts.end());
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });

    DemandStream out;
    std::unordered_map<std::int64_t, std::size_t> file_of;
    for (std::size_t f = 0; f < cfg.num_files; ++f) {
        out.movies.push_back(ranked[f].first);
        file_of[ranked[f].first] = f;
    }

    std::int64_t start = records.front().timestamp;
    std::int64_t end = start;
    for (const auto& r : records) {
        start = std::min(start, r.timestamp);
        end = std::max(end, r.timestamp);
    }
    out.start_timestamp = start;
    const std::int64_t slot_seconds = static_cast<std::int64_t>(cfg.slot_days) * 86400;
    const auto slot_of = [&](std::int64_t ts) { return static_cast<std::size_t>((ts - start) / slot_seconds); };
    const std::size_t num_slots = slot_of(end) + 1;
    const std::size_t files = cfg.num_files;
    const Shape shape({files, files, cfg.num_bs});
    out.slots.assign(num_slots, DenseTensor(shape));

    auto weight = [&](const RatingsRecord& r) { return cfg.weighting == Weighting::Count ? 1.0 : r.rating; };
    auto add = [&](std::size_t slot, std::size_t f, std::size_t i, std::size_t b, double w) {
        out.slots[slot][f + i * files + b * files * files] += w;
    };

    if (cfg.pairing == Pairing::SelfDiagonal) {
        for (const auto& r : records) {
            auto it = file_of.find(r.movie_id);
            if (it == file_of.end()) continue;
            ++out.kept_ratings;
            add(slot_of(r.timestamp), it->second, it->second, assign_bs(r.user_id, cfg.num_bs, cfg.seed), weight(r));
        }
        return out;
    }

    // CoSession: consecutive kept ratings (f then i) by one user within the gap
    std::vector<std::size_t> order;
    for (std::size_t j = 0; j < records.size(); ++j) {
        if (file_of.count(records[j].movie_id)) order.push_back(j);
    }
    out.kept_ratings = order.size();
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (records[a].user_id != records[b].user_id) return records[a].user_id < records[b].user_id;
        return records[a].timestamp < records[b].timestamp;
    });
    const double gap_seconds = cfg.session_gap_hours * 3600.0;
    for (std::size_t j = 1; j < order.size(); ++j) {
        const RatingsRecord& prev = records[order[j - 1]];
        const RatingsRecord& cur = records[order[j]];
        if (prev.user_id != cur.user_id) continue;
        if (static_cast<double>(cur.timestamp - prev.timestamp) > gap_seconds) continue;
        add(slot_of(cur.timestamp), file_of[prev.movie_id], file_of[cur.movie_id],
            assign_bs(cur.user_id, cfg.num_bs, cfg.seed), weight(cur));
    }
    return out;
}

}  // namespace tcache
