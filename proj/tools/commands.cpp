#include "commands.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <json.hpp>

#include "tcache/caching.hpp"
#include "tcache/coo_io.hpp"
#include "tcache/frank_wolfe.hpp"
#include "tcache/movielens.hpp"
#include "tcache/synthetic.hpp"

#ifndef TCACHE_VERSION
#define TCACHE_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace tcache::cli {
namespace {

constexpr const char* kManifest = "manifest.json";

// Bad input data or an unusable file; maps to exit code 2.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

template <typename Fn>
auto load_input(Fn&& fn) {
    try {
        return fn();
    } catch (const std::exception& e) {
        throw InputError(e.what());
    }
}

std::string default_out_dir() {
    const char* env = std::getenv("TCACHE_OUT_DIR");
    return env && *env ? env : "tcache_out";
}

std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

json config_echo(const CLI::App& sub) {
    json cfg = json::object();
    for (const CLI::Option* opt : sub.get_options()) {
        const std::string name = opt->get_single_name();
        if (name.empty() || name == "help" || name == "config") continue;
        if (opt->count() > 0) {
            auto r = opt->reduced_results();
            if (opt->get_expected_max() > 1)
                cfg[name] = r;
            else
                cfg[name] = r.empty() ? std::string("true") : r.front();
        } else if (opt->get_expected_max() > 1) {
            // vector defaults render as "[a,b,c]"
            std::string d = opt->get_default_str();
            json items = json::array();
            if (d.size() >= 2 && d.front() == '[') d = d.substr(1, d.size() - 2);
            std::stringstream ss(d);
            for (std::string item; std::getline(ss, item, ',');)
                if (!item.empty()) items.push_back(item);
            cfg[name] = items;
        } else {
            cfg[name] = opt->get_default_str();
        }
    }
    return cfg;
}

struct RunContext {
    fs::path out;
    json manifest;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

    RunContext(const std::string& command, const CLI::App& sub, const std::string& out_dir, std::uint64_t seed) {
        out = out_dir.empty() ? default_out_dir() : out_dir;
        std::error_code ec;
        fs::create_directories(out, ec);
        if (ec) throw InputError("cannot create output directory " + out.string() + ": " + ec.message());
        manifest = {{"command", command},
                    {"config", config_echo(sub)},
                    {"seed", seed},
                    {"version", TCACHE_VERSION},
                    {"outputs", json::array()}};
    }

    std::ofstream open_csv(const std::string& name) {
        std::ofstream f(out / name);
        if (!f) throw std::runtime_error("cannot write " + (out / name).string());
        f << "# manifest: " << kManifest << '\n';
        manifest["outputs"].push_back(name);
        return f;
    }

    void finish() {
        manifest["wall_clock_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::ofstream f(out / kManifest);
        f << manifest.dump(2) << '\n';
        if (!f) throw std::runtime_error("cannot write manifest in " + out.string());
    }
};

std::vector<std::size_t> resolve_ranks(const std::vector<std::size_t>& ranks, const std::vector<std::size_t>& rank_n,
                                       std::size_t order) {
    if (!ranks.empty()) return ranks;
    std::vector<std::size_t> out;
    for (std::size_t n : rank_n) out.push_back(n * order);
    return out;
}

// ---- complete ----

struct CompleteArgs {
    std::string input;
    std::vector<std::size_t> ranks;
    std::vector<std::size_t> rank_n{2};
    std::vector<double> betas{1e5};
    std::size_t shift = 1;
    ModeSelection mode_select = ModeSelection::SigmaMax;
    UpdateRule update = UpdateRule::MultiRank;
    std::size_t max_iter = 1000;
    std::uint64_t seed = 0;
    std::string out;
};

void cmd_complete(const CompleteArgs& a, const CLI::App& sub) {
    SparseTensor t = load_input([&] {
        if (!fs::exists(a.input)) throw std::runtime_error("input file not found: " + a.input);
        return read_coo_file(a.input);
    });
    RunContext ctx("complete", sub, a.out, a.seed);
    ctx.manifest["shape"] = t.shape().to_string();
    ctx.manifest["observed"] = t.nnz();

    json runs = json::array();
    for (std::size_t r : resolve_ranks(a.ranks, a.rank_n, t.shape().order())) {
        FwConfig cfg;
        cfg.rank_budget = r;
        cfg.shift = a.shift;
        cfg.mode_selection = a.mode_select;
        cfg.update_rule = a.update;
        cfg.max_iter = a.max_iter;
        cfg.seed = a.seed;
        try {
            cfg.validate(t.shape().order());
        } catch (const std::invalid_argument& e) {
            throw InputError(e.what());
        }
        for (double beta : a.betas) {
            cfg.beta = beta;
            FwState st = complete(t, cfg);
            const std::string name = "trace_R" + std::to_string(r) + "_beta" + format_number(beta) + ".csv";
            auto f = ctx.open_csv(name);
            write_trace_csv(f, st.trace);
            runs.push_back({{"rank", r},
                            {"beta", beta},
                            {"trace", name},
                            {"iterations", st.trace.size() - 1},
                            {"final_rse", st.trace.back().rse},
                            {"rank_used", st.rank_used()},
                            {"stop", to_string(st.stop)}});
            std::cout << "R=" << r << " beta=" << format_number(beta) << " iters=" << st.trace.size() - 1
                      << " rse=" << st.trace.back().rse << " stop=" << to_string(st.stop) << '\n';
        }
        if (a.betas.size() > 1) {
            BetaInvarianceReport rep = beta_invariance(t, cfg, a.betas);
            runs.back()["beta_invariant"] = rep.invariant;
            runs.back()["beta_max_x_deviation"] = rep.max_x_deviation;
        }
    }
    ctx.manifest["runs"] = runs;
    ctx.finish();
}

// ---- simulate ----

struct SimulateArgs {
    std::string ratings;
    std::string synthetic;
    std::size_t slots = 200;
    std::size_t stream_rank = 2;
    double mask = 0.95;
    double zipf_exponent = 0.8;
    std::size_t requests = 1000;
    std::size_t tau = 10;
    std::size_t order = 6;
    std::size_t cache = 32;
    std::size_t bs = 3;
    std::size_t files = 128;
    std::vector<std::size_t> ranks;
    std::vector<std::size_t> rank_n{2, 4, 6, 8, 10, 12};
    std::string completion = "both";
    std::string predictor = "both";
    AggregationAxis axis = AggregationAxis::Recommended;
    std::size_t slot_days = 30;
    Pairing pairing = Pairing::SelfDiagonal;
    double gap_hours = 6.0;
    Weighting weight = Weighting::Count;
    double beta = 1e5;
    std::size_t max_iter = 1000;
    std::uint64_t seed = 0;
    std::string out;
};

void cmd_simulate(const SimulateArgs& a, const CLI::App& sub) {
    std::vector<DenseTensor> observed;
    std::vector<DenseTensor> realized;
    load_input([&] {
        if (!a.ratings.empty()) {
            if (!fs::exists(a.ratings)) throw std::runtime_error("ratings file not found: " + a.ratings);
            auto records = read_ratings_file(a.ratings);
            IngestConfig ic;
            ic.num_files = a.files;
            ic.num_bs = a.bs;
            ic.slot_days = a.slot_days;
            ic.pairing = a.pairing;
            ic.session_gap_hours = a.gap_hours;
            ic.weighting = a.weight;
            ic.seed = a.seed;
            observed = build_demand_tensor(records, ic).slots;
        } else if (a.synthetic == "zipf") {
            observed = synth_zipf_stream(a.files, a.bs, a.slots, a.zipf_exponent, a.requests, a.seed);
        } else {
            auto s = synth_low_rank_stream(a.files, a.bs, a.slots, a.stream_rank, a.mask, a.seed);
            observed = std::move(s.observed);
            realized = std::move(s.truth);
        }
        return 0;
    });

    OnlineConfig cfg;
    cfg.window = a.tau;
    cfg.capacity = a.cache;
    cfg.predictor.order = a.order;
    cfg.predictors.clear();
    if (a.predictor != "mean") cfg.predictors.push_back(PredictorMode::LeastSquares);
    if (a.predictor != "lp") cfg.predictors.push_back(PredictorMode::Mean);
    cfg.raw = a.completion != "on";
    cfg.completion = a.completion != "off";
    cfg.ranks = resolve_ranks(a.ranks, a.rank_n, 4);
    cfg.solver.beta = a.beta;
    cfg.solver.max_iter = a.max_iter;
    cfg.solver.seed = a.seed;
    cfg.axis = a.axis;

    RunContext ctx("simulate", sub, a.out, a.seed);
    ctx.manifest["slots"] = observed.size();
    ctx.manifest["source"] = a.ratings.empty() ? "synthetic-" + a.synthetic : a.ratings;

    OnlineRunReport rep = [&] {
        try {
            return run_online(observed, realized, cfg);
        } catch (const std::invalid_argument& e) {
            throw InputError(e.what());
        }
    }();
    {
        auto f = ctx.open_csv("slots.csv");
        write_slot_csv(f, rep);
    }
    {
        auto f = ctx.open_csv("summary.csv");
        write_summary_csv(f, rep);
    }
    json summary = json::array();
    for (const auto& s : rep.summary) {
        summary.push_back({{"method", s.method},
                           {"rank", s.rank},
                           {"avg_hit_rate", s.avg_hit_rate},
                           {"scored", s.scored},
                           {"zero_demand", s.zero_demand}});
        std::cout << method_label(s.method, s.rank) << ' ' << s.avg_hit_rate << '\n';
    }
    ctx.manifest["summary"] = summary;
    ctx.finish();
}

// ---- ingest ----

struct IngestArgs {
    std::string ratings;
    IngestConfig cfg;
    std::string out;
};

void cmd_ingest(const IngestArgs& a, const CLI::App& sub) {
    DemandStream s = load_input([&] {
        if (!fs::exists(a.ratings)) throw std::runtime_error("ratings file not found: " + a.ratings);
        auto records = read_ratings_file(a.ratings);
        if (records.empty()) throw std::runtime_error("ratings file has no records: " + a.ratings);
        return build_demand_tensor(records, a.cfg);
    });
    RunContext ctx("ingest", sub, a.out, a.cfg.seed);
    json slots = json::array();
    for (std::size_t t = 0; t < s.slots.size(); ++t) {
        char name[32];
        std::snprintf(name, sizeof name, "slot_%04zu.coo", t + 1);
        write_coo_file((ctx.out / name).string(), nonzeros(s.slots[t]));
        slots.push_back(name);
    }
    {
        auto f = ctx.open_csv("files.csv");
        f << "file,movie_id\n";
        for (std::size_t i = 0; i < s.movies.size(); ++i) f << i + 1 << ',' << s.movies[i] << '\n';
    }
    ctx.manifest["slots"] = slots;
    ctx.manifest["start_timestamp"] = s.start_timestamp;
    ctx.manifest["kept_ratings"] = s.kept_ratings;
    ctx.finish();
    std::cout << s.slots.size() << " slots, " << s.kept_ratings << " ratings kept\n";
}

// ---- synth ----

struct SynthArgs {
    std::string shape = "40x40x3x10";
    std::vector<std::size_t> ranks;
    double noise = 0.0;
    double observe = 0.5;
    std::size_t shift = 1;
    std::uint64_t seed = 0;
    std::string out = "synthetic.coo";
    std::string truth;
};

void cmd_synth(const SynthArgs& a) {
    SyntheticTensor s = load_input([&] {
        Shape shape = Shape::parse(a.shape);
        std::vector<std::size_t> ranks = a.ranks;
        if (ranks.empty()) ranks.assign(shape.order(), 2);
        return synth_low_rank(shape, ranks, a.noise, a.observe, a.seed, a.shift);
    });
    write_coo_file(a.out, s.observed);
    if (!a.truth.empty()) write_coo_file(a.truth, nonzeros(s.truth));
    std::cout << s.observed.nnz() << " observed entries of " << s.truth.shape().to_string() << '\n';
}

template <typename E>
CLI::Transformer enum_map(const std::map<std::string, E>& m) {
    return CLI::Transformer(m, CLI::ignore_case);
}

}  // namespace

int run(int argc, char** argv) {
    CLI::App app{"tcache: tensor-completion edge caching experiments"};
    app.set_version_flag("--version", TCACHE_VERSION);
    app.set_config("--config", "", "TOML config file; flags take precedence");
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default();

    const std::map<std::string, ModeSelection> mode_sel{{"sigma", ModeSelection::SigmaMax},
                                                         {"min-dim", ModeSelection::MinDim}};
    const std::map<std::string, UpdateRule> update{{"multi", UpdateRule::MultiRank}, {"rank1", UpdateRule::RankOne}};
    const std::map<std::string, Pairing> pairing{{"self", Pairing::SelfDiagonal}, {"cosession", Pairing::CoSession}};
    const std::map<std::string, Weighting> weight{{"count", Weighting::Count}, {"stars", Weighting::StarSum}};
    const std::map<std::string, AggregationAxis> axis{{"recommended", AggregationAxis::Recommended},
                                                       {"primary", AggregationAxis::Primary}};

    CompleteArgs ca;
    auto* complete_cmd = app.add_subcommand("complete", "Frank-Wolfe completion of a COO tensor, writes RSE traces");
    complete_cmd->add_option("--input,-i", ca.input, "COO tensor file")->required();
    complete_cmd->add_option("--rank", ca.ranks, "rank budgets R (overrides --rank-n)");
    complete_cmd->add_option("--rank-n", ca.rank_n, "rank budgets as multiples of the tensor order");
    complete_cmd->add_option("--beta", ca.betas, "nuclear-norm radius, several values sweep");
    complete_cmd->add_option("--shift", ca.shift, "unfolding shift d");
    complete_cmd->add_option("--mode-select", ca.mode_select)->transform(enum_map(mode_sel));
    complete_cmd->add_option("--update", ca.update)->transform(enum_map(update));
    complete_cmd->add_option("--max-iter", ca.max_iter)->check(CLI::PositiveNumber);
    complete_cmd->add_option("--seed", ca.seed);
    complete_cmd->add_option("--out,-o", ca.out, "output directory (default $TCACHE_OUT_DIR or tcache_out)");

    SimulateArgs sa;
    auto* sim = app.add_subcommand("simulate", "online caching simulation over a demand stream");
    auto* src_ratings = sim->add_option("--ratings", sa.ratings, "ratings file (user,movie,rating,timestamp)");
    auto* src_synth = sim->add_option("--synthetic", sa.synthetic, "synthetic stream instead of ratings")
                          ->check(CLI::IsMember({"zipf", "lowrank"}));
    src_ratings->excludes(src_synth);
    sim->add_option("--slots", sa.slots, "synthetic stream length");
    sim->add_option("--stream-rank", sa.stream_rank, "rank of the lowrank stream");
    sim->add_option("--mask", sa.mask, "masked fraction of the lowrank stream");
    sim->add_option("--zipf-exponent", sa.zipf_exponent);
    sim->add_option("--requests", sa.requests, "zipf requests per base station and slot");
    sim->add_option("--tau", sa.tau, "window length");
    sim->add_option("--order", sa.order, "predictor order M");
    sim->add_option("--cache", sa.cache, "cache capacity L per base station");
    sim->add_option("--bs", sa.bs, "base stations");
    sim->add_option("--files", sa.files, "file catalogue size F");
    sim->add_option("--rank", sa.ranks, "completion rank budgets (overrides --rank-n)");
    sim->add_option("--rank-n", sa.rank_n, "rank budgets as multiples of the window order (4)");
    sim->add_option("--completion", sa.completion)->check(CLI::IsMember({"on", "off", "both"}));
    sim->add_option("--predictor", sa.predictor)->check(CLI::IsMember({"lp", "mean", "both"}));
    sim->add_option("--axis", sa.axis, "demand aggregation axis")->transform(enum_map(axis));
    sim->add_option("--slot-days", sa.slot_days);
    sim->add_option("--pairing", sa.pairing)->transform(enum_map(pairing));
    sim->add_option("--gap-hours", sa.gap_hours);
    sim->add_option("--weight", sa.weight)->transform(enum_map(weight));
    sim->add_option("--beta", sa.beta);
    sim->add_option("--max-iter", sa.max_iter)->check(CLI::PositiveNumber);
    sim->add_option("--seed", sa.seed);
    sim->add_option("--out,-o", sa.out, "output directory (default $TCACHE_OUT_DIR or tcache_out)");

    IngestArgs ia;
    auto* ing = app.add_subcommand("ingest", "ratings file to per-slot demand tensors");
    ing->add_option("--ratings", ia.ratings)->required();
    ing->add_option("--top-f", ia.cfg.num_files, "keep the F most rated movies");
    ing->add_option("--bs", ia.cfg.num_bs);
    ing->add_option("--slot-days", ia.cfg.slot_days);
    ing->add_option("--pairing", ia.cfg.pairing)->transform(enum_map(pairing));
    ing->add_option("--gap-hours", ia.cfg.session_gap_hours);
    ing->add_option("--weight", ia.cfg.weighting)->transform(enum_map(weight));
    ing->add_option("--seed", ia.cfg.seed, "salt for the user to base station hash");
    ing->add_option("--out,-o", ia.out, "output directory (default $TCACHE_OUT_DIR or tcache_out)");

    SynthArgs ya;
    auto* syn = app.add_subcommand("synth", "write a synthetic low-rank COO tensor");
    syn->add_option("--shape", ya.shape, "e.g. 40x40x3x10");
    syn->add_option("--ranks", ya.ranks, "rank per mode (default 2 each)");
    syn->add_option("--noise", ya.noise);
    syn->add_option("--observe", ya.observe, "observed fraction");
    syn->add_option("--shift", ya.shift);
    syn->add_option("--seed", ya.seed);
    syn->add_option("--out,-o", ya.out, "observed tensor file");
    syn->add_option("--truth", ya.truth, "optional file for the full tensor");

    try {
        app.parse(argc, argv);
        if (sim->parsed() && sa.ratings.empty() && sa.synthetic.empty())
            throw CLI::RequiredError("simulate needs --ratings or --synthetic");
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (complete_cmd->parsed()) cmd_complete(ca, *complete_cmd);
        if (sim->parsed()) cmd_simulate(sa, *sim);
        if (ing->parsed()) cmd_ingest(ia, *ing);
        if (syn->parsed()) cmd_synth(ya);
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

}  // namespace tcache::cli
