// clonecurve: multi-threshold bag-of-tokens clone detection.
//
// Subcommands:
//   detect     run a curve (or single config) over a corpus, write reports
//   plan       derive upper length bounds for a curve and print it
//   gen        generate a synthetic pre-tokenized corpus with ground truth
//   calibrate  sweep labeled pairs into a curve at a precision target
//   bench      compare single / curve-raw / curve-optimized on one corpus
//
// Exit codes: 0 success, 1 fatal error, 2 success with warnings.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "clonecurve/clonecurve.hpp"

namespace fs = std::filesystem;
using namespace clonecurve;

namespace {

struct CurveSourceOpts {
    std::string preset_name;
    std::string curve_file;
    std::string single;
};

void add_curve_source(CLI::App* cmd, CurveSourceOpts& opts) {
    auto* p = cmd->add_option("--preset", opts.preset_name, "shipped curve preset")
                  ->check(CLI::IsMember(preset_names()));
    auto* c = cmd->add_option("--curve", opts.curve_file, "curve file (st_permille,ltlt[,utlt])");
    auto* s = cmd->add_option("--single", opts.single, "one config as st_permille,ltlt");
    p->excludes(c)->excludes(s);
    c->excludes(p)->excludes(s);
    s->excludes(p)->excludes(c);
}

SearchConfig parse_single(const std::string& text) {
    std::size_t comma = text.find(',');
    if (comma == std::string::npos)
        throw parse_error("BadSingleConfig: expected st_permille,ltlt, got '" + text + "'");
    SearchConfig cfg;
    cfg.st = static_cast<permille>(std::stol(text.substr(0, comma)));
    cfg.ltlt = static_cast<std::uint32_t>(std::stoul(text.substr(comma + 1)));
    return cfg;
}

ParametricCurve resolve_curve(const CurveSourceOpts& opts, bool* is_single = nullptr) {
    if (is_single)
        *is_single = false;
    if (!opts.preset_name.empty())
        return preset(opts.preset_name);
    if (!opts.curve_file.empty()) {
        ParametricCurve curve = read_curve_file(opts.curve_file);
        ValidationResult v = validate(curve);
        if (!v.ok())
            throw curve_error(v.message());
        return curve;
    }
    if (!opts.single.empty()) {
        if (is_single)
            *is_single = true;
        ParametricCurve curve;
        curve.configs.push_back(parse_single(opts.single));
        ValidationResult v = validate(curve);
        if (!v.ok())
            throw curve_error(v.message());
        return curve;
    }
    throw curve_error("NoCurveSource: pass one of --preset, --curve, --single");
}

unsigned default_jobs() {
    if (const char* env = std::getenv("CLONECURVE_JOBS")) {
        long v = std::strtol(env, nullptr, 10);
        if (v >= 1)
            return static_cast<unsigned>(v);
    }
    return 1;
}

Granularity parse_granularity(const std::string& s) {
    if (s == "method")
        return Granularity::method;
    if (s == "braced-block")
        return Granularity::braced_block;
    throw parse_error("BadGranularity: expected method or braced-block, got '" + s + "'");
}

struct TimedCorpus {
    Corpus corpus;
    double load_ms = 0.0;
};

TimedCorpus load_timed(const std::string& path, const std::string& granularity,
                       const std::string& ext) {
    auto t0 = std::chrono::steady_clock::now();
    TimedCorpus tc;
    tc.corpus = load_corpus(path, parse_granularity(granularity), ext);
    tc.load_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return tc;
}

void write_warnings_file(const fs::path& path, const std::vector<CorpusWarning>& warnings) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw io_error("CannotWrite(" + path.string() + ")");
    for (const CorpusWarning& w : warnings) {
        out << w.file;
        if (w.line)
            out << ':' << w.line;
        out << ": " << w.message << (w.file_skipped ? " [file skipped]" : "") << '\n';
    }
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw io_error("CannotWrite(" + path.string() + ")");
    return out;
}

bool same_pair_sets(const std::vector<ClonePair>& a, const std::vector<ClonePair>& b) {
    if (a.size() != b.size())
        return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i].block_a != b[i].block_a || a[i].block_b != b[i].block_b || a[i].sim != b[i].sim)
            return false;
    return true;
}

void print_instance_lines(const CloneReport& report) {
    for (std::size_t i = 0; i < report.per_instance.size(); ++i) {
        const InstanceStats& inst = report.per_instance[i];
        std::printf("  instance %zu (st=%d, len %u-%s): pairs=%llu new=%llu %.1f ms\n", i,
                    inst.config.st, inst.config.ltlt,
                    inst.config.utlt ? std::to_string(*inst.config.utlt).c_str() : "inf",
                    static_cast<unsigned long long>(inst.pairs_found),
                    static_cast<unsigned long long>(inst.new_pairs), inst.wall_ms);
    }
}

int cmd_detect(const std::string& corpus_path, const CurveSourceOpts& curve_opts,
               std::string mode_name, const std::string& granularity, const std::string& ext,
               const std::string& out_dir, unsigned jobs) {
    bool is_single = false;
    ParametricCurve curve = resolve_curve(curve_opts, &is_single);
    if (mode_name.empty())
        mode_name = is_single ? "single" : "curve-optimized";
    RunMode mode = run_mode_from_string(mode_name);

    TimedCorpus tc = load_timed(corpus_path, granularity, ext);
    CloneReport report = run_curve(tc.corpus.blocks, curve, mode, jobs);

    fs::create_directories(out_dir);
    {
        auto out = open_out(fs::path(out_dir) / "pairs.csv");
        write_pair_csv(out, report, tc.corpus.blocks);
    }
    {
        auto out = open_out(fs::path(out_dir) / "report.json");
        write_json_report(out, report, tc.load_ms);
    }
    {
        auto out = open_out(fs::path(out_dir) / "scatter.csv");
        write_scatter_csv(out, report);
    }
    if (!tc.corpus.warnings.empty())
        write_warnings_file(fs::path(out_dir) / "warnings.txt", tc.corpus.warnings);

    OverlapStats stats = overlap_stats(report);
    std::printf("blocks: %llu (%zu files, %zu skipped)\n",
                static_cast<unsigned long long>(report.total_blocks), tc.corpus.files_seen,
                tc.corpus.files_skipped);
    std::printf("tokenization: %.1f ms\n", tc.load_ms);
    std::printf("mode: %s, %zu instance(s)\n", to_string(report.mode).c_str(),
                report.per_instance.size());
    print_instance_lines(report);
    std::printf("pairs: %zu (redundant detections %llu, redundancy %.3f)\n", report.pairs.size(),
                static_cast<unsigned long long>(stats.redundant_detections),
                stats.redundancy_ratio);
    std::printf("detection: %.1f ms\n", report.total_wall_ms);
    std::printf("wrote %s/pairs.csv %s/report.json %s/scatter.csv\n", out_dir.c_str(),
                out_dir.c_str(), out_dir.c_str());
    if (!tc.corpus.warnings.empty()) {
        std::printf("warnings: %zu (see %s/warnings.txt)\n", tc.corpus.warnings.size(),
                    out_dir.c_str());
        return 2;
    }
    return 0;
}

int cmd_plan(const CurveSourceOpts& curve_opts) {
    ParametricCurve curve = resolve_curve(curve_opts);
    if (!curve_opts.preset_name.empty())
        curve = strip_upper_bounds(curve);
    ParametricCurve bounded = apply_upper_bounds(curve);
    std::fputs(format_curve(bounded).c_str(), stdout);
    return 0;
}

int cmd_gen(const std::string& out_dir, const GenSpec& spec) {
    GeneratedCorpus corpus = generate_corpus(spec);
    fs::create_directories(out_dir);
    write_block_file(fs::path(out_dir) / "corpus.blocks", corpus.blocks);
    write_ground_truth(fs::path(out_dir) / "ground_truth.csv", corpus.ground_truth);
    std::printf("generated %zu blocks, %zu ground-truth pairs\n", corpus.blocks.size(),
                corpus.ground_truth.size());
    std::printf("wrote %s/corpus.blocks %s/ground_truth.csv\n", out_dir.c_str(), out_dir.c_str());
    return 0;
}

int cmd_calibrate(const std::string& labels_path, const std::string& grid_spec, double target,
                  unsigned min_ltlt, const std::string& out_file) {
    std::vector<LabeledPair> pairs = read_labeled_pairs(labels_path);

    std::vector<permille> grid;
    if (grid_spec.empty()) {
        grid = default_st_grid();
    } else {
        std::size_t pos = 0;
        while (pos <= grid_spec.size()) {
            std::size_t comma = grid_spec.find(',', pos);
            std::string field = grid_spec.substr(
                pos, comma == std::string::npos ? std::string::npos : comma - pos);
            if (!field.empty())
                grid.push_back(static_cast<permille>(std::stol(field)));
            if (comma == std::string::npos)
                break;
            pos = comma + 1;
        }
    }

    CalibrationResult result =
        calibrate_curve(pairs, grid, target, static_cast<std::uint32_t>(min_ltlt));
    for (const std::string& w : result.warnings)
        std::fprintf(stderr, "warning: %s\n", w.c_str());

    std::string text = format_curve(result.curve);
    if (out_file.empty()) {
        std::fputs(text.c_str(), stdout);
    } else {
        auto out = open_out(out_file);
        out << text;
        std::printf("wrote %s (%zu configs)\n", out_file.c_str(), result.curve.configs.size());
    }
    return result.warnings.empty() ? 0 : 2;
}

int cmd_bench(const std::string& corpus_path, const CurveSourceOpts& curve_opts,
              const std::string& granularity, const std::string& ext, const std::string& out_dir,
              unsigned jobs) {
    ParametricCurve curve = resolve_curve(curve_opts);
    TimedCorpus tc = load_timed(corpus_path, granularity, ext);

    CloneReport single = run_curve(tc.corpus.blocks, curve, RunMode::single, jobs);
    CloneReport raw = run_curve(tc.corpus.blocks, curve, RunMode::curve_raw, jobs);
    CloneReport optimized = run_curve(tc.corpus.blocks, curve, RunMode::curve_optimized, jobs);

    std::printf("blocks: %zu, tokenization: %.1f ms, jobs: %u\n", tc.corpus.blocks.size(),
                tc.load_ms, jobs);
    std::printf("%-16s %10s %14s %12s\n", "mode", "pairs", "detect_ms", "redundancy");
    for (const CloneReport* r : {&single, &raw, &optimized}) {
        OverlapStats stats = overlap_stats(*r);
        std::printf("%-16s %10zu %14.1f %12.3f\n", to_string(r->mode).c_str(), r->pairs.size(),
                    r->total_wall_ms, stats.redundancy_ratio);
    }

    bool equal = same_pair_sets(raw.pairs, optimized.pairs);
    double delta = raw.total_wall_ms > 0.0
                       ? (optimized.total_wall_ms - raw.total_wall_ms) / raw.total_wall_ms * 100.0
                       : 0.0;
    std::printf("raw vs optimized: pair sets %s (%zu pairs), detect time delta %+.1f%%\n",
                equal ? "equal" : "DIFFER", raw.pairs.size(), delta);
    std::printf("curve vs single: %zu vs %zu pairs\n", raw.pairs.size(), single.pairs.size());

    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        auto out = open_out(fs::path(out_dir) / "bench.json");
        out << "{\n";
        out << "  \"blocks\": " << tc.corpus.blocks.size() << ",\n";
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.3f", tc.load_ms);
        out << "  \"tokenization_ms\": " << buf << ",\n  \"modes\": [\n";
        const CloneReport* reports[] = {&single, &raw, &optimized};
        for (int i = 0; i < 3; ++i) {
            OverlapStats stats = overlap_stats(*reports[i]);
            std::snprintf(buf, sizeof buf, "%.3f", reports[i]->total_wall_ms);
            out << "    {\"mode\": \"" << to_string(reports[i]->mode) << "\", \"pairs\": "
                << reports[i]->pairs.size() << ", \"detect_ms\": " << buf;
            std::snprintf(buf, sizeof buf, "%.6f", stats.redundancy_ratio);
            out << ", \"redundancy_ratio\": " << buf << "}" << (i < 2 ? ",\n" : "\n");
        }
        std::snprintf(buf, sizeof buf, "%.3f", delta);
        out << "  ],\n  \"raw_equals_optimized\": " << (equal ? "true" : "false")
            << ",\n  \"optimized_vs_raw_delta_pct\": " << buf << "\n}\n";
        std::printf("wrote %s/bench.json\n", out_dir.c_str());
    }

    if (!equal) {
        std::fprintf(stderr, "error: optimized run lost or invented pairs\n");
        return 1;
    }
    if (raw.pairs.size() < single.pairs.size()) {
        std::fprintf(stderr, "error: curve found fewer pairs than its first point\n");
        return 1;
    }
    return tc.corpus.warnings.empty() ? 0 : 2;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-threshold bag-of-tokens clone detection"};
    app.require_subcommand(1);

    // detect
    auto* detect = app.add_subcommand("detect", "detect clones over a corpus");
    std::string det_corpus, det_mode, det_gran = "method", det_ext = "java", det_out = "clonecurve-out";
    unsigned det_jobs = default_jobs();
    CurveSourceOpts det_curve;
    detect->add_option("--corpus", det_corpus, "source directory or pre-tokenized block file")
        ->required();
    add_curve_source(detect, det_curve);
    detect->add_option("--mode", det_mode, "single | curve-raw | curve-optimized")
        ->check(CLI::IsMember({"single", "curve-raw", "curve-optimized"}));
    detect->add_option("--granularity", det_gran, "method | braced-block")
        ->check(CLI::IsMember({"method", "braced-block"}));
    detect->add_option("--ext", det_ext, "source file extension (default java)");
    detect->add_option("--out", det_out, "output directory (default clonecurve-out)");
    detect->add_option("--jobs", det_jobs, "parallel instances (env CLONECURVE_JOBS)");

    // plan
    auto* plan = app.add_subcommand("plan", "derive upper length bounds for a curve");
    CurveSourceOpts plan_curve;
    add_curve_source(plan, plan_curve);

    // gen
    auto* gen = app.add_subcommand("gen", "generate a synthetic corpus with ground truth");
    GenSpec gen_spec;
    gen_spec.n_blocks = 200;
    std::string gen_out = "clonecurve-gen";
    gen->add_option("--seed", gen_spec.seed, "RNG seed");
    gen->add_option("--n", gen_spec.n_blocks, "number of blocks (default 200)");
    gen->add_option("--size-min", gen_spec.size_min, "minimum block size in tokens (default 19)");
    gen->add_option("--size-max", gen_spec.size_max, "maximum block size in tokens (default 500)");
    gen->add_option("--vocab", gen_spec.vocab_size, "vocabulary size (default 64)");
    gen->add_option("--clone-fraction", gen_spec.clone_fraction,
                    "fraction of blocks that are injected clones (default 0.3)");
    gen->add_option("--mut-min", gen_spec.mutation_min, "minimum mutation fraction (default 0.0)");
    gen->add_option("--mut-max", gen_spec.mutation_max, "maximum mutation fraction (default 0.5)");
    gen->add_option("--out", gen_out, "output directory (default clonecurve-gen)");

    // calibrate
    auto* calibrate = app.add_subcommand("calibrate", "derive a curve from labeled pairs");
    std::string cal_labels, cal_grid, cal_out;
    double cal_target = 0.9;
    unsigned cal_min_ltlt = 19;
    calibrate->add_option("--labels", cal_labels, "labeled pair CSV (min_size,similarity,label)")
        ->required();
    calibrate->add_option("--grid", cal_grid,
                          "comma-separated descending st permille (default 800..500 step 10)");
    calibrate->add_option("--target", cal_target, "precision target (default 0.9)");
    calibrate->add_option("--min-ltlt", cal_min_ltlt, "smallest admissible ltlt (default 19)");
    calibrate->add_option("--out", cal_out, "curve file to write (default stdout)");

    // bench
    auto* bench = app.add_subcommand("bench", "compare single/raw/optimized on one corpus");
    std::string bench_corpus, bench_gran = "method", bench_ext = "java", bench_out;
    unsigned bench_jobs = default_jobs();
    CurveSourceOpts bench_curve;
    bench->add_option("--corpus", bench_corpus, "source directory or pre-tokenized block file")
        ->required();
    add_curve_source(bench, bench_curve);
    bench->add_option("--granularity", bench_gran, "method | braced-block")
        ->check(CLI::IsMember({"method", "braced-block"}));
    bench->add_option("--ext", bench_ext, "source file extension (default java)");
    bench->add_option("--out", bench_out, "directory for bench.json (optional)");
    bench->add_option("--jobs", bench_jobs, "parallel instances (env CLONECURVE_JOBS)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*detect)
            return cmd_detect(det_corpus, det_curve, det_mode, det_gran, det_ext, det_out,
                              det_jobs);
        if (*plan)
            return cmd_plan(plan_curve);
        if (*gen)
            return cmd_gen(gen_out, gen_spec);
        if (*calibrate)
            return cmd_calibrate(cal_labels, cal_grid, cal_target, cal_min_ltlt, cal_out);
        if (*bench)
            return cmd_bench(bench_corpus, bench_curve, bench_gran, bench_ext, bench_out,
                             bench_jobs);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
