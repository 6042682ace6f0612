#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "clonecurve/curve.hpp"
#include "clonecurve/engine.hpp"
#include "clonecurve/error.hpp"

namespace clonecurve {

class orchestrator_error : public error {
public:
    using error::error;
};

enum class RunMode { single, curve_raw, curve_optimized };

inline std::string to_string(RunMode m) {
    switch (m) {
    case RunMode::single:
        return "single";
    case RunMode::curve_raw:
        return "curve-raw";
    case RunMode::curve_optimized:
        return "curve-optimized";
    }
    return "single";
}

inline RunMode run_mode_from_string(std::string_view s) {
    if (s == "single")
        return RunMode::single;
    if (s == "curve-raw")
        return RunMode::curve_raw;
    if (s == "curve-optimized")
        return RunMode::curve_optimized;
    throw orchestrator_error("UnknownMode(" + std::string(s) + ")");
}

struct InstanceStats {
    SearchConfig config;
    std::uint64_t pairs_found = 0; // pairs this instance reported
    std::uint64_t new_pairs = 0;   // not reported by any earlier (more similar) instance
    double wall_ms = 0.0;
};

struct CloneReport {
    std::vector<ClonePair> pairs; // deduplicated, ordered by (block_a, block_b)
    std::vector<InstanceStats> per_instance;
    std::uint64_t total_blocks = 0;
    RunMode mode = RunMode::single;
    double total_wall_ms = 0.0;
};

// Deduplicated union of per-instance result sets. The same unordered id pair
// reported by several instances collapses into one ClonePair whose found_by
// is the union of the reporting instance indices; differing similarity
// values for one pair mean the instances disagree about the same two bags,
// which is an engine bug and reported as such.
inline std::vector<ClonePair> merge(
    const std::vector<std::pair<std::uint32_t, std::vector<ClonePair>>>& results) {
    std::map<std::pair<std::uint64_t, std::uint64_t>, ClonePair> merged;
    for (const auto& [instance, pairs] : results) {
        for (const ClonePair& p : pairs) {
            auto key = std::make_pair(p.block_a, p.block_b);
            auto it = merged.find(key);
            if (it == merged.end()) {
                ClonePair q = p;
                q.found_by = {instance};
                merged.emplace(key, std::move(q));
            } else {
                if (it->second.sim != p.sim)
                    throw orchestrator_error(
                        "ConflictingSimilarity(" + std::to_string(p.block_a) + ", " +
                        std::to_string(p.block_b) + "): " + std::to_string(it->second.sim) +
                        " vs " + std::to_string(p.sim));
                it->second.found_by.push_back(instance);
            }
        }
    }
    std::vector<ClonePair> out;
    out.reserve(merged.size());
    for (auto& [key, pair] : merged) {
        std::sort(pair.found_by.begin(), pair.found_by.end());
        pair.found_by.erase(std::unique(pair.found_by.begin(), pair.found_by.end()),
                            pair.found_by.end());
        out.push_back(std::move(pair));
    }
    return out; // map iteration is already (block_a, block_b) order
}

// Runs a whole parametric-curve detection over one corpus.
//   single          - only the first config, upper bound stripped
//   curve-raw       - every config, upper bounds stripped
//   curve-optimized - every config, upper bounds taken from the curve or
//                     derived on the fly when absent
// Instances run concurrently up to `parallelism`; results are merged in
// instance order so the report does not depend on scheduling.
inline CloneReport run_curve(std::span<const CodeBlock> blocks, const ParametricCurve& curve,
                             RunMode mode, unsigned parallelism = 1) {
    ValidationResult v = validate(curve);
    if (!v.ok())
        throw orchestrator_error(v.message());

    ParametricCurve effective;
    switch (mode) {
    case RunMode::single:
        effective.configs = {curve.configs.front()};
        effective.configs[0].utlt.reset();
        break;
    case RunMode::curve_raw:
        effective = strip_upper_bounds(curve);
        break;
    case RunMode::curve_optimized: {
        bool any_bounded = false;
        for (const SearchConfig& c : curve.configs)
            if (c.utlt)
                any_bounded = true;
        effective = any_bounded ? curve : apply_upper_bounds(curve);
        break;
    }
    }

    const std::size_t n = effective.configs.size();
    std::vector<std::vector<ClonePair>> results(n);
    std::vector<double> instance_ms(n, 0.0);

    auto run_one = [&](std::size_t i) {
        auto t0 = std::chrono::steady_clock::now();
        results[i] = run_instance(blocks, effective.configs[i], static_cast<std::uint32_t>(i));
        instance_ms[i] =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                .count();
    };

    auto t_start = std::chrono::steady_clock::now();
    if (parallelism <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i)
            run_one(i);
    } else {
        std::atomic<std::size_t> next{0};
        unsigned workers = static_cast<unsigned>(std::min<std::size_t>(parallelism, n));
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                while (true) {
                    std::size_t i = next.fetch_add(1);
                    if (i >= n)
                        return;
                    run_one(i);
                }
            });
        for (std::thread& t : pool)
            t.join();
    }

    std::vector<std::pair<std::uint32_t, std::vector<ClonePair>>> numbered;
    numbered.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        numbered.emplace_back(static_cast<std::uint32_t>(i), std::move(results[i]));

    CloneReport report;
    report.pairs = merge(numbered);
    report.mode = mode;
    report.total_blocks = blocks.size();
    report.total_wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_start)
            .count();

    report.per_instance.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        report.per_instance[i].config = effective.configs[i];
        report.per_instance[i].pairs_found = numbered[i].second.size();
        report.per_instance[i].wall_ms = instance_ms[i];
    }
    for (const ClonePair& p : report.pairs)
        report.per_instance[p.found_by.front()].new_pairs += 1;
    return report;
}

struct OverlapStats {
    std::uint64_t redundant_detections = 0; // sum over pairs of (|found_by| - 1)
    double redundancy_ratio = 0.0;          // redundant / total detections
};

inline OverlapStats overlap_stats(const CloneReport& report) {
    OverlapStats s;
    std::uint64_t detections = 0;
    for (const ClonePair& p : report.pairs) {
        s.redundant_detections += p.found_by.size() - 1;
        detections += p.found_by.size();
    }
    s.redundancy_ratio =
        detections == 0 ? 0.0 : static_cast<double>(s.redundant_detections) / detections;
    return s;
}

} // namespace clonecurve
