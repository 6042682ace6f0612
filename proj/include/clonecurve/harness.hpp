#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "clonecurve/blocks.hpp"
#include "clonecurve/curve.hpp"
#include "clonecurve/engine.hpp"
#include "clonecurve/orchestrator.hpp"

namespace clonecurve {

class harness_error : public error {
public:
    using error::error;
};

// Reference detector: checks every pair of in-range blocks directly against
// the similarity definition, no index, no candidate pruning. This is what
// run_instance is measured against; it recomputes overlaps from the token
// strings themselves and shares nothing with the engine's interned path.
inline std::vector<ClonePair> oracle_detect(std::span<const CodeBlock> blocks,
                                            const SearchConfig& cfg, bool allow_large = false) {
    std::vector<const CodeBlock*> in_range;
    for (const CodeBlock& b : blocks)
        if (in_length_range(cfg, b.size))
            in_range.push_back(&b);
    if (in_range.size() > 2000 && !allow_large)
        throw harness_error("CorpusTooLarge(" + std::to_string(in_range.size()) +
                            "): oracle_detect is quadratic; pass allow_large to override");
    std::sort(in_range.begin(), in_range.end(),
              [](const CodeBlock* a, const CodeBlock* b) { return a->id < b->id; });
    const std::size_t n = in_range.size();

    // flatten each bag into its (already sorted) entry sequence once
    using Entry = std::pair<std::string_view, std::uint32_t>;
    std::vector<std::vector<Entry>> flat(n);
    for (std::size_t i = 0; i < n; ++i) {
        flat[i].reserve(in_range[i]->bag.entries().size());
        for (const auto& [tok, cnt] : in_range[i]->bag.entries())
            flat[i].emplace_back(tok, cnt);
    }

    auto check_row = [&](std::size_t i, std::vector<ClonePair>& out) {
        const CodeBlock& a = *in_range[i];
        for (std::size_t j = i + 1; j < n; ++j) {
            const CodeBlock& b = *in_range[j];
            std::uint64_t overlap = 0;
            std::size_t x = 0, y = 0;
            while (x < flat[i].size() && y < flat[j].size()) {
                int cmp = flat[i][x].first.compare(flat[j][y].first);
                if (cmp < 0)
                    ++x;
                else if (cmp > 0)
                    ++y;
                else {
                    overlap += std::min(flat[i][x].second, flat[j][y].second);
                    ++x;
                    ++y;
                }
            }
            std::uint64_t larger = std::max(a.size, b.size);
            permille sim = static_cast<permille>(overlap * 1000 / larger);
            if (sim >= cfg.st)
                out.push_back({a.id, b.id, sim, std::min(a.size, b.size), {}});
        }
    };

    std::vector<ClonePair> pairs;
    unsigned hw = std::thread::hardware_concurrency();
    if (n >= 128 && hw >= 2) {
        unsigned workers = std::min(hw, 4u);
        std::vector<std::vector<ClonePair>> parts(workers);
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                // stride over rows so the triangular workload balances
                for (std::size_t i = w; i < n; i += workers)
                    check_row(i, parts[w]);
            });
        for (std::thread& t : pool)
            t.join();
        for (auto& part : parts)
            pairs.insert(pairs.end(), part.begin(), part.end());
    } else {
        for (std::size_t i = 0; i < n; ++i)
            check_row(i, pairs);
    }
    std::sort(pairs.begin(), pairs.end(), pair_id_less);
    return pairs;
}

// Deterministic RNG helpers. std::mt19937_64 has a standard-specified output
// sequence and the bounded draws below avoid std::uniform_int_distribution,
// whose mapping is implementation-defined; the same GenSpec therefore yields
// byte-identical corpora on any platform.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next() { return gen_(); }

    std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : next() % n; }

    std::uint64_t range(std::uint64_t lo, std::uint64_t hi) { // inclusive
        return lo + below(hi - lo + 1);
    }

    double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
    std::mt19937_64 gen_;
};

struct GenSpec {
    std::uint64_t seed = 0;
    std::uint32_t n_blocks = 0;
    std::uint32_t size_min = 19;
    std::uint32_t size_max = 500;
    std::uint32_t vocab_size = 64;
    double clone_fraction = 0.3;  // fraction of blocks that are injected clone partners
    double mutation_min = 0.0;    // fraction of a partner's tokens replaced
    double mutation_max = 0.5;
};

struct GroundTruthPair {
    std::uint64_t id_a = 0; // always < id_b
    std::uint64_t id_b = 0;
    permille intended = 0;

    friend bool operator==(const GroundTruthPair&, const GroundTruthPair&) = default;
};

struct GeneratedCorpus {
    std::vector<CodeBlock> blocks;
    std::vector<GroundTruthPair> ground_truth;
};

inline void validate_gen_spec(const GenSpec& spec) {
    if (spec.size_min < 1 || spec.size_max < spec.size_min)
        throw harness_error("InvalidGenSpec: size range must satisfy 1 <= min <= max");
    if (spec.vocab_size < 1)
        throw harness_error("InvalidGenSpec: vocab_size must be >= 1");
    if (spec.clone_fraction < 0.0 || spec.clone_fraction > 1.0)
        throw harness_error("InvalidGenSpec: clone_fraction must be in [0, 1]");
    if (spec.mutation_min < 0.0 || spec.mutation_max > 1.0 || spec.mutation_max < spec.mutation_min)
        throw harness_error("InvalidGenSpec: mutation range must satisfy 0 <= min <= max <= 1");
}

// Synthetic corpus with injected clone pairs. Base blocks draw their tokens
// from a shared vocabulary (so coincidental cross-size similarity exists,
// like in real corpora); each clone partner copies a base block and replaces
// a sampled fraction of token positions with globally fresh symbols, which
// pins the pair's similarity exactly: replacing k of s tokens leaves an
// overlap of s - k.
inline GeneratedCorpus generate_corpus(const GenSpec& spec) {
    validate_gen_spec(spec);
    SeededRng rng(spec.seed);
    GeneratedCorpus out;
    if (spec.n_blocks == 0)
        return out;

    const std::uint32_t n_clones = static_cast<std::uint32_t>(
        std::floor(spec.clone_fraction * static_cast<double>(spec.n_blocks)));
    const std::uint32_t n_base = spec.n_blocks - n_clones;
    if (n_base == 0)
        throw harness_error("InvalidGenSpec: clone_fraction leaves no base blocks to clone");

    auto make_path = [](std::uint64_t id) {
        std::string num = std::to_string(id);
        return "synthetic/" + std::string(6 - std::min<std::size_t>(6, num.size()), '0') + num;
    };

    std::vector<std::vector<std::uint32_t>> base_tokens(n_base);
    std::uint64_t next_id = 0;
    for (std::uint32_t b = 0; b < n_base; ++b) {
        std::uint64_t size = rng.range(spec.size_min, spec.size_max);
        auto& toks = base_tokens[b];
        toks.reserve(size);
        for (std::uint64_t k = 0; k < size; ++k)
            toks.push_back(static_cast<std::uint32_t>(rng.below(spec.vocab_size)));
        CodeBlock blk;
        blk.id = next_id++;
        blk.file_path = make_path(blk.id);
        for (std::uint32_t t : toks)
            blk.bag.add("t" + std::to_string(t));
        blk.size = blk.bag.total();
        out.blocks.push_back(std::move(blk));
    }

    std::uint64_t fresh_counter = 0;
    for (std::uint32_t c = 0; c < n_clones; ++c) {
        std::uint64_t base_idx = rng.below(n_base);
        const auto& src = base_tokens[base_idx];
        const std::uint64_t size = src.size();
        double frac = spec.mutation_min + rng.unit() * (spec.mutation_max - spec.mutation_min);
        std::uint64_t replace = std::min<std::uint64_t>(
            size, static_cast<std::uint64_t>(std::llround(frac * static_cast<double>(size))));

        // choose `replace` distinct positions (partial Fisher-Yates)
        std::vector<std::uint64_t> positions(size);
        for (std::uint64_t k = 0; k < size; ++k)
            positions[k] = k;
        for (std::uint64_t k = 0; k < replace; ++k)
            std::swap(positions[k], positions[k + rng.below(size - k)]);
        std::vector<bool> replaced(size, false);
        for (std::uint64_t k = 0; k < replace; ++k)
            replaced[positions[k]] = true;

        CodeBlock blk;
        blk.id = next_id++;
        blk.file_path = make_path(blk.id);
        for (std::uint64_t k = 0; k < size; ++k) {
            if (replaced[k])
                blk.bag.add("u" + std::to_string(fresh_counter++));
            else
                blk.bag.add("t" + std::to_string(src[k]));
        }
        blk.size = blk.bag.total();

        GroundTruthPair gt;
        gt.id_a = out.blocks[base_idx].id;
        gt.id_b = blk.id;
        gt.intended = static_cast<permille>((size - replace) * 1000 / size);
        out.ground_truth.push_back(gt);
        out.blocks.push_back(std::move(blk));
    }
    return out;
}

struct Score {
    double recall = 1.0;
    double precision_lower_bound = 1.0;
};

// Recall counts only ground-truth pairs whose (min_size, similarity)
// coordinates fall inside some instance's raw rectangle (st, ltlt); pairs
// outside every rectangle are undetectable by construction. Precision is a
// lower bound because coincidental clones that were not injected count
// against it.
inline Score score(const CloneReport& report, std::span<const GroundTruthPair> ground_truth,
                   std::span<const CodeBlock> blocks) {
    std::unordered_map<std::uint64_t, const CodeBlock*> by_id;
    for (const CodeBlock& b : blocks)
        by_id[b.id] = &b;

    struct PairHash {
        std::size_t operator()(const std::pair<std::uint64_t, std::uint64_t>& p) const {
            return std::hash<std::uint64_t>()(p.first * 0x9e3779b97f4a7c15ULL ^ p.second);
        }
    };
    std::unordered_set<std::pair<std::uint64_t, std::uint64_t>, PairHash> detected;
    for (const ClonePair& p : report.pairs)
        detected.insert({p.block_a, p.block_b});

    std::unordered_set<std::pair<std::uint64_t, std::uint64_t>, PairHash> truth;
    std::uint64_t in_region = 0;
    std::uint64_t in_region_detected = 0;
    for (const GroundTruthPair& gt : ground_truth) {
        auto ia = by_id.find(gt.id_a);
        auto ib = by_id.find(gt.id_b);
        if (ia == by_id.end() || ib == by_id.end())
            throw harness_error("UnknownBlockId(" + std::to_string(ia == by_id.end() ? gt.id_a : gt.id_b) + ")");
        auto key = std::minmax(gt.id_a, gt.id_b);
        truth.insert({key.first, key.second});
        permille sim = similarity(ia->second->bag, ib->second->bag);
        std::uint64_t min_size = std::min(ia->second->size, ib->second->size);
        bool covered = false;
        for (const InstanceStats& inst : report.per_instance)
            if (sim >= inst.config.st && min_size >= inst.config.ltlt) {
                covered = true;
                break;
            }
        if (!covered)
            continue;
        ++in_region;
        if (detected.count({key.first, key.second}))
            ++in_region_detected;
    }

    Score s;
    s.recall = in_region == 0 ? 1.0
                              : static_cast<double>(in_region_detected) / static_cast<double>(in_region);
    if (!report.pairs.empty()) {
        std::uint64_t hits = 0;
        for (const ClonePair& p : report.pairs)
            if (truth.count({p.block_a, p.block_b}))
                ++hits;
        s.precision_lower_bound = static_cast<double>(hits) / static_cast<double>(report.pairs.size());
    }
    return s;
}

struct LabeledPair {
    std::uint64_t min_size = 0;
    permille similarity = 0;
    bool is_clone = false;
};

struct CalibrationResult {
    ParametricCurve curve;
    std::vector<std::string> warnings;
};

// The default sweep grid: 80% down to 50% in 1% steps.
inline std::vector<permille> default_st_grid() {
    std::vector<permille> grid;
    for (permille st = 800; st >= 500; st -= 10)
        grid.push_back(st);
    return grid;
}

// Sweeps the similarity grid top-down and picks, for every threshold, the
// smallest lower length bound that keeps precision at or above the target
// among the pairs not already claimed by a more similar step. Adjacent steps
// that land on the same bound collapse into the less similar one, which
// subsumes the other's region. The returned curve is validated and carries
// derived upper bounds.
inline CalibrationResult calibrate_curve(std::span<const LabeledPair> pairs,
                                         std::span<const permille> st_grid,
                                         double target_precision, std::uint32_t min_ltlt) {
    if (pairs.empty())
        throw harness_error("EmptyInput: calibration needs at least one labeled pair");
    if (st_grid.empty())
        throw harness_error("EmptyGrid: calibration needs at least one similarity threshold");
    for (std::size_t i = 0; i < st_grid.size(); ++i) {
        if (st_grid[i] < 1 || st_grid[i] > 1000)
            throw harness_error("OutOfRange(" + std::to_string(i) + ", st_grid)");
        if (i > 0 && st_grid[i] >= st_grid[i - 1])
            throw harness_error("NonMonotoneST(" + std::to_string(i) + "): grid must strictly descend");
    }
    if (!(target_precision > 0.0) || target_precision > 1.0)
        throw harness_error("OutOfRange(0, target_precision)");
    if (min_ltlt < 1)
        throw harness_error("OutOfRange(0, min_ltlt)");

    CalibrationResult result;
    std::vector<bool> attributed(pairs.size(), false);
    std::vector<SearchConfig> retained;
    // exact feasibility check: trues/total >= target, no float boundary noise
    const std::uint64_t target_nano =
        static_cast<std::uint64_t>(std::llround(target_precision * 1e9));
    auto precise = [target_nano](std::uint64_t trues, std::uint64_t total) {
        return trues * 1000000000ULL >= target_nano * total;
    };

    for (permille st : st_grid) {
        std::vector<std::size_t> step; // candidate pairs for this threshold
        for (std::size_t i = 0; i < pairs.size(); ++i)
            if (!attributed[i] && pairs[i].similarity >= st)
                step.push_back(i);

        std::sort(step.begin(), step.end(), [&](std::size_t a, std::size_t b) {
            return pairs[a].min_size > pairs[b].min_size;
        });

        // Candidate bounds are the observed pair sizes plus the floor itself,
        // walked from the largest size down; pairs below the floor never count.
        // The chosen bound is the smallest candidate whose suffix stays precise.
        bool found = false;
        std::uint64_t best = 0;
        std::uint64_t trues = 0, total = 0;
        std::size_t i = 0;
        while (i < step.size() && pairs[step[i]].min_size >= min_ltlt) {
            std::uint64_t size = pairs[step[i]].min_size;
            while (i < step.size() && pairs[step[i]].min_size == size) {
                trues += pairs[step[i]].is_clone ? 1 : 0;
                ++total;
                ++i;
            }
            if (precise(trues, total)) {
                best = size;
                found = true;
            }
        }
        if (total == 0) {
            // no evidence at or above the floor; vacuously precise down to it
            best = min_ltlt;
            found = true;
        } else if (precise(trues, total)) {
            // the floor covers the same observed pairs as the smallest size above it
            best = min_ltlt;
            found = true;
        }
        if (!found) {
            result.warnings.push_back("NoFeasibleLTLT(" + std::to_string(st) +
                                      "): no length bound reaches the precision target");
            continue;
        }
        std::uint32_t chosen = static_cast<std::uint32_t>(best);

        // a less similar step that reaches the same (or a lower) bound makes the
        // previous configs redundant: their whole region is inside this one
        while (!retained.empty() && retained.back().ltlt >= chosen)
            retained.pop_back();
        retained.push_back({st, chosen, std::nullopt});

        for (std::size_t i = 0; i < pairs.size(); ++i)
            if (!attributed[i] && pairs[i].similarity >= st && pairs[i].min_size >= chosen)
                attributed[i] = true;
    }

    if (retained.empty())
        throw harness_error("NoFeasibleLTLT(all): no similarity threshold admits a feasible length bound");

    ParametricCurve curve;
    curve.configs = std::move(retained);
    ValidationResult v = validate(curve);
    if (!v.ok())
        throw harness_error("CalibrationInvalid: " + v.message());
    result.curve = apply_upper_bounds(curve);
    return result;
}

} // namespace clonecurve
