#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "clonecurve/blocks.hpp"
#include "clonecurve/curve.hpp"
#include "clonecurve/error.hpp"

namespace clonecurve {

class engine_error : public error {
public:
    using error::error;
};

// overlap = sum over tokens of min(count_a, count_b); similarity is the
// overlap divided by the larger bag's size, floored to permille. 1000 means
// the bags are equal as multisets.
inline permille similarity(const TokenBag& a, const TokenBag& b) {
    if (a.empty() || b.empty())
        throw engine_error("EmptyBag: similarity is undefined for empty bags");
    std::uint64_t overlap = 0;
    auto ia = a.entries().begin();
    auto ib = b.entries().begin();
    while (ia != a.entries().end() && ib != b.entries().end()) {
        int cmp = ia->first.compare(ib->first);
        if (cmp < 0)
            ++ia;
        else if (cmp > 0)
            ++ib;
        else {
            overlap += std::min(ia->second, ib->second);
            ++ia;
            ++ib;
        }
    }
    std::uint64_t larger = std::max(a.total(), b.total());
    return static_cast<permille>(overlap * 1000 / larger);
}

// An unordered pair of blocks that some search instance accepted, with the
// pair's coordinates in the (length, similarity) plane and the set of
// instances that reported it.
struct ClonePair {
    std::uint64_t block_a = 0; // always < block_b
    std::uint64_t block_b = 0;
    permille sim = 0;
    std::uint64_t min_size = 0;
    std::vector<std::uint32_t> found_by; // sorted, distinct instance indices

    friend bool operator==(const ClonePair&, const ClonePair&) = default;
};

inline bool pair_id_less(const ClonePair& x, const ClonePair& y) {
    return x.block_a != y.block_a ? x.block_a < y.block_a : x.block_b < y.block_b;
}

// minimum overlap a block of `size` tokens needs to reach `st`
inline std::uint64_t min_overlap(permille st, std::uint64_t size) {
    return (static_cast<std::uint64_t>(st) * size + 999) / 1000;
}

// number of token positions of a block that must be indexed so that every
// qualifying partner shares at least one indexed token
inline std::uint64_t index_prefix_length(permille st, std::uint64_t size) {
    return size - min_overlap(st, size) + 1;
}

inline bool in_length_range(const SearchConfig& cfg, std::uint64_t size) {
    return size >= cfg.ltlt && (!cfg.utlt || size <= *cfg.utlt);
}

namespace detail {

// Blocks of one search instance, re-encoded for fast pairwise work: tokens
// interned to dense ids, each block a (token, count) vector. `by_rank`
// orders each block's tokens rarest-first for prefix selection; `by_token`
// orders them by token id for linear-time overlap.
struct PreparedInstance {
    std::vector<const CodeBlock*> blocks; // in-range, ascending id
    std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> by_rank;
    std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> by_token;
    std::vector<std::uint64_t> prefix_len;
    std::uint32_t n_tokens = 0;
    std::vector<std::string> rank_to_token; // ascending corpus frequency
};

inline PreparedInstance prepare_instance(std::span<const CodeBlock> blocks, const SearchConfig& cfg) {
    PreparedInstance prep;
    for (const CodeBlock& b : blocks)
        if (in_length_range(cfg, b.size))
            prep.blocks.push_back(&b);
    std::sort(prep.blocks.begin(), prep.blocks.end(),
              [](const CodeBlock* a, const CodeBlock* b) { return a->id < b->id; });
    for (std::size_t i = 1; i < prep.blocks.size(); ++i)
        if (prep.blocks[i]->id == prep.blocks[i - 1]->id)
            throw engine_error("DuplicateBlockId(" + std::to_string(prep.blocks[i]->id) + ")");

    std::unordered_map<std::string_view, std::uint32_t> intern;
    std::vector<std::string_view> token_text;
    std::vector<std::uint64_t> freq;
    for (const CodeBlock* b : prep.blocks) {
        for (const auto& [tok, cnt] : b->bag.entries()) {
            auto [it, fresh] = intern.try_emplace(tok, static_cast<std::uint32_t>(token_text.size()));
            if (fresh) {
                token_text.push_back(tok);
                freq.push_back(0);
            }
            freq[it->second] += cnt;
        }
    }
    prep.n_tokens = static_cast<std::uint32_t>(token_text.size());

    // rank: ascending frequency, ties by token string
    std::vector<std::uint32_t> order(prep.n_tokens);
    for (std::uint32_t i = 0; i < prep.n_tokens; ++i)
        order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        if (freq[a] != freq[b])
            return freq[a] < freq[b];
        return token_text[a] < token_text[b];
    });
    std::vector<std::uint32_t> rank_of(prep.n_tokens);
    prep.rank_to_token.reserve(prep.n_tokens);
    for (std::uint32_t r = 0; r < prep.n_tokens; ++r) {
        rank_of[order[r]] = r;
        prep.rank_to_token.emplace_back(token_text[order[r]]);
    }

    prep.by_rank.resize(prep.blocks.size());
    prep.by_token.resize(prep.blocks.size());
    prep.prefix_len.resize(prep.blocks.size());
    for (std::size_t i = 0; i < prep.blocks.size(); ++i) {
        const CodeBlock* b = prep.blocks[i];
        auto& rk = prep.by_rank[i];
        rk.reserve(b->bag.entries().size());
        for (const auto& [tok, cnt] : b->bag.entries())
            rk.emplace_back(rank_of[intern.find(tok)->second], cnt);
        std::sort(rk.begin(), rk.end());
        auto& bt = prep.by_token[i];
        bt = rk; // token identity is the rank id from here on
        prep.prefix_len[i] = index_prefix_length(cfg.st, b->size);
    }
    return prep;
}

inline std::uint64_t overlap_interned(const std::vector<std::pair<std::uint32_t, std::uint32_t>>& a,
                                      const std::vector<std::pair<std::uint32_t, std::uint32_t>>& b) {
    std::uint64_t ov = 0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i].first < b[j].first)
            ++i;
        else if (a[i].first > b[j].first)
            ++j;
        else {
            ov += std::min(a[i].second, b[j].second);
            ++i;
            ++j;
        }
    }
    return ov;
}

} // namespace detail

// Partial inverted index over the in-range blocks of one search instance.
// Only each block's index prefix (its rarest size - ceil(st*size/1000) + 1
// token positions, multiplicity counted) is posted; that is enough for any
// qualifying pair to collide on at least one token.
struct TokenIndex {
    // token -> (block id, occurrences of the token inside the block's prefix),
    // posting lists ordered by block id
    std::map<std::string, std::vector<std::pair<std::uint64_t, std::uint32_t>>> postings;
    // ascending corpus frequency, ties by token string
    std::vector<std::string> token_rank;
};

inline TokenIndex build_index(std::span<const CodeBlock> blocks, const SearchConfig& cfg) {
    detail::PreparedInstance prep = detail::prepare_instance(blocks, cfg);
    TokenIndex index;
    index.token_rank = prep.rank_to_token;
    for (std::size_t i = 0; i < prep.blocks.size(); ++i) {
        std::uint64_t remaining = prep.prefix_len[i];
        for (const auto& [rank, cnt] : prep.by_rank[i]) {
            if (remaining == 0)
                break;
            std::uint32_t take = static_cast<std::uint32_t>(std::min<std::uint64_t>(cnt, remaining));
            index.postings[index.token_rank[rank]].emplace_back(prep.blocks[i]->id, take);
            remaining -= take;
        }
    }
    return index;
}

// Runs one search instance: every unordered pair of distinct in-range blocks
// whose bag similarity reaches cfg.st, found_by = {instance_index}. The
// prefix index and the length-ratio check only prune candidates; they never
// drop a qualifying pair, so the result set matches the brute-force
// definition exactly. Output is ordered by (block_a, block_b).
inline std::vector<ClonePair> run_instance(std::span<const CodeBlock> blocks, const SearchConfig& cfg,
                                           std::uint32_t instance_index) {
    ValidationResult v = validate(ParametricCurve{{cfg}});
    if (!v.ok())
        throw engine_error(v.message());

    detail::PreparedInstance prep = detail::prepare_instance(blocks, cfg);
    const std::size_t n = prep.blocks.size();

    // prefix postings over interned token ids, lists in ascending block order
    std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> postings(prep.n_tokens);
    for (std::size_t i = 0; i < n; ++i) {
        std::uint64_t remaining = prep.prefix_len[i];
        for (const auto& [rank, cnt] : prep.by_rank[i]) {
            if (remaining == 0)
                break;
            std::uint32_t take = static_cast<std::uint32_t>(std::min<std::uint64_t>(cnt, remaining));
            postings[rank].emplace_back(static_cast<std::uint32_t>(i), take);
            remaining -= take;
        }
    }

    std::vector<ClonePair> out;
    std::vector<std::uint32_t> stamp(n, 0);
    std::uint32_t generation = 0;
    std::vector<std::uint32_t> cands;

    for (std::size_t q = 0; q < n; ++q) {
        ++generation;
        cands.clear();
        std::uint64_t remaining = prep.prefix_len[q];
        for (const auto& [rank, cnt] : prep.by_rank[q]) {
            if (remaining == 0)
                break;
            remaining -= std::min<std::uint64_t>(cnt, remaining);
            for (const auto& [cand, take] : postings[rank]) {
                (void)take;
                if (cand >= q)
                    break; // lists are ascending; the rest are not earlier blocks
                if (stamp[cand] == generation)
                    continue;
                stamp[cand] = generation;
                cands.push_back(cand);
            }
        }
        const std::uint64_t size_q = prep.blocks[q]->size;
        for (std::uint32_t cand : cands) {
            const std::uint64_t size_c = prep.blocks[cand]->size;
            const std::uint64_t larger = std::max(size_q, size_c);
            const std::uint64_t smaller = std::min(size_q, size_c);
            if (smaller < min_overlap(cfg.st, larger))
                continue; // overlap can never reach the threshold
            std::uint64_t ov = detail::overlap_interned(prep.by_token[q], prep.by_token[cand]);
            permille sim = static_cast<permille>(ov * 1000 / larger);
            if (sim < cfg.st)
                continue;
            ClonePair pair;
            pair.block_a = std::min(prep.blocks[q]->id, prep.blocks[cand]->id);
            pair.block_b = std::max(prep.blocks[q]->id, prep.blocks[cand]->id);
            pair.sim = sim;
            pair.min_size = smaller;
            pair.found_by = {instance_index};
            out.push_back(std::move(pair));
        }
    }
    std::sort(out.begin(), out.end(), pair_id_less);
    return out;
}

} // namespace clonecurve
