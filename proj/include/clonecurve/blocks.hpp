#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>

#include "clonecurve/error.hpp"

namespace clonecurve {

// Multiset of normalized tokens. This is the unit of comparison for the
// whole engine: block order, whitespace and operators are already gone by
// the time text becomes a TokenBag. Entries are kept in a sorted map so
// every iteration over a bag is deterministic.
class TokenBag {
public:
    using map_type = std::map<std::string, std::uint32_t>;

    TokenBag() = default;

    void add(std::string_view token, std::uint32_t count = 1) {
        if (token.empty())
            throw error("EmptyToken: token strings must be non-empty");
        if (count == 0)
            throw error("ZeroCount: token counts must be positive");
        entries_[std::string(token)] += count;
        total_ += count;
    }

    const map_type& entries() const { return entries_; }

    // Sum of multiplicities, i.e. the block length L in tokens.
    std::uint64_t total() const { return total_; }

    bool empty() const { return entries_.empty(); }

    std::uint32_t count(std::string_view token) const {
        auto it = entries_.find(std::string(token));
        return it == entries_.end() ? 0 : it->second;
    }

    friend bool operator==(const TokenBag& a, const TokenBag& b) {
        return a.entries_ == b.entries_;
    }

private:
    map_type entries_;
    std::uint64_t total_ = 0;
};

// A contiguous code region (method or braced block) with provenance.
// `size` mirrors bag.total(); it is stored so that pure index/length math
// never has to touch the bag.
struct CodeBlock {
    std::uint64_t id = 0;
    std::string file_path;
    std::uint32_t start_line = 1;
    std::uint32_t end_line = 1;
    TokenBag bag;
    std::uint64_t size = 0;
};

enum class Language { java_like };

struct SourceFile {
    std::string path;
    std::string content;
    Language language = Language::java_like;
};

} // namespace clonecurve
