#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "clonecurve/blocks.hpp"
#include "clonecurve/curve.hpp"
#include "clonecurve/harness.hpp"
#include "clonecurve/orchestrator.hpp"
#include "clonecurve/tokenizer.hpp"

namespace clonecurve {

// ---------------------------------------------------------------------------
// percent-encoding for tokens and paths inside the block file format
// ---------------------------------------------------------------------------

namespace detail {

inline bool needs_escape(char c) {
    return c == '%' || c == ',' || c == ';' || c == ':' || c == '@' || c == '\n' || c == '\r';
}

inline char hex_digit(unsigned v) { return v < 10 ? static_cast<char>('0' + v) : static_cast<char>('A' + v - 10); }

inline int hex_value(char c) {
    if (c >= '0' && c <= '9')
        return c - '0';
    if (c >= 'A' && c <= 'F')
        return c - 'A' + 10;
    if (c >= 'a' && c <= 'f')
        return c - 'a' + 10;
    return -1;
}

} // namespace detail

inline std::string percent_encode(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        if (detail::needs_escape(c)) {
            unsigned char u = static_cast<unsigned char>(c);
            out.push_back('%');
            out.push_back(detail::hex_digit(u >> 4));
            out.push_back(detail::hex_digit(u & 0xF));
        } else {
            out.push_back(c);
        }
    }
    return out;
}

inline std::string percent_decode(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '%') {
            if (i + 2 >= s.size())
                throw parse_error("BadEscape: truncated percent escape");
            int hi = detail::hex_value(s[i + 1]);
            int lo = detail::hex_value(s[i + 2]);
            if (hi < 0 || lo < 0)
                throw parse_error("BadEscape: invalid percent escape '" +
                                  std::string(s.substr(i, 3)) + "'");
            out.push_back(static_cast<char>((hi << 4) | lo));
            i += 2;
        } else {
            out.push_back(s[i]);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// pre-tokenized block file:
//   <id>,<file_path>,<start_line>,<end_line>,<size>@#@<token>:<count>;...
// one block per line, tokens and path percent-encoded
// ---------------------------------------------------------------------------

inline std::string format_block_line(const CodeBlock& b) {
    std::string line = std::to_string(b.id) + ',' + percent_encode(b.file_path) + ',' +
                       std::to_string(b.start_line) + ',' + std::to_string(b.end_line) + ',' +
                       std::to_string(b.size) + "@#@";
    bool first = true;
    for (const auto& [tok, cnt] : b.bag.entries()) {
        if (!first)
            line.push_back(';');
        first = false;
        line += percent_encode(tok);
        line.push_back(':');
        line += std::to_string(cnt);
    }
    return line;
}

inline void write_block_file(std::ostream& out, std::span<const CodeBlock> blocks) {
    for (const CodeBlock& b : blocks)
        out << format_block_line(b) << '\n';
}

inline void write_block_file(const std::filesystem::path& path, std::span<const CodeBlock> blocks) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw io_error("CannotWrite(" + path.string() + ")");
    write_block_file(out, blocks);
}

inline CodeBlock parse_block_line(std::string_view line, std::size_t lineno) {
    auto fail = [lineno](const std::string& why) -> parse_error {
        return parse_error("BadBlockLine(line " + std::to_string(lineno) + "): " + why);
    };
    std::size_t sep = line.find("@#@");
    if (sep == std::string_view::npos)
        throw fail("missing '@#@' separator");
    std::string_view head = line.substr(0, sep);
    std::string_view tail = line.substr(sep + 3);

    // id , path , start , end , size  -- the path field is encoded, so the
    // first and the last three commas delimit it unambiguously
    std::size_t c1 = head.find(',');
    if (c1 == std::string_view::npos)
        throw fail("missing fields before '@#@'");
    std::size_t c5 = head.rfind(',');
    std::size_t c4 = c5 == std::string_view::npos ? std::string_view::npos : head.rfind(',', c5 - 1);
    std::size_t c3 = c4 == std::string_view::npos || c4 == 0 ? std::string_view::npos
                                                             : head.rfind(',', c4 - 1);
    if (c3 == std::string_view::npos || c3 <= c1)
        throw fail("expected 5 comma-separated header fields");

    auto parse_u64 = [&fail](std::string_view s, const char* what) {
        if (s.empty())
            throw fail(std::string("empty ") + what);
        std::uint64_t v = 0;
        for (char c : s) {
            if (c < '0' || c > '9')
                throw fail(std::string("non-numeric ") + what + " '" + std::string(s) + "'");
            v = v * 10 + static_cast<std::uint64_t>(c - '0');
        }
        return v;
    };

    CodeBlock b;
    b.id = parse_u64(head.substr(0, c1), "id");
    b.file_path = percent_decode(head.substr(c1 + 1, c3 - c1 - 1));
    b.start_line = static_cast<std::uint32_t>(parse_u64(head.substr(c3 + 1, c4 - c3 - 1), "start_line"));
    b.end_line = static_cast<std::uint32_t>(parse_u64(head.substr(c4 + 1, c5 - c4 - 1), "end_line"));
    std::uint64_t declared_size = parse_u64(head.substr(c5 + 1), "size");

    std::size_t pos = 0;
    while (pos <= tail.size() && !tail.empty()) {
        std::size_t end = tail.find(';', pos);
        std::string_view entry = tail.substr(pos, end == std::string_view::npos ? std::string_view::npos
                                                                                : end - pos);
        if (!entry.empty()) {
            std::size_t colon = entry.rfind(':');
            if (colon == std::string_view::npos)
                throw fail("token entry without count: '" + std::string(entry) + "'");
            std::string tok = percent_decode(entry.substr(0, colon));
            std::uint64_t cnt = parse_u64(entry.substr(colon + 1), "count");
            if (tok.empty())
                throw fail("empty token");
            if (cnt == 0)
                throw fail("zero token count");
            b.bag.add(tok, static_cast<std::uint32_t>(cnt));
        }
        if (end == std::string_view::npos)
            break;
        pos = end + 1;
    }
    b.size = b.bag.total();
    if (b.size != declared_size)
        throw fail("declared size " + std::to_string(declared_size) + " != token total " +
                   std::to_string(b.size));
    if (b.size < 1)
        throw fail("blocks must contain at least one token");
    if (b.start_line < 1 || b.end_line < b.start_line)
        throw fail("bad line range");
    return b;
}

inline std::vector<CodeBlock> read_block_file(std::istream& in) {
    std::vector<CodeBlock> blocks;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        blocks.push_back(parse_block_line(line, lineno));
    }
    std::vector<std::uint64_t> ids;
    ids.reserve(blocks.size());
    for (const CodeBlock& b : blocks)
        ids.push_back(b.id);
    std::sort(ids.begin(), ids.end());
    for (std::size_t i = 1; i < ids.size(); ++i)
        if (ids[i] == ids[i - 1])
            throw parse_error("DuplicateBlockId(" + std::to_string(ids[i]) + ")");
    return blocks;
}

inline std::vector<CodeBlock> read_block_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw io_error("CannotRead(" + path.string() + ")");
    return read_block_file(in);
}

// ---------------------------------------------------------------------------
// curve file: one `st_permille,ltlt[,utlt]` per line, '#' comments
// ---------------------------------------------------------------------------

inline std::string format_curve(const ParametricCurve& curve) {
    std::string out;
    for (const SearchConfig& c : curve.configs) {
        out += std::to_string(c.st) + ',' + std::to_string(c.ltlt);
        if (c.utlt)
            out += ',' + std::to_string(*c.utlt);
        out.push_back('\n');
    }
    return out;
}

inline ParametricCurve parse_curve(std::istream& in) {
    ParametricCurve curve;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos)
            line.resize(hash);
        // trim
        std::size_t b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos)
            continue;
        std::size_t e = line.find_last_not_of(" \t\r");
        std::string_view body(line.data() + b, e - b + 1);

        SearchConfig cfg;
        std::vector<std::string_view> fields;
        std::size_t pos = 0;
        while (true) {
            std::size_t comma = body.find(',', pos);
            fields.push_back(body.substr(pos, comma == std::string_view::npos ? std::string_view::npos
                                                                              : comma - pos));
            if (comma == std::string_view::npos)
                break;
            pos = comma + 1;
        }
        if (fields.size() < 2 || fields.size() > 3)
            throw parse_error("BadCurveLine(line " + std::to_string(lineno) +
                              "): expected st,ltlt[,utlt]");
        auto to_int = [lineno](std::string_view s) {
            if (s.empty())
                throw parse_error("BadCurveLine(line " + std::to_string(lineno) + "): empty field");
            std::int64_t v = 0;
            for (char c : s) {
                if (c == ' ' || c == '\t')
                    continue;
                if (c < '0' || c > '9')
                    throw parse_error("BadCurveLine(line " + std::to_string(lineno) +
                                      "): non-numeric field '" + std::string(s) + "'");
                v = v * 10 + (c - '0');
                if (v > 100000000)
                    throw parse_error("BadCurveLine(line " + std::to_string(lineno) +
                                      "): value out of range");
            }
            return v;
        };
        cfg.st = static_cast<permille>(to_int(fields[0]));
        cfg.ltlt = static_cast<std::uint32_t>(to_int(fields[1]));
        if (fields.size() == 3)
            cfg.utlt = static_cast<std::uint32_t>(to_int(fields[2]));
        curve.configs.push_back(cfg);
    }
    return curve;
}

inline ParametricCurve read_curve_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw io_error("CannotRead(" + path.string() + ")");
    return parse_curve(in);
}

// ---------------------------------------------------------------------------
// labeled-pair CSV (`min_size,similarity_permille,label`) and ground-truth
// CSV (`id_a,id_b,intended_similarity_permille`); header lines optional
// ---------------------------------------------------------------------------

inline std::vector<LabeledPair> read_labeled_pairs(std::istream& in) {
    std::vector<LabeledPair> pairs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        if (line[0] < '0' || line[0] > '9') {
            if (lineno == 1)
                continue; // header
            throw parse_error("BadLabeledPair(line " + std::to_string(lineno) + ")");
        }
        std::uint64_t min_size = 0;
        long sim = 0;
        int label = -1;
        char c1 = 0, c2 = 0;
        std::istringstream ss(line);
        ss >> min_size >> c1 >> sim >> c2 >> label;
        if (!ss || c1 != ',' || c2 != ',' || (label != 0 && label != 1) || sim < 0 || sim > 1000 ||
            min_size < 1)
            throw parse_error("BadLabeledPair(line " + std::to_string(lineno) + "): '" + line + "'");
        pairs.push_back({min_size, static_cast<permille>(sim), label == 1});
    }
    return pairs;
}

inline std::vector<LabeledPair> read_labeled_pairs(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw io_error("CannotRead(" + path.string() + ")");
    return read_labeled_pairs(in);
}

inline void write_labeled_pairs(std::ostream& out, std::span<const LabeledPair> pairs) {
    out << "min_size,similarity_permille,label\n";
    for (const LabeledPair& p : pairs)
        out << p.min_size << ',' << p.similarity << ',' << (p.is_clone ? 1 : 0) << '\n';
}

inline void write_ground_truth(std::ostream& out, std::span<const GroundTruthPair> truth) {
    out << "id_a,id_b,intended_similarity_permille\n";
    for (const GroundTruthPair& gt : truth)
        out << gt.id_a << ',' << gt.id_b << ',' << gt.intended << '\n';
}

inline void write_ground_truth(const std::filesystem::path& path,
                               std::span<const GroundTruthPair> truth) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw io_error("CannotWrite(" + path.string() + ")");
    write_ground_truth(out, truth);
}

inline std::vector<GroundTruthPair> read_ground_truth(std::istream& in) {
    std::vector<GroundTruthPair> truth;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        if (line[0] < '0' || line[0] > '9') {
            if (lineno == 1)
                continue;
            throw parse_error("BadGroundTruth(line " + std::to_string(lineno) + ")");
        }
        GroundTruthPair gt;
        long sim = 0;
        char c1 = 0, c2 = 0;
        std::istringstream ss(line);
        ss >> gt.id_a >> c1 >> gt.id_b >> c2 >> sim;
        if (!ss || c1 != ',' || c2 != ',' || sim < 0 || sim > 1000)
            throw parse_error("BadGroundTruth(line " + std::to_string(lineno) + "): '" + line + "'");
        gt.intended = static_cast<permille>(sim);
        if (gt.id_a > gt.id_b)
            std::swap(gt.id_a, gt.id_b);
        truth.push_back(gt);
    }
    return truth;
}

inline std::vector<GroundTruthPair> read_ground_truth(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw io_error("CannotRead(" + path.string() + ")");
    return read_ground_truth(in);
}

// ---------------------------------------------------------------------------
// report exports: pair CSV, scatter CSV, JSON
// ---------------------------------------------------------------------------

namespace detail {

inline std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\n\r") == std::string_view::npos)
        return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"')
            out += "\"\"";
        else
            out.push_back(c);
    }
    out.push_back('"');
    return out;
}

} // namespace detail

inline void write_pair_csv(std::ostream& out, const CloneReport& report,
                           std::span<const CodeBlock> blocks) {
    std::unordered_map<std::uint64_t, const CodeBlock*> by_id;
    for (const CodeBlock& b : blocks)
        by_id[b.id] = &b;
    out << "file_a,start_a,end_a,file_b,start_b,end_b,similarity_permille,min_size,found_by\n";
    for (const ClonePair& p : report.pairs) {
        auto ia = by_id.find(p.block_a);
        auto ib = by_id.find(p.block_b);
        if (ia == by_id.end() || ib == by_id.end())
            throw io_error("UnknownBlockId(" +
                           std::to_string(ia == by_id.end() ? p.block_a : p.block_b) + ")");
        const CodeBlock& a = *ia->second;
        const CodeBlock& b = *ib->second;
        out << detail::csv_field(a.file_path) << ',' << a.start_line << ',' << a.end_line << ','
            << detail::csv_field(b.file_path) << ',' << b.start_line << ',' << b.end_line << ','
            << p.sim << ',' << p.min_size << ',';
        for (std::size_t i = 0; i < p.found_by.size(); ++i) {
            if (i)
                out << '|';
            out << p.found_by[i];
        }
        out << '\n';
    }
}

inline void write_scatter_csv(std::ostream& out, const CloneReport& report) {
    out << "min_size,similarity_permille\n";
    for (const ClonePair& p : report.pairs)
        out << p.min_size << ',' << p.sim << '\n';
}

// JSON mirror of a CloneReport. The schema is fixed and every value is a
// number, a mode name or an instance list, so the emitter stays hand-rolled.
inline void write_json_report(std::ostream& out, const CloneReport& report,
                              double tokenization_ms = 0.0) {
    auto ms = [](double v) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.3f", v);
        return std::string(buf);
    };
    OverlapStats stats = overlap_stats(report);
    out << "{\n";
    out << "  \"mode\": \"" << to_string(report.mode) << "\",\n";
    out << "  \"total_blocks\": " << report.total_blocks << ",\n";
    out << "  \"pair_count\": " << report.pairs.size() << ",\n";
    out << "  \"tokenization_ms\": " << ms(tokenization_ms) << ",\n";
    out << "  \"detection_ms\": " << ms(report.total_wall_ms) << ",\n";
    out << "  \"redundant_detections\": " << stats.redundant_detections << ",\n";
    char ratio[64];
    std::snprintf(ratio, sizeof ratio, "%.6f", stats.redundancy_ratio);
    out << "  \"redundancy_ratio\": " << ratio << ",\n";
    out << "  \"per_instance\": [\n";
    for (std::size_t i = 0; i < report.per_instance.size(); ++i) {
        const InstanceStats& inst = report.per_instance[i];
        out << "    {\"index\": " << i << ", \"st\": " << inst.config.st
            << ", \"ltlt\": " << inst.config.ltlt << ", \"utlt\": ";
        if (inst.config.utlt)
            out << *inst.config.utlt;
        else
            out << "null";
        out << ", \"pairs_found\": " << inst.pairs_found << ", \"new_pairs\": " << inst.new_pairs
            << ", \"wall_ms\": " << ms(inst.wall_ms) << "}";
        out << (i + 1 < report.per_instance.size() ? ",\n" : "\n");
    }
    out << "  ],\n";
    out << "  \"pairs\": [\n";
    for (std::size_t i = 0; i < report.pairs.size(); ++i) {
        const ClonePair& p = report.pairs[i];
        out << "    {\"a\": " << p.block_a << ", \"b\": " << p.block_b
            << ", \"similarity\": " << p.sim << ", \"min_size\": " << p.min_size
            << ", \"found_by\": [";
        for (std::size_t k = 0; k < p.found_by.size(); ++k) {
            if (k)
                out << ", ";
            out << p.found_by[k];
        }
        out << "]}" << (i + 1 < report.pairs.size() ? ",\n" : "\n");
    }
    out << "  ]\n";
    out << "}\n";
}

// ---------------------------------------------------------------------------
// corpus loading: a directory of source files or a pre-tokenized block file
// ---------------------------------------------------------------------------

struct CorpusWarning {
    std::string file;
    std::uint32_t line = 0;
    std::string message;
    bool file_skipped = false;
};

struct Corpus {
    std::vector<CodeBlock> blocks;
    std::vector<CorpusWarning> warnings;
    std::size_t files_seen = 0;
    std::size_t files_skipped = 0;
};

// Reads every *.<ext> file under `dir` (recursively), extracts blocks and
// assigns corpus-wide ids in (file path, start line) order. Files that fail
// to lex are skipped and recorded, never fatal.
inline Corpus load_corpus_directory(const std::filesystem::path& dir, Granularity granularity,
                                    std::string_view ext = "java") {
    namespace fs = std::filesystem;
    if (!fs::exists(dir) || !fs::is_directory(dir))
        throw io_error("NoSuchCorpus(" + dir.string() + ")");

    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == "." + std::string(ext))
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());

    Corpus corpus;
    corpus.files_seen = files.size();
    for (const fs::path& path : files) {
        std::ifstream in(path, std::ios::binary);
        if (!in) {
            corpus.warnings.push_back({path.string(), 0, "unreadable file", true});
            ++corpus.files_skipped;
            continue;
        }
        std::ostringstream buf;
        buf << in.rdbuf();
        SourceFile file{path.string(), buf.str(), Language::java_like};

        std::vector<LexWarning> lex_warnings;
        try {
            std::vector<CodeBlock> file_blocks = extract_blocks(file, granularity, &lex_warnings);
            for (const LexWarning& w : lex_warnings)
                corpus.warnings.push_back({w.file, w.line, w.message, false});
            for (CodeBlock& b : file_blocks)
                corpus.blocks.push_back(std::move(b));
        } catch (const extraction_error& e) {
            for (const LexWarning& w : lex_warnings)
                corpus.warnings.push_back({w.file, w.line, w.message, false});
            corpus.warnings.push_back({path.string(), 0, e.what(), true});
            ++corpus.files_skipped;
        }
    }

    std::stable_sort(corpus.blocks.begin(), corpus.blocks.end(),
                     [](const CodeBlock& a, const CodeBlock& b) {
                         if (a.file_path != b.file_path)
                             return a.file_path < b.file_path;
                         return a.start_line < b.start_line;
                     });
    for (std::size_t i = 0; i < corpus.blocks.size(); ++i)
        corpus.blocks[i].id = i;
    return corpus;
}

// Loads either form of corpus: a directory of sources or a block file.
inline Corpus load_corpus(const std::filesystem::path& path, Granularity granularity,
                          std::string_view ext = "java") {
    if (std::filesystem::is_directory(path))
        return load_corpus_directory(path, granularity, ext);
    if (!std::filesystem::exists(path))
        throw io_error("NoSuchCorpus(" + path.string() + ")");
    Corpus corpus;
    corpus.blocks = read_block_file(path);
    corpus.files_seen = 1;
    return corpus;
}

} // namespace clonecurve
