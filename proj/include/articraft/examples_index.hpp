#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include <articraft/error.hpp>

// Curated example retrieval: BM25-style keyword scoring over small corpora.
// Everything is deterministic: corpus order comes from sorted filenames, ties
// keep corpus order, and scores depend only on entry text and query.

namespace articraft {

struct ExampleEntry {
    std::string id;  // filename stem or caller-assigned handle
    std::string title;
    std::vector<std::string> tags;
    std::string snippet;  // program excerpt
    std::string notes;
};

struct ExampleHit {
    const ExampleEntry* entry = nullptr;
    double score = 0.0;
    bool weak = false;  // below the relevance threshold
};

namespace detail {

inline std::vector<std::string> index_tokens(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (char raw : text) {
        unsigned char c = static_cast<unsigned char>(raw);
        if (std::isalnum(c)) {
            cur += static_cast<char>(std::tolower(c));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

}  // namespace detail

class ExampleIndex {
  public:
    // Scoring constants: saturation k1 and the weak-match threshold. A single
    // title hit against a small corpus lands well above the threshold; a
    // query with no term overlap scores 0 and is tagged weak.
    static constexpr double kSaturation = 1.2;
    static constexpr double kWeakThreshold = 1.0;

    ExampleIndex() = default;

    static ExampleIndex from_entries(std::vector<ExampleEntry> entries) {
        ExampleIndex index;
        index.entries_ = std::move(entries);
        index.build();
        return index;
    }

    // Loads every .json entry file in the directory, sorted by filename.
    // Entry shape: {"title": str, "tags": [str], "snippet": str, "notes": str}.
    static ExampleIndex load_directory(const std::filesystem::path& dir) {
        std::vector<std::filesystem::path> files;
        std::error_code ec;
        for (const auto& it : std::filesystem::directory_iterator(dir, ec))
            if (it.path().extension() == ".json") files.push_back(it.path());
        if (ec) throw Error("io_error", "cannot list '" + dir.string() + "': " + ec.message());
        std::sort(files.begin(), files.end());

        std::vector<ExampleEntry> entries;
        for (const auto& file : files) {
            std::ifstream in(file);
            if (!in) throw Error("io_error", "cannot open '" + file.string() + "'");
            nlohmann::json doc;
            try {
                in >> doc;
            } catch (const nlohmann::json::exception& e) {
                throw Error("parse_error", file.string() + ": " + e.what());
            }
            ExampleEntry entry;
            entry.id = file.stem().string();
            entry.title = doc.value("title", "");
            entry.snippet = doc.value("snippet", "");
            entry.notes = doc.value("notes", "");
            for (const auto& tag : doc.value("tags", nlohmann::json::array()))
                entry.tags.push_back(tag.get<std::string>());
            entries.push_back(std::move(entry));
        }
        return from_entries(std::move(entries));
    }

    std::size_t size() const { return entries_.size(); }
    const std::vector<ExampleEntry>& entries() const { return entries_; }

    std::vector<ExampleHit> search(const std::string& query, int k) const {
        if (entries_.empty()) throw Error("empty_index", "the example index holds no entries");
        if (k <= 0) return {};

        std::vector<ExampleHit> hits(entries_.size());
        for (std::size_t i = 0; i < entries_.size(); ++i) hits[i].entry = &entries_[i];

        const double n = static_cast<double>(entries_.size());
        for (const std::string& term : detail::index_tokens(query)) {
            auto df_it = doc_freq_.find(term);
            if (df_it == doc_freq_.end()) continue;
            double df = static_cast<double>(df_it->second);
            double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
            for (std::size_t i = 0; i < entries_.size(); ++i) {
                auto tf_it = term_weight_[i].find(term);
                if (tf_it == term_weight_[i].end()) continue;
                double tf = tf_it->second;
                hits[i].score += idf * tf * (kSaturation + 1.0) / (tf + kSaturation);
            }
        }

        std::stable_sort(hits.begin(), hits.end(),
                         [](const ExampleHit& a, const ExampleHit& b) { return a.score > b.score; });
        if (static_cast<int>(hits.size()) > k) hits.resize(static_cast<std::size_t>(k));
        for (ExampleHit& h : hits) h.weak = h.score < kWeakThreshold;
        return hits;
    }

    // Tool-result rendering used by find_examples.
    std::string render(const std::string& query, int k) const {
        std::vector<ExampleHit> hits = search(query, k);
        std::string out = "# Examples for \"" + query + "\"\n";
        if (hits.empty()) return out + "(no results requested)\n";
        int rank = 0;
        for (const ExampleHit& h : hits) {
            ++rank;
            out += "\n## " + std::to_string(rank) + ". " + h.entry->title;
            if (h.weak) out += " [weakly relevant]";
            out += "\n";
            if (!h.entry->tags.empty()) {
                out += "tags: ";
                for (std::size_t i = 0; i < h.entry->tags.size(); ++i) {
                    if (i) out += ", ";
                    out += h.entry->tags[i];
                }
                out += "\n";
            }
            out += "```\n" + h.entry->snippet;
            if (!h.entry->snippet.empty() && h.entry->snippet.back() != '\n') out += '\n';
            out += "```\n";
            if (!h.entry->notes.empty()) out += h.entry->notes + "\n";
        }
        return out;
    }

  private:
    std::vector<ExampleEntry> entries_;
    // Field-weighted term frequency per entry (title 3x, tags 2x, notes 1x;
    // snippets are payload, not index text) and per-term document frequency.
    std::vector<std::map<std::string, double>> term_weight_;
    std::map<std::string, int> doc_freq_;

    void build() {
        term_weight_.assign(entries_.size(), {});
        doc_freq_.clear();
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            const ExampleEntry& e = entries_[i];
            auto add = [&](std::string_view text, double weight) {
                for (const std::string& term : detail::index_tokens(text))
                    term_weight_[i][term] += weight;
            };
            add(e.title, 3.0);
            for (const std::string& tag : e.tags) add(tag, 2.0);
            add(e.notes, 1.0);
            for (const auto& [term, weight] : term_weight_[i]) {
                (void)weight;
                ++doc_freq_[term];
            }
        }
    }
};

}  // namespace articraft
