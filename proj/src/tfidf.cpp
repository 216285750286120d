#include "dring/tfidf.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "dring/io.hpp"
#include "dring/profile.hpp"

namespace dring::tfidf {

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            cur.push_back(static_cast<char>(
                std::tolower(static_cast<unsigned char>(c))));
        } else if (!cur.empty()) {
            if (cur.size() >= 2) out.push_back(cur);
            cur.clear();
        }
    }
    if (cur.size() >= 2) out.push_back(cur);
    return out;
}

std::size_t tf(std::string_view token, std::span<const std::string> doc) {
    std::size_t n = 0;
    for (const auto& t : doc)
        if (t == token) ++n;
    return n;
}

double idf(std::string_view token, const InterestCorpus& corpus) {
    if (corpus.empty())
        throw std::invalid_argument("idf: empty corpus");
    std::size_t df = 0;
    for (const auto& [id, doc] : corpus.docs)
        if (tf(token, doc) > 0) ++df;
    if (df == 0) return 0.0;
    return std::log10(static_cast<double>(corpus.size()) /
                      static_cast<double>(df));
}

double score(std::span<const std::string> ad_keywords,
             std::span<const std::string> doc, const InterestCorpus& corpus) {
    // keyword sets: a repeated query token counts once
    std::set<std::string_view> seen;
    double acc = 0;
    for (const auto& t : ad_keywords) {
        if (!seen.insert(t).second) continue;
        acc += static_cast<double>(tf(t, doc)) * idf(t, corpus);
    }
    return acc;
}

std::string map_keywords(std::span<const std::string> ad_keywords,
                         const InterestCorpus& corpus) {
    if (corpus.empty())
        throw std::invalid_argument("map_keywords: empty corpus");
    std::string best;
    double best_score = 0;
    bool any = false;
    for (const auto& [id, doc] : corpus.docs) {
        double s = score(ad_keywords, doc, corpus);
        if (s > 0 && (!any || s > best_score)) {
            // map iteration is id-ascending, so strict > keeps the
            // lexicographically smallest id on ties
            best = id;
            best_score = s;
            any = true;
        }
    }
    if (!any)
        throw NoPositiveMatch("map_keywords: no interest scores above zero");
    return best;
}

std::vector<std::size_t> select_services(const profile::InterestProfile& p,
                                         const Catalog& catalog,
                                         std::size_t k,
                                         const InterestCorpus& corpus) {
    if (catalog.entries.empty())
        throw EmptyCatalog("select_services: empty catalog");
    if (k == 0) throw std::invalid_argument("select_services: k must be >= 1");

    std::vector<std::pair<double, std::size_t>> ranked;
    ranked.reserve(catalog.entries.size());
    for (std::size_t i = 0; i < catalog.entries.size(); ++i) {
        double s = 0;
        for (const auto& [cat, weight] : p.weights) {
            auto it = corpus.docs.find(cat);
            if (it == corpus.docs.end()) continue;
            s += weight * score(catalog.entries[i].tokens, it->second, corpus);
        }
        ranked.emplace_back(s, i);
    }
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) {
                         if (a.first != b.first) return a.first > b.first;
                         return a.second < b.second;
                     });
    std::vector<std::size_t> out;
    const std::size_t n = std::min(k, ranked.size());
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(ranked[i].second);
    return out;
}

namespace {

std::vector<std::string> split_tokens(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

}  // namespace

InterestCorpus load_corpus(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("load_corpus: cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line != "DRCORPUS 1")
        throw IoError("load_corpus: bad header in " + path);
    InterestCorpus corpus;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw IoError("load_corpus: malformed line in " + path);
        corpus.docs[line.substr(0, tab)] = split_tokens(line.substr(tab + 1));
    }
    if (corpus.empty())
        throw IoError("load_corpus: no documents in " + path);
    return corpus;
}

void save_corpus(const InterestCorpus& corpus, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("save_corpus: cannot open " + path);
    out << "DRCORPUS 1\n";
    for (const auto& [id, doc] : corpus.docs) {
        out << id << '\t';
        for (std::size_t i = 0; i < doc.size(); ++i) {
            if (i) out << ' ';
            out << doc[i];
        }
        out << '\n';
    }
}

Catalog load_catalog(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("load_catalog: cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line != "DRCATALOG 1")
        throw IoError("load_catalog: bad header in " + path);
    Catalog cat;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto t1 = line.find('\t');
        auto t2 = line.find('\t', t1 + 1);
        if (t1 == std::string::npos || t2 == std::string::npos)
            throw IoError("load_catalog: malformed line in " + path);
        const std::size_t index = std::stoull(line.substr(0, t1));
        if (index != cat.entries.size())
            throw IoError("load_catalog: indices not sequential");
        CatalogEntry e;
        e.service_id = line.substr(t1 + 1, t2 - t1 - 1);
        e.tokens = split_tokens(line.substr(t2 + 1));
        cat.entries.push_back(std::move(e));
    }
    if (cat.entries.empty())
        throw IoError("load_catalog: no entries in " + path);
    return cat;
}

void save_catalog(const Catalog& catalog, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("save_catalog: cannot open " + path);
    out << "DRCATALOG 1\n";
    for (std::size_t i = 0; i < catalog.entries.size(); ++i) {
        out << i << '\t' << catalog.entries[i].service_id << '\t';
        const auto& toks = catalog.entries[i].tokens;
        for (std::size_t j = 0; j < toks.size(); ++j) {
            if (j) out << ' ';
            out << toks[j];
        }
        out << '\n';
    }
}

}  // namespace dring::tfidf
