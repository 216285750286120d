#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dring::profile {
struct InterestProfile;
}

namespace dring::tfidf {

struct NoPositiveMatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct EmptyCatalog : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Interest keyword documents, one token multiset per interest category.
struct InterestCorpus {
    std::map<std::string, std::vector<std::string>> docs;

    std::size_t size() const { return docs.size(); }
    bool empty() const { return docs.empty(); }
};

struct CatalogEntry {
    std::string service_id;
    std::vector<std::string> tokens;
};

struct Catalog {
    std::vector<CatalogEntry> entries;
};

// lowercase, split on non-alphanumerics, drop tokens shorter than 2 chars
std::vector<std::string> tokenize(std::string_view text);

// raw occurrence count of token in doc
std::size_t tf(std::string_view token, std::span<const std::string> doc);

// log10(N / df); a token in no document contributes 0 instead of blowing up
double idf(std::string_view token, const InterestCorpus& corpus);

// sum of tf*idf over the distinct ad keywords
double score(std::span<const std::string> ad_keywords,
             std::span<const std::string> doc, const InterestCorpus& corpus);

// best-scoring interest id, ties to the lexicographically smallest;
// NoPositiveMatch when every score is zero
std::string map_keywords(std::span<const std::string> ad_keywords,
                         const InterestCorpus& corpus);

// Top-k catalog indices ranked by the profile-weighted sum of per-category
// scores. Deterministic: ties break toward the smaller index. k larger
// than the catalog returns every index.
std::vector<std::size_t> select_services(const profile::InterestProfile& p,
                                         const Catalog& catalog,
                                         std::size_t k,
                                         const InterestCorpus& corpus);

// corpus file: "DRCORPUS 1" header, then id<TAB>space-separated tokens
InterestCorpus load_corpus(const std::string& path);
void save_corpus(const InterestCorpus& corpus, const std::string& path);
// catalog file: "DRCATALOG 1" header, then index<TAB>service-id<TAB>tokens
Catalog load_catalog(const std::string& path);
void save_catalog(const Catalog& catalog, const std::string& path);

}  // namespace dring::tfidf
