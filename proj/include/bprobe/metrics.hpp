#ifndef BPROBE_METRICS_HPP
#define BPROBE_METRICS_HPP

#include <array>
#include <set>
#include <string>
#include <vector>

namespace bprobe::metrics {

// Lowercase, trim, strip terminal punctuation, singularize each word by a
// fixed rule table (irregulars, ...ies -> y, ...es classes, trailing s).
std::string normalize_answer(const std::string& s);

struct NormalizedEntity {
    std::string surface;
    std::string norm;

    explicit NormalizedEntity(std::string s)
        : surface(std::move(s)), norm(normalize_answer(surface)) {}
};

enum class ExactMatchMode { Precision, Recall };

// Entity-level match rate between response entities and the verified
// ambiguous ground truth (normalized strings). Precision scopes the
// denominator to the response; Recall to the verified set.
double exact_match(const std::vector<std::string>& response_entities,
                   const std::set<std::string>& verified_ambiguous,
                   ExactMatchMode mode = ExactMatchMode::Precision);

// Bag-of-words F1 between the word multisets of the two entity lists,
// after normalization.
double f1_word_overlap(const std::vector<std::string>& response_entities,
                       const std::set<std::string>& verified_ambiguous);

// Fraction of new entities whose normalized form duplicates some reference
// entity. The word-level variant counts duplicated words instead.
enum class OverlapGranularity { Entity, Word };
double answer_overlap_rate(const std::vector<std::string>& new_entities,
                           const std::vector<std::string>& reference_entities,
                           OverlapGranularity granularity = OverlapGranularity::Entity);

// Cumulative BLEU-n: brevity penalty times the geometric mean of clipped
// 1..n gram precisions, single reference. Tokens are whitespace pieces
// after lowercasing and punctuation stripping.
double bleu_n(const std::string& candidate, const std::string& reference, int n);

struct MetricReport {
    double em = 0.0;
    double f1 = 0.0;
    double aor = 0.0;
    std::array<double, 4> bleu{0.0, 0.0, 0.0, 0.0};
};

}  // namespace bprobe::metrics

#endif  // BPROBE_METRICS_HPP
