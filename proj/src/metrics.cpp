#include "bprobe/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <map>
#include <sstream>

#include "bprobe/errors.hpp"

namespace bprobe::metrics {

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() &&
           s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

const std::map<std::string, std::string>& irregulars() {
    static const std::map<std::string, std::string> table = {
        {"mice", "mouse"}, {"geese", "goose"},   {"children", "child"},
        {"feet", "foot"},  {"teeth", "tooth"},   {"people", "person"},
    };
    return table;
}

std::string singularize(const std::string& word) {
    auto it = irregulars().find(word);
    if (it != irregulars().end()) return it->second;

    if (ends_with(word, "ies") && word.size() > 3) {
        return word.substr(0, word.size() - 3) + "y";
    }
    for (const char* suffix : {"ses", "xes", "zes", "ches", "shes"}) {
        if (ends_with(word, suffix) && word.size() > std::strlen(suffix)) {
            return word.substr(0, word.size() - 2);  // drop "es"
        }
    }
    // Plain trailing s, but leave -ss/-us/-is stems alone so the rule is
    // stable on its own outputs.
    if (ends_with(word, "s") && word.size() > 2 && !ends_with(word, "ss") &&
        !ends_with(word, "us") && !ends_with(word, "is")) {
        return word.substr(0, word.size() - 1);
    }
    return word;
}

bool is_terminal_punct(char c) {
    return c == '.' || c == ',' || c == '!' || c == '?' || c == ';' || c == ':';
}

std::vector<std::string> split_words(const std::string& s) {
    std::vector<std::string> words;
    std::istringstream in(s);
    std::string w;
    while (in >> w) words.push_back(w);
    return words;
}

}  // namespace

std::string normalize_answer(const std::string& s) {
    std::string t;
    t.reserve(s.size());
    for (char c : s) t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));

    size_t begin = t.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    size_t end = t.find_last_not_of(" \t\r\n");
    t = t.substr(begin, end - begin + 1);
    while (!t.empty() && is_terminal_punct(t.back())) t.pop_back();
    while (!t.empty() && (t.back() == ' ' || t.back() == '\t')) t.pop_back();

    std::vector<std::string> words = split_words(t);
    std::string out;
    for (size_t i = 0; i < words.size(); ++i) {
        if (i) out.push_back(' ');
        out += singularize(words[i]);
    }
    return out;
}

double exact_match(const std::vector<std::string>& response_entities,
                   const std::set<std::string>& verified_ambiguous,
                   ExactMatchMode mode) {
    if (response_entities.empty()) {
        throw_error(ErrorCode::EmptyResponse, "exact_match on empty response");
    }
    if (mode == ExactMatchMode::Precision) {
        size_t hits = 0;
        for (const auto& entity : response_entities) {
            if (verified_ambiguous.count(normalize_answer(entity))) ++hits;
        }
        return static_cast<double>(hits) / static_cast<double>(response_entities.size());
    }
    if (verified_ambiguous.empty()) return 0.0;
    std::set<std::string> response_norms;
    for (const auto& entity : response_entities) {
        response_norms.insert(normalize_answer(entity));
    }
    size_t hits = 0;
    for (const auto& truth : verified_ambiguous) {
        if (response_norms.count(truth)) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(verified_ambiguous.size());
}

namespace {

std::map<std::string, int> word_bag(const std::vector<std::string>& entities) {
    std::map<std::string, int> bag;
    for (const auto& entity : entities) {
        for (const auto& word : split_words(normalize_answer(entity))) {
            ++bag[word];
        }
    }
    return bag;
}

}  // namespace

double f1_word_overlap(const std::vector<std::string>& response_entities,
                       const std::set<std::string>& verified_ambiguous) {
    if (response_entities.empty() || verified_ambiguous.empty()) {
        throw_error(ErrorCode::EmptyInput, "f1_word_overlap on empty input");
    }
    const auto candidate = word_bag(response_entities);
    const auto reference = word_bag(
        std::vector<std::string>(verified_ambiguous.begin(), verified_ambiguous.end()));

    long long candidate_total = 0, reference_total = 0, overlap = 0;
    for (const auto& [word, count] : candidate) candidate_total += count;
    for (const auto& [word, count] : reference) reference_total += count;
    for (const auto& [word, count] : candidate) {
        auto it = reference.find(word);
        if (it != reference.end()) overlap += std::min(count, it->second);
    }
    if (overlap == 0 || candidate_total == 0 || reference_total == 0) return 0.0;
    const double p = static_cast<double>(overlap) / static_cast<double>(candidate_total);
    const double r = static_cast<double>(overlap) / static_cast<double>(reference_total);
    return 2.0 * p * r / (p + r);
}

double answer_overlap_rate(const std::vector<std::string>& new_entities,
                           const std::vector<std::string>& reference_entities,
                           OverlapGranularity granularity) {
    if (new_entities.empty()) {
        throw_error(ErrorCode::EmptyInput, "answer_overlap_rate on empty list");
    }
    if (granularity == OverlapGranularity::Entity) {
        std::set<std::string> reference;
        for (const auto& entity : reference_entities) {
            reference.insert(normalize_answer(entity));
        }
        size_t duplicated = 0;
        for (const auto& entity : new_entities) {
            if (reference.count(normalize_answer(entity))) ++duplicated;
        }
        return static_cast<double>(duplicated) / static_cast<double>(new_entities.size());
    }
    std::set<std::string> reference_words;
    for (const auto& entity : reference_entities) {
        for (const auto& word : split_words(normalize_answer(entity))) {
            reference_words.insert(word);
        }
    }
    size_t total = 0, duplicated = 0;
    for (const auto& entity : new_entities) {
        for (const auto& word : split_words(normalize_answer(entity))) {
            ++total;
            if (reference_words.count(word)) ++duplicated;
        }
    }
    if (total == 0) return 0.0;
    return static_cast<double>(duplicated) / static_cast<double>(total);
}

namespace {

// lowercase, strip punctuation characters, split on whitespace
std::vector<std::string> bleu_tokens(const std::string& text) {
    std::string cleaned;
    cleaned.reserve(text.size());
    for (char c : text) {
        unsigned char u = static_cast<unsigned char>(c);
        if (std::ispunct(u)) continue;
        cleaned.push_back(static_cast<char>(std::tolower(u)));
    }
    return split_words(cleaned);
}

std::map<std::string, int> ngram_counts(const std::vector<std::string>& tokens, int n) {
    std::map<std::string, int> counts;
    if (static_cast<int>(tokens.size()) < n) return counts;
    for (size_t i = 0; i + n <= tokens.size(); ++i) {
        std::string key = tokens[i];
        for (int k = 1; k < n; ++k) {
            key.push_back('\x1f');
            key += tokens[i + k];
        }
        ++counts[key];
    }
    return counts;
}

}  // namespace

double bleu_n(const std::string& candidate, const std::string& reference, int n) {
    if (n < 1 || n > 4) {
        throw_error(ErrorCode::ConfigInvalid, "bleu order must be 1..4");
    }
    const auto cand = bleu_tokens(candidate);
    const auto ref = bleu_tokens(reference);
    if (cand.empty() || ref.empty()) return 0.0;

    double log_precision = 0.0;
    for (int k = 1; k <= n; ++k) {
        const auto cand_grams = ngram_counts(cand, k);
        const auto ref_grams = ngram_counts(ref, k);
        long long total = 0, clipped = 0;
        for (const auto& [gram, count] : cand_grams) {
            total += count;
            auto it = ref_grams.find(gram);
            if (it != ref_grams.end()) clipped += std::min(count, it->second);
        }
        if (total == 0 || clipped == 0) return 0.0;
        log_precision += std::log(static_cast<double>(clipped) / static_cast<double>(total));
    }

    const double c = static_cast<double>(cand.size());
    const double r = static_cast<double>(ref.size());
    const double brevity = (c > r) ? 1.0 : std::exp(1.0 - r / c);
    return brevity * std::exp(log_precision / n);
}

}  // namespace bprobe::metrics
