#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "bprobe/errors.hpp"
#include "bprobe/metrics.hpp"
#include "bprobe/rng.hpp"

using bprobe::Error;
using bprobe::ErrorCode;
using bprobe::SplitMix64;
using namespace bprobe::metrics;

namespace {

// Pool of words that normalization maps to themselves, so the oracles below
// can count plain strings without re-deriving the singularization table.
const std::vector<std::string> kStableWords = {
    "koala", "fox", "tree", "vine", "moss", "fern", "gum", "reef",
};

std::vector<std::string> random_entities(SplitMix64& rng, int max_len) {
    const int count = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(max_len)));
    std::vector<std::string> out;
    for (int i = 0; i < count; ++i) {
        std::string entity = kStableWords[rng.next_below(kStableWords.size())];
        if (rng.next_below(3) == 0) {
            entity += " " + kStableWords[rng.next_below(kStableWords.size())];
        }
        out.push_back(entity);
    }
    return out;
}

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> words;
    std::string w;
    for (char c : s) {
        if (c == ' ') {
            if (!w.empty()) words.push_back(w);
            w.clear();
        } else {
            w.push_back(c);
        }
    }
    if (!w.empty()) words.push_back(w);
    return words;
}

// Counting oracles over the stable vocabulary (normalization is identity
// there, checked separately below).
double oracle_em_precision(const std::vector<std::string>& response,
                           const std::set<std::string>& verified) {
    int hits = 0;
    for (const auto& e : response) hits += verified.count(e) ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(response.size());
}

double oracle_em_recall(const std::vector<std::string>& response,
                        const std::set<std::string>& verified) {
    if (verified.empty()) return 0.0;
    int hits = 0;
    for (const auto& t : verified) {
        hits += std::count(response.begin(), response.end(), t) > 0 ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(verified.size());
}

double oracle_f1(const std::vector<std::string>& response,
                 const std::set<std::string>& verified) {
    std::map<std::string, int> cand, ref;
    for (const auto& e : response) {
        for (const auto& w : split_ws(e)) ++cand[w];
    }
    for (const auto& e : verified) {
        for (const auto& w : split_ws(e)) ++ref[w];
    }
    int cand_total = 0, ref_total = 0, overlap = 0;
    for (const auto& [w, c] : cand) cand_total += c;
    for (const auto& [w, c] : ref) ref_total += c;
    for (const auto& [w, c] : cand) {
        auto it = ref.find(w);
        if (it != ref.end()) overlap += std::min(c, it->second);
    }
    if (overlap == 0) return 0.0;
    const double p = static_cast<double>(overlap) / cand_total;
    const double r = static_cast<double>(overlap) / ref_total;
    return 2.0 * p * r / (p + r);
}

double oracle_aor_entity(const std::vector<std::string>& fresh,
                         const std::vector<std::string>& reference) {
    std::set<std::string> ref(reference.begin(), reference.end());
    int dup = 0;
    for (const auto& e : fresh) dup += ref.count(e) ? 1 : 0;
    return static_cast<double>(dup) / static_cast<double>(fresh.size());
}

double oracle_aor_word(const std::vector<std::string>& fresh,
                       const std::vector<std::string>& reference) {
    std::set<std::string> ref_words;
    for (const auto& e : reference) {
        for (const auto& w : split_ws(e)) ref_words.insert(w);
    }
    int total = 0, dup = 0;
    for (const auto& e : fresh) {
        for (const auto& w : split_ws(e)) {
            ++total;
            dup += ref_words.count(w) ? 1 : 0;
        }
    }
    return total == 0 ? 0.0 : static_cast<double>(dup) / total;
}

// Brevity-penalized geometric mean of clipped n-gram precisions, with
// n-grams keyed by token vectors rather than joined strings.
double oracle_bleu(const std::vector<std::string>& cand,
                   const std::vector<std::string>& ref, int n) {
    if (cand.empty() || ref.empty()) return 0.0;
    double log_sum = 0.0;
    for (int k = 1; k <= n; ++k) {
        std::map<std::vector<std::string>, int> cand_grams, ref_grams;
        for (int i = 0; i + k <= static_cast<int>(cand.size()); ++i) {
            ++cand_grams[std::vector<std::string>(cand.begin() + i, cand.begin() + i + k)];
        }
        for (int i = 0; i + k <= static_cast<int>(ref.size()); ++i) {
            ++ref_grams[std::vector<std::string>(ref.begin() + i, ref.begin() + i + k)];
        }
        int total = 0, clipped = 0;
        for (const auto& [gram, count] : cand_grams) {
            total += count;
            auto it = ref_grams.find(gram);
            if (it != ref_grams.end()) clipped += std::min(count, it->second);
        }
        if (total == 0 || clipped == 0) return 0.0;
        log_sum += std::log(static_cast<double>(clipped) / total);
    }
    const double c = static_cast<double>(cand.size());
    const double r = static_cast<double>(ref.size());
    const double brevity = c > r ? 1.0 : std::exp(1.0 - r / c);
    return brevity * std::exp(log_sum / n);
}

std::string join(const std::vector<std::string>& words) {
    std::string out;
    for (const auto& w : words) {
        if (!out.empty()) out.push_back(' ');
        out += w;
    }
    return out;
}

}  // namespace

TEST_CASE("normalization lowercases, trims, and singularizes") {
    CHECK(normalize_answer("Peas ") == "pea");
    CHECK(normalize_answer("Berries") == "berry");
    CHECK(normalize_answer("cities") == "city");
    CHECK(normalize_answer("boxes") == "box");
    CHECK(normalize_answer("buses") == "bus");
    CHECK(normalize_answer("churches") == "church");
    CHECK(normalize_answer("dishes") == "dish");
    CHECK(normalize_answer("Red Foxes. ") == "red fox");
    CHECK(normalize_answer("  spaced   words  ") == "spaced word");
    CHECK(normalize_answer("Rome!") == "rome");
    CHECK(normalize_answer("Rome?!") == "rome");
    CHECK(normalize_answer("rock-n-roll") == "rock-n-roll");
}

TEST_CASE("normalization knows the irregular plurals") {
    CHECK(normalize_answer("Mice") == "mouse");
    CHECK(normalize_answer("GEESE") == "goose");
    CHECK(normalize_answer("children") == "child");
    CHECK(normalize_answer("Feet") == "foot");
    CHECK(normalize_answer("Teeth") == "tooth");
    CHECK(normalize_answer("People") == "person");
}

TEST_CASE("normalization leaves -ss, -us, -is stems alone") {
    CHECK(normalize_answer("glass") == "glass");
    CHECK(normalize_answer("moss") == "moss");
    CHECK(normalize_answer("cactus") == "cactus");
    CHECK(normalize_answer("axis") == "axis");
    CHECK(normalize_answer("is") == "is");
}

TEST_CASE("normalization is idempotent") {
    const std::vector<std::string> words = {
        "Peas",   "Berries", "cities", "glasses", "buses",  "mice",
        "people", "feet",    "Foxes",  "moss",    "cactus", "Red Foxes!",
    };
    for (const auto& w : words) {
        const std::string once = normalize_answer(w);
        CHECK(normalize_answer(once) == once);
    }
    CHECK(normalize_answer("") == "");
    CHECK(normalize_answer("   ") == "");
    CHECK(normalize_answer("...") == "");
}

TEST_CASE("normalized entities keep their surface form") {
    const NormalizedEntity entity("Koalas!");
    CHECK(entity.surface == "Koalas!");
    CHECK(entity.norm == "koala");
}

TEST_CASE("exact match scopes its denominator by mode") {
    const std::set<std::string> verified = {"koala"};
    const std::vector<std::string> response = {"Koalas", "Quokka"};
    CHECK(exact_match(response, verified, ExactMatchMode::Precision) ==
          doctest::Approx(0.5));
    CHECK(exact_match(response, verified, ExactMatchMode::Recall) ==
          doctest::Approx(1.0));

    CHECK(exact_match({"KOALAS."}, verified) == doctest::Approx(1.0));
    CHECK(exact_match({"quokka"}, verified) == doctest::Approx(0.0));
    CHECK(exact_match({"quokka"}, {}, ExactMatchMode::Recall) == 0.0);

    try {
        exact_match({}, verified);
        FAIL("expected an error");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::EmptyResponse);
    }
}

TEST_CASE("word-overlap f1 on a hand-checked pair") {
    // Bags {red, fox} vs {red, wolf}: overlap 1, p = r = 1/2, f1 = 1/2.
    CHECK(f1_word_overlap({"red fox"}, {"red wolf"}) == doctest::Approx(0.5));
    CHECK(f1_word_overlap({"koala"}, {"koala"}) == doctest::Approx(1.0));
    CHECK(f1_word_overlap({"fern"}, {"koala"}) == 0.0);

    try {
        f1_word_overlap({}, {"koala"});
        FAIL("expected an error");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::EmptyInput);
    }
    try {
        f1_word_overlap({"koala"}, {});
        FAIL("expected an error");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::EmptyInput);
    }
}

TEST_CASE("overlap rate counts normalized duplicates") {
    CHECK(answer_overlap_rate({"Koala", "Quokka"}, {"koalas"}) ==
          doctest::Approx(0.5));
    CHECK(answer_overlap_rate({"koala bear"}, {"koala"}) == 0.0);
    CHECK(answer_overlap_rate({"koala bear"}, {"koala"},
                              OverlapGranularity::Word) == doctest::Approx(0.5));
    CHECK(answer_overlap_rate({"quokka"}, {}) == 0.0);

    try {
        answer_overlap_rate({}, {"koala"});
        FAIL("expected an error");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::EmptyInput);
    }
}

TEST_CASE("entity metrics agree with counting oracles on random cases") {
    SplitMix64 rng(2024);
    for (int trial = 0; trial < 50; ++trial) {
        const auto response = random_entities(rng, 6);
        const auto verified_list = random_entities(rng, 4);
        const std::set<std::string> verified(verified_list.begin(), verified_list.end());

        CHECK(exact_match(response, verified, ExactMatchMode::Precision) ==
              oracle_em_precision(response, verified));
        CHECK(exact_match(response, verified, ExactMatchMode::Recall) ==
              oracle_em_recall(response, verified));
        CHECK(std::abs(f1_word_overlap(response, verified) -
                       oracle_f1(response, verified)) <= 1e-12);
        CHECK(answer_overlap_rate(response, verified_list) ==
              oracle_aor_entity(response, verified_list));
        CHECK(answer_overlap_rate(response, verified_list, OverlapGranularity::Word) ==
              oracle_aor_word(response, verified_list));
    }
}

TEST_CASE("clipped unigram precision on the classic repeated-word case") {
    CHECK(bleu_n("the the the", "the cat", 1) == doctest::Approx(1.0 / 3).epsilon(1e-13));
}

TEST_CASE("bleu hand cases") {
    CHECK(bleu_n("the cat sat down", "the cat sat down", 4) == doctest::Approx(1.0));
    // A candidate shorter than the order has no n-grams to score.
    CHECK(bleu_n("the cat sat", "the cat sat", 4) == 0.0);
    // Perfect unigrams but a short candidate: brevity exp(1 - 6/2).
    CHECK(bleu_n("the cat", "the cat sat on a mat", 1) ==
          doctest::Approx(std::exp(-2.0)).epsilon(1e-13));
    // No shared bigram zeroes the cumulative score.
    CHECK(bleu_n("the cat", "cat the", 2) == 0.0);
    CHECK(bleu_n("The, cat!", "the cat", 1) == doctest::Approx(1.0));
    CHECK(bleu_n("", "the cat", 1) == 0.0);
    CHECK(bleu_n("the cat", "", 1) == 0.0);
    CHECK(bleu_n("...", "the cat", 1) == 0.0);

    CHECK_THROWS_AS(bleu_n("a", "a", 0), Error);
    CHECK_THROWS_AS(bleu_n("a", "a", 5), Error);
    try {
        bleu_n("a", "a", 5);
        FAIL("expected an error");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::ConfigInvalid);
    }
}

TEST_CASE("bleu agrees with a vector-keyed oracle on random token strings") {
    const std::vector<std::string> pool = {"the", "cat", "sat", "mat"};
    SplitMix64 rng(4096);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::string> cand, ref;
        const int cand_len = 1 + static_cast<int>(rng.next_below(8));
        const int ref_len = 1 + static_cast<int>(rng.next_below(8));
        for (int i = 0; i < cand_len; ++i) cand.push_back(pool[rng.next_below(pool.size())]);
        for (int i = 0; i < ref_len; ++i) ref.push_back(pool[rng.next_below(pool.size())]);

        for (int n = 1; n <= 4; ++n) {
            CHECK(std::abs(bleu_n(join(cand), join(ref), n) -
                           oracle_bleu(cand, ref, n)) <= 1e-12);
        }
    }
}
