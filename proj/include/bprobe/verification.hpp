#ifndef BPROBE_VERIFICATION_HPP
#define BPROBE_VERIFICATION_HPP

#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "bprobe/metrics.hpp"

namespace bprobe::verification {

enum class Verdict { Incorrect, Correct, Unverifiable };

const char* verdict_name(Verdict v);
std::optional<Verdict> verdict_from_name(const std::string& name);

enum class Provenance { TargetGenerated, AuxiliaryDiscovered };

const char* provenance_name(Provenance p);

struct EvaluationPair {
    metrics::NormalizedEntity answer;
    std::string question_id;
    Verdict self_verdict = Verdict::Unverifiable;
    Verdict truth_verdict = Verdict::Unverifiable;  // RAG-based, may be overridden
    Provenance provenance = Provenance::TargetGenerated;
};

enum class Category { Unqualified, Inaccurate, HiddenCorrect, UnexpectedWrong };

// Non-exclusive flags; the headline aggregates double-count overlapping
// cells, so a single-label scheme cannot reproduce them.
std::set<Category> categorize(const EvaluationPair& pair);

struct CategoryTally {
    // truth rows x self columns, in Verdict order, percentages of the
    // filtered pair count.
    std::array<std::array<double, 3>, 3> crosstab{};
    std::size_t total = 0;
    double unqualified_pct = 0.0;       // truth in {Incorrect, Unverifiable}
    double inaccurate_pct = 0.0;        // self != truth
    double hidden_correct_pct = 0.0;    // truth == Correct
    double unexpected_wrong_pct = 0.0;  // self != truth
    double admission_aligned_pct = 0.0; // self == Unverifiable column sum
};

enum class ProvenanceFilter { All, TargetGenerated, AuxiliaryDiscovered };

CategoryTally tally(const std::vector<EvaluationPair>& pairs,
                    ProvenanceFilter filter);

const std::vector<std::string>& default_admission_keywords();

// Case-insensitive keyword scan for knowledge-boundary admissions.
bool detect_boundary_admission(const std::string& response_text,
                               const std::vector<std::string>& keywords =
                                   default_admission_keywords());

/// Human truth-verdict overrides keyed by (question_id, normalized answer).
/// Loaded from a JSON-lines file of {question_id, answer, verdict}.
class OverrideStore {
public:
    static OverrideStore load(const std::string& path);
    void add(const std::string& question_id, const std::string& answer, Verdict v);
    std::optional<Verdict> lookup(const std::string& question_id,
                                  const std::string& answer) const;
    std::size_t size() const { return overrides_.size(); }

private:
    std::map<std::pair<std::string, std::string>, Verdict> overrides_;
};

// Markdown table mirroring the crosstab layout, plus aggregate lines.
std::string render_crosstab_markdown(const CategoryTally& tally,
                                     const std::string& title);

}  // namespace bprobe::verification

#endif  // BPROBE_VERIFICATION_HPP
