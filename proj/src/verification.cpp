#include "bprobe/verification.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bprobe/errors.hpp"

namespace bprobe::verification {

using nlohmann::json;

const char* verdict_name(Verdict v) {
    switch (v) {
        case Verdict::Incorrect: return "incorrect";
        case Verdict::Correct: return "correct";
        case Verdict::Unverifiable: return "unverifiable";
    }
    return "?";
}

std::optional<Verdict> verdict_from_name(const std::string& name) {
    if (name == "incorrect") return Verdict::Incorrect;
    if (name == "correct") return Verdict::Correct;
    if (name == "unverifiable") return Verdict::Unverifiable;
    return std::nullopt;
}

const char* provenance_name(Provenance p) {
    return p == Provenance::TargetGenerated ? "target_generated"
                                            : "auxiliary_discovered";
}

std::set<Category> categorize(const EvaluationPair& pair) {
    std::set<Category> flags;
    const bool misaligned = pair.self_verdict != pair.truth_verdict;
    if (pair.provenance == Provenance::TargetGenerated) {
        if (pair.truth_verdict != Verdict::Correct) flags.insert(Category::Unqualified);
        if (misaligned) flags.insert(Category::Inaccurate);
    } else {
        if (pair.truth_verdict == Verdict::Correct) flags.insert(Category::HiddenCorrect);
        if (misaligned) flags.insert(Category::UnexpectedWrong);
    }
    return flags;
}

CategoryTally tally(const std::vector<EvaluationPair>& pairs,
                    ProvenanceFilter filter) {
    std::array<std::array<std::size_t, 3>, 3> counts{};
    std::size_t total = 0;
    for (const auto& pair : pairs) {
        if (filter == ProvenanceFilter::TargetGenerated &&
            pair.provenance != Provenance::TargetGenerated) continue;
        if (filter == ProvenanceFilter::AuxiliaryDiscovered &&
            pair.provenance != Provenance::AuxiliaryDiscovered) continue;
        ++counts[static_cast<int>(pair.truth_verdict)]
                [static_cast<int>(pair.self_verdict)];
        ++total;
    }
    if (total == 0) {
        throw_error(ErrorCode::EmptyAfterFilter, "no pairs after provenance filter");
    }

    CategoryTally result;
    result.total = total;
    for (int truth = 0; truth < 3; ++truth) {
        for (int self = 0; self < 3; ++self) {
            result.crosstab[truth][self] =
                100.0 * static_cast<double>(counts[truth][self]) /
                static_cast<double>(total);
        }
    }

    const auto row_sum = [&](Verdict truth) {
        double s = 0.0;
        for (int self = 0; self < 3; ++self) {
            s += result.crosstab[static_cast<int>(truth)][self];
        }
        return s;
    };
    double off_diagonal = 0.0;
    for (int truth = 0; truth < 3; ++truth) {
        for (int self = 0; self < 3; ++self) {
            if (truth != self) off_diagonal += result.crosstab[truth][self];
        }
    }
    result.unqualified_pct =
        row_sum(Verdict::Incorrect) + row_sum(Verdict::Unverifiable);
    result.inaccurate_pct = off_diagonal;
    result.hidden_correct_pct = row_sum(Verdict::Correct);
    result.unexpected_wrong_pct = off_diagonal;
    for (int truth = 0; truth < 3; ++truth) {
        result.admission_aligned_pct +=
            result.crosstab[truth][static_cast<int>(Verdict::Unverifiable)];
    }
    return result;
}

const std::vector<std::string>& default_admission_keywords() {
    static const std::vector<std::string> keywords = {
        "i apologize",
        "i'm afraid",
        "to the best of my knowledge, the list i provided includes all",
    };
    return keywords;
}

bool detect_boundary_admission(const std::string& response_text,
                               const std::vector<std::string>& keywords) {
    std::string low;
    low.reserve(response_text.size());
    for (char c : response_text) {
        low.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    for (const auto& keyword : keywords) {
        if (!keyword.empty() && low.find(keyword) != std::string::npos) return true;
    }
    return false;
}

OverrideStore OverrideStore::load(const std::string& path) {
    OverrideStore store;
    std::ifstream in(path);
    if (!in) throw_error(ErrorCode::IoFailure, "cannot open override file " + path);
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json row;
        try {
            row = json::parse(line);
        } catch (const json::exception& e) {
            throw_error(ErrorCode::ParseFailure,
                        path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        const auto verdict = verdict_from_name(row.at("verdict").get<std::string>());
        if (!verdict) {
            throw_error(ErrorCode::ParseFailure,
                        path + ":" + std::to_string(line_no) + ": bad verdict");
        }
        store.add(row.at("question_id").get<std::string>(),
                  row.at("answer").get<std::string>(), *verdict);
    }
    return store;
}

void OverrideStore::add(const std::string& question_id, const std::string& answer,
                        Verdict v) {
    overrides_[{question_id, metrics::normalize_answer(answer)}] = v;
}

std::optional<Verdict> OverrideStore::lookup(const std::string& question_id,
                                             const std::string& answer) const {
    auto it = overrides_.find({question_id, metrics::normalize_answer(answer)});
    if (it == overrides_.end()) return std::nullopt;
    return it->second;
}

std::string render_crosstab_markdown(const CategoryTally& tally,
                                     const std::string& title) {
    std::ostringstream out;
    out.setf(std::ios::fixed);
    out.precision(2);
    out << "### " << title << "\n\n";
    out << "| Ground Truth \\ Self-evaluation | Incorrect | Correct | Unverifiable |\n";
    out << "|---|---|---|---|\n";
    static const char* rows[] = {"Incorrect", "Correct", "Unverifiable"};
    for (int truth = 0; truth < 3; ++truth) {
        out << "| **" << rows[truth] << "** |";
        for (int self = 0; self < 3; ++self) {
            out << " " << tally.crosstab[truth][self] << " |";
        }
        out << "\n";
    }
    out << "\n";
    out << "- pairs: " << tally.total << "\n";
    out << "- unqualified: " << tally.unqualified_pct << "%\n";
    out << "- misaligned self-evaluation: " << tally.inaccurate_pct << "%\n";
    out << "- hidden correct: " << tally.hidden_correct_pct << "%\n";
    out << "- admission aligned: " << tally.admission_aligned_pct << "%\n";
    return out.str();
}

}  // namespace bprobe::verification
