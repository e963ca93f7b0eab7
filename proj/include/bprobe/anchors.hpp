#ifndef BPROBE_ANCHORS_HPP
#define BPROBE_ANCHORS_HPP

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "bprobe/linalg.hpp"

namespace bprobe::anchors {

/// Abstracts the auxiliary model's tokenizer. encode never returns an empty
/// sequence for a nonempty string; every id is below vocab_size.
class Tokenizer {
public:
    virtual ~Tokenizer() = default;
    virtual std::vector<int> encode(const std::string& text) const = 0;
    virtual std::string decode(const std::vector<int>& ids) const = 0;
    virtual std::int64_t vocab_size() const = 0;
};

/// Word-level test tokenizer backed by a vocabulary file, one token string
/// per line. A leading "\xE2\x96\x81" (the SentencePiece low line) marks a
/// space-prefixed variant; "<nl>" stands for a newline; "<unk>" catches
/// anything else. Words with no vocabulary entry fall back to per-character
/// tokens, then to <unk>.
class VocabTokenizer : public Tokenizer {
public:
    explicit VocabTokenizer(std::vector<std::string> tokens);
    static VocabTokenizer load(const std::string& path);

    std::vector<int> encode(const std::string& text) const override;
    std::string decode(const std::vector<int>& ids) const override;
    std::int64_t vocab_size() const override { return static_cast<std::int64_t>(tokens_.size()); }

    int id_of(const std::string& token) const;  // -1 when absent
    const std::string& token(int id) const { return tokens_.at(id); }

private:
    std::vector<std::string> tokens_;
    std::map<std::string, int> index_;
    int unk_id_ = -1;
    int nl_id_ = -1;
};

struct AnchorOptions {
    bool include_space_variant = true;   // also anchor the " " + entity encoding
    bool include_case_variants = false;  // capitalized/lowercased first tokens
    bool strip_leading_articles = false; // drop a leading "the"/"a"/"an"
};

/// The set of anchor token ids for a question: the first token of every
/// answer entity's encoding, deduplicated, with provenance.
struct AnchorSet {
    std::vector<int> token_ids;                          // ordered, unique
    std::map<int, std::vector<std::string>> source_entities;
    std::vector<std::string> warnings;                   // skipped entities
};

AnchorSet extract_anchors(const std::vector<std::string>& entities,
                          const Tokenizer& tokenizer,
                          const AnchorOptions& options = {});

linalg::AnswerMassVector anchors_to_mass(const AnchorSet& anchor_set,
                                         std::int64_t vocab_size);

}  // namespace bprobe::anchors

#endif  // BPROBE_ANCHORS_HPP
