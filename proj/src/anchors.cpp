#include "bprobe/anchors.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

namespace bprobe::anchors {

namespace {

const std::string kSpaceMark = "\xE2\x96\x81";  // SentencePiece low line
const std::string kNewlineToken = "<nl>";
const std::string kUnkToken = "<unk>";

std::string trim(const std::string& s) {
    size_t begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    size_t end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return s;
}

}  // namespace

VocabTokenizer::VocabTokenizer(std::vector<std::string> tokens)
    : tokens_(std::move(tokens)) {
    for (int i = 0; i < static_cast<int>(tokens_.size()); ++i) {
        index_.emplace(tokens_[i], i);
    }
    auto it = index_.find(kUnkToken);
    unk_id_ = it == index_.end() ? -1 : it->second;
    it = index_.find(kNewlineToken);
    nl_id_ = it == index_.end() ? -1 : it->second;
}

VocabTokenizer VocabTokenizer::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw_error(ErrorCode::IoFailure, "cannot open vocab " + path);
    std::vector<std::string> tokens;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        tokens.push_back(line);
    }
    if (tokens.empty()) throw_error(ErrorCode::ParseFailure, path + ": empty vocab");
    return VocabTokenizer(std::move(tokens));
}

int VocabTokenizer::id_of(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? -1 : it->second;
}

std::vector<int> VocabTokenizer::encode(const std::string& text) const {
    std::vector<int> ids;
    std::string word;
    bool word_had_space = false;
    bool pending_space = false;

    auto flush = [&]() {
        if (word.empty()) return;
        // Prefer the space-marked form when the word followed whitespace.
        int id = -1;
        if (word_had_space) id = id_of(kSpaceMark + word);
        if (id < 0) id = id_of(word);
        if (id >= 0) {
            ids.push_back(id);
        } else {
            for (char c : word) {
                int cid = id_of(std::string(1, c));
                ids.push_back(cid >= 0 ? cid : unk_id_ >= 0 ? unk_id_ : 0);
            }
        }
        word.clear();
        word_had_space = false;
    };

    for (char c : text) {
        if (c == '\n') {
            flush();
            pending_space = false;
            if (nl_id_ >= 0) ids.push_back(nl_id_);
        } else if (c == ' ' || c == '\t' || c == '\r') {
            flush();
            pending_space = true;
        } else {
            if (word.empty()) {
                word_had_space = pending_space;
                pending_space = false;
            }
            word.push_back(c);
        }
    }
    flush();
    if (ids.empty() && !text.empty()) {
        ids.push_back(unk_id_ >= 0 ? unk_id_ : 0);
    }
    return ids;
}

std::string VocabTokenizer::decode(const std::vector<int>& ids) const {
    std::string out;
    for (int id : ids) {
        if (id < 0 || id >= static_cast<int>(tokens_.size())) continue;
        const std::string& tok = tokens_[id];
        if (tok == kNewlineToken) {
            out.push_back('\n');
        } else if (tok.rfind(kSpaceMark, 0) == 0) {
            out.push_back(' ');
            out.append(tok.substr(kSpaceMark.size()));
        } else {
            out.append(tok);
        }
    }
    return out;
}

namespace {

std::string strip_article(const std::string& entity) {
    static const std::vector<std::string> articles = {"the ", "a ", "an "};
    const std::string low = lower(entity);
    for (const auto& article : articles) {
        if (low.size() > article.size() && low.rfind(article, 0) == 0) {
            return trim(entity.substr(article.size()));
        }
    }
    return entity;
}

}  // namespace

AnchorSet extract_anchors(const std::vector<std::string>& entities,
                          const Tokenizer& tokenizer,
                          const AnchorOptions& options) {
    if (entities.empty()) {
        throw_error(ErrorCode::EmptyEntityList, "no entities to anchor");
    }

    AnchorSet result;
    std::set<int> seen;
    auto add = [&](int id, const std::string& entity) {
        if (id < 0 || id >= tokenizer.vocab_size()) {
            throw_error(ErrorCode::TokenOutOfRange,
                        "tokenizer produced id " + std::to_string(id));
        }
        if (seen.insert(id).second) result.token_ids.push_back(id);
        auto& sources = result.source_entities[id];
        if (std::find(sources.begin(), sources.end(), entity) == sources.end()) {
            sources.push_back(entity);
        }
    };

    size_t skipped = 0;
    for (const auto& raw : entities) {
        std::string entity = trim(raw);
        if (entity.empty()) {
            result.warnings.push_back("skipped empty entity");
            ++skipped;
            continue;
        }
        if (options.strip_leading_articles) entity = strip_article(entity);

        std::vector<std::string> forms = {entity};
        if (options.include_case_variants) {
            std::string low = lower(entity);
            std::string cap = low;
            if (!cap.empty()) cap[0] = static_cast<char>(std::toupper(cap[0]));
            for (const auto& form : {low, cap}) {
                if (std::find(forms.begin(), forms.end(), form) == forms.end()) {
                    forms.push_back(form);
                }
            }
        }

        for (const auto& form : forms) {
            add(tokenizer.encode(form).front(), raw);
            if (options.include_space_variant) {
                add(tokenizer.encode(" " + form).front(), raw);
            }
        }
    }

    if (skipped == entities.size()) {
        throw_error(ErrorCode::EmptyEntity, "all entities empty after trimming");
    }
    return result;
}

linalg::AnswerMassVector anchors_to_mass(const AnchorSet& anchor_set,
                                         std::int64_t vocab_size) {
    return linalg::build_answer_mass(anchor_set.token_ids, vocab_size);
}

}  // namespace bprobe::anchors
