#include "bprobe/demo.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

#include "bprobe/errors.hpp"
#include "bprobe/metrics.hpp"

namespace bprobe::demo {

namespace {

// Vocabulary layout. Ids 4..7 are the "known" canonical entities, 8..11
// their near-duplicate surfaces, 12..19 entities the anchors do not cover.
constexpr int kUnk = 0, kNewline = 1, kDash = 2, kEos = 3;
constexpr int kCanonicalBase = 4, kVariantBase = 8, kNovelBase = 12;
constexpr int kFamilies = 4, kNovels = 8;

const std::vector<std::string>& canonical_surfaces() {
    static const std::vector<std::string> v = {"Koala", "Platypus", "Wombat",
                                               "Echidna"};
    return v;
}

const std::vector<std::string>& variant_surfaces() {
    static const std::vector<std::string> v = {"koalas", "platypuses", "wombats",
                                               "echidnas"};
    return v;
}

const std::vector<std::string>& novel_surfaces() {
    static const std::vector<std::string> v = {"Quokka",    "Numbat", "Bilby",
                                               "Dingo",     "Cassowary",
                                               "Kookaburra", "Taipan", "Dugong"};
    return v;
}

const std::string kAnimalsQuestion =
    "Tell me a list of land animals unique to Australia.";
const std::string kFruitsQuestion =
    "Tell me a list of fruits that grow on trees in tropical regions.";
const std::string kLanguagesQuestion =
    "Tell me a list of official languages spoken in European countries.";

// Scale of the near-duplicate rows relative to their canonical direction.
constexpr double kVariantScale = 0.875;
// Raw logits the slot activation produces for each tier.
constexpr double kKnownLogit = 8.0, kNovelLogit = 5.0, kStructureLogit = 30.0;

constexpr int kEntitiesPerResponse = 6;
constexpr std::uint64_t kModelSeed = 2026;

}  // namespace

std::vector<std::string> vocabulary() {
    std::vector<std::string> tokens = {"<unk>", "<nl>", "-", "<eos>"};
    for (const auto& s : canonical_surfaces()) tokens.push_back(s);
    for (const auto& s : variant_surfaces()) tokens.push_back(s);
    for (const auto& s : novel_surfaces()) tokens.push_back(s);
    // Prompt words, so the worked question encodes cleanly.
    for (const char* w : {"Tell", "me", "a", "list", "of", "land", "animals",
                          "unique", "to", "Australia."}) {
        tokens.emplace_back(w);
    }
    return tokens;
}

anchors::VocabTokenizer tokenizer() { return anchors::VocabTokenizer(vocabulary()); }

linalg::EmbeddingMatrix embedding() {
    const auto tokens = vocabulary();
    const Eigen::Index rows = static_cast<Eigen::Index>(tokens.size());
    // Dims 0..3 carry one entity family each (canonical + near-duplicate),
    // 4..11 one novel entity each, 12..14 the structure tokens.
    const Eigen::Index dims = kFamilies + kNovels + 3;
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(rows, dims);
    for (int f = 0; f < kFamilies; ++f) {
        m(kCanonicalBase + f, f) = 1.0;
        m(kVariantBase + f, f) = kVariantScale;
    }
    for (int j = 0; j < kNovels; ++j) {
        m(kNovelBase + j, kFamilies + j) = 1.0;
    }
    m(kDash, kFamilies + kNovels) = 1.0;
    m(kNewline, kFamilies + kNovels + 1) = 1.0;
    m(kEos, kFamilies + kNovels + 2) = 1.0;
    return linalg::EmbeddingMatrix(std::move(m));
}

mock::MockLanguageModel model() {
    auto emb = embedding();
    const Eigen::Index dims = emb.cols();

    mock::MockLanguageModel::Config cfg;
    cfg.behavior = mock::MockLanguageModel::Behavior::kStructuredList;
    cfg.seed = kModelSeed;
    cfg.eos_token = kEos;
    cfg.dash_token = kDash;
    cfg.newline_token = kNewline;
    for (int id = kCanonicalBase; id < kNovelBase + kNovels; ++id) {
        cfg.entity_tokens.insert(id);
    }

    cfg.slot_hidden = Eigen::VectorXd::Zero(dims);
    for (int f = 0; f < kFamilies; ++f) cfg.slot_hidden[f] = kKnownLogit;
    for (int j = 0; j < kNovels; ++j) {
        cfg.slot_hidden[kFamilies + j] = kNovelLogit;
        cfg.noise_dims.push_back(kFamilies + j);
    }
    cfg.noise_scale = 1.0;

    cfg.dash_hidden = Eigen::VectorXd::Zero(dims);
    cfg.dash_hidden[kFamilies + kNovels] = kStructureLogit;
    cfg.newline_hidden = Eigen::VectorXd::Zero(dims);
    cfg.newline_hidden[kFamilies + kNovels + 1] = kStructureLogit;
    cfg.eos_hidden = Eigen::VectorXd::Zero(dims);
    cfg.eos_hidden[kFamilies + kNovels + 2] = kStructureLogit;
    cfg.entities_per_response = kEntitiesPerResponse;

    return mock::MockLanguageModel(std::move(emb), std::move(cfg));
}

const std::vector<std::string>& known_entities() { return canonical_surfaces(); }
const std::vector<std::string>& variant_entities() { return variant_surfaces(); }
const std::vector<std::string>& novel_entities() { return novel_surfaces(); }

namespace {

const std::vector<std::string>& animals_rounds() {
    static const std::vector<std::string> rounds = {
        "1. Koala\n2. Platypus",
        "1. Wombat\n2. koalas",
        "1. Echidna",
    };
    return rounds;
}

const std::vector<std::string>& fruits_rounds() {
    static const std::vector<std::string> rounds = {
        "1. Mango\n2. Papaya\n3. Durian",
        "1. Rambutan",
        "- Mangosteen",
    };
    return rounds;
}

const std::vector<std::string>& languages_rounds() {
    static const std::vector<std::string> rounds = {
        "1. French\n2. German",
        "1. Italian\n2. Spanish",
        "1. French",
    };
    return rounds;
}

dataset::QuestionRecord make_record(const std::string& domain,
                                    const std::string& question,
                                    const std::vector<std::string>& rounds) {
    dataset::QuestionRecord q;
    q.id = dataset::make_question_id(question);
    q.domain = domain;
    q.question = question;
    q.rounds = rounds;
    q.entities = dataset::extract_entities(rounds);
    std::tie(q.common, q.ambiguous) = dataset::split_common_ambiguous(q.entities);
    return q;
}

}  // namespace

dataset::QuestionRecord animals_record() {
    return make_record("Biology", kAnimalsQuestion, animals_rounds());
}

namespace {

enum class Scripted { Correct, Incorrect, Unverifiable };

struct VerdictPair {
    Scripted self;
    Scripted truth;
};

// Fixed judgment script per (question, normalized answer). Everything the
// mock model can emit has an entry, so replay runs never miss.
VerdictPair scripted_verdicts(const std::string& question, const std::string& answer) {
    const std::string norm = metrics::normalize_answer(answer);
    if (question == kAnimalsQuestion) {
        static const std::map<std::string, VerdictPair> table = {
            {"koala", {Scripted::Correct, Scripted::Correct}},
            {"platypus", {Scripted::Correct, Scripted::Correct}},
            {"wombat", {Scripted::Correct, Scripted::Correct}},
            // The target hedges on its own tail answer.
            {"echidna", {Scripted::Unverifiable, Scripted::Correct}},
            {"quokka", {Scripted::Correct, Scripted::Correct}},
            {"numbat", {Scripted::Correct, Scripted::Correct}},
            {"bilby", {Scripted::Correct, Scripted::Correct}},
            {"kookaburra", {Scripted::Correct, Scripted::Correct}},
            // Correct answers the target cannot vouch for.
            {"dingo", {Scripted::Unverifiable, Scripted::Correct}},
            {"cassowary", {Scripted::Incorrect, Scripted::Correct}},
            // Nobody can settle this one.
            {"taipan", {Scripted::Unverifiable, Scripted::Unverifiable}},
            // Marine, so wrong; the target believes it anyway.
            {"dugong", {Scripted::Correct, Scripted::Incorrect}},
        };
        auto it = table.find(norm);
        if (it != table.end()) return it->second;
        return {Scripted::Incorrect, Scripted::Incorrect};
    }
    if (question == kFruitsQuestion) {
        if (norm == "rambutan") return {Scripted::Correct, Scripted::Correct};
        if (norm == "mangosteen") return {Scripted::Unverifiable, Scripted::Correct};
        return {Scripted::Incorrect, Scripted::Incorrect};
    }
    if (question == kLanguagesQuestion) {
        if (norm == "spanish") return {Scripted::Correct, Scripted::Correct};
        return {Scripted::Incorrect, Scripted::Incorrect};
    }
    return {Scripted::Incorrect, Scripted::Incorrect};
}

std::string verdict_text(Scripted verdict, const std::string& answer, bool cite) {
    std::string body = "Let me think step by step about " + answer +
                       " and each condition in the question.";
    if (cite && verdict != Scripted::Unverifiable) {
        std::string slug = answer;
        for (auto& c : slug) {
            if (c == ' ') c = '_';
        }
        body += " Sources: https://example.org/wiki/" + slug + " and "
                "https://example.org/records/" + slug + ".";
    }
    body += "\n\n";
    switch (verdict) {
        case Scripted::Correct:
            body += "Yes, " + answer + " belongs to the list. The answer is yes.";
            break;
        case Scripted::Incorrect:
            body += "No, " + answer + " does not belong to the list.";
            break;
        case Scripted::Unverifiable:
            body += "I cannot confirm whether " + answer +
                    " qualifies; there is no reliable information available.";
            break;
    }
    return body;
}

std::vector<std::string> evaluable_surfaces(const dataset::QuestionRecord& record) {
    std::vector<std::string> surfaces;
    for (const auto& s : canonical_surfaces()) surfaces.push_back(s);
    for (const auto& s : variant_surfaces()) surfaces.push_back(s);
    for (const auto& s : novel_surfaces()) surfaces.push_back(s);
    for (const auto& s : record.ambiguous) surfaces.push_back(s);
    return surfaces;
}

}  // namespace

void write_replay_transcript(const std::string& path) {
    // The build-dataset half goes through the real prompt builders so the
    // recorded fingerprints match replayed runs exactly.
    clients::MockChatClient script(
        {
            "1. Biology",
            "1. " + kAnimalsQuestion + "\n2. " + kFruitsQuestion + "\n3. " +
                kLanguagesQuestion,
            animals_rounds()[0], animals_rounds()[1], animals_rounds()[2],
            fruits_rounds()[0], fruits_rounds()[1], fruits_rounds()[2],
            languages_rounds()[0], languages_rounds()[1], languages_rounds()[2],
        },
        /*strict=*/true);
    clients::RecordingChatClient recorder(script, path);

    dataset::CollectionConfig cfg;
    auto domains = dataset::generate_domains(recorder);
    for (const auto& domain : domains) {
        auto batch = dataset::generate_questions(recorder, domain, cfg);
        for (const auto& question : batch.questions) {
            dataset::QuestionRecord q;
            q.id = dataset::make_question_id(question);
            q.domain = domain;
            q.question = question;
            dataset::collect_answers(recorder, q, cfg);
        }
    }

    // Verdict responses for every surface either evaluation could ask about.
    for (const auto& record :
         {animals_record(), make_record("Biology", kFruitsQuestion, fruits_rounds()),
          make_record("Biology", kLanguagesQuestion, languages_rounds())}) {
        for (const auto& answer : evaluable_surfaces(record)) {
            const VerdictPair pair = scripted_verdicts(record.question, answer);
            clients::ReplayChatClient::record(
                path,
                {{"user",
                  clients::self_eval_template().fill(answer, record.question)}},
                verdict_text(pair.self, answer, false));
            clients::ReplayChatClient::record(
                path,
                {{"user",
                  clients::rag_eval_template().fill(answer, record.question)}},
                verdict_text(pair.truth, answer, true));
        }
    }
}

Workspace write_workspace(const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);

    Workspace ws;
    ws.root = dir;
    ws.vocab_file = (fs::path(dir) / "vocab.txt").string();
    ws.model_file = (fs::path(dir) / "model.json").string();
    ws.replay_file = (fs::path(dir) / "replay.jsonl").string();
    ws.config_file = (fs::path(dir) / "run.cfg").string();

    std::ofstream vocab_out(ws.vocab_file);
    if (!vocab_out) {
        throw_error(ErrorCode::IoFailure, "cannot write " + ws.vocab_file);
    }
    for (const auto& token : vocabulary()) vocab_out << token << "\n";
    vocab_out.close();

    model().save(ws.model_file, "model.embd");

    std::remove(ws.replay_file.c_str());  // the transcript writer appends
    write_replay_transcript(ws.replay_file);

    std::ofstream cfg_out(ws.config_file);
    if (!cfg_out) {
        throw_error(ErrorCode::IoFailure, "cannot write " + ws.config_file);
    }
    cfg_out << "paths.dataset = " << dir << "/dataset.jsonl\n"
            << "paths.discovery = " << dir << "/discovery.jsonl\n"
            << "paths.cache = " << dir << "/eval_cache.jsonl\n"
            << "paths.reports = " << dir << "/reports\n"
            << "paths.model = " << ws.model_file << "\n"
            << "paths.vocab = " << ws.vocab_file << "\n"
            << "paths.replay = " << ws.replay_file << "\n"
            << "sampler.lambda = 80\n"
            << "seed = 7\n";
    return ws;
}

}  // namespace bprobe::demo
