#include "bprobe/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "bprobe/demo.hpp"
#include "bprobe/errors.hpp"
#include "bprobe/metrics.hpp"
#include "bprobe/mock_model.hpp"
#include "bprobe/remote_model.hpp"
#include "bprobe/rng.hpp"
#include "bprobe/verification.hpp"

namespace bprobe::commands {

using json = nlohmann::json;

void save_discovery(const std::string& path,
                    const std::vector<DiscoveryRecord>& records) {
    std::ofstream out(path);
    if (!out) {
        throw_error(ErrorCode::IoFailure, "cannot write discovery file: " + path);
    }
    for (const auto& r : records) {
        json doc = {{"question_id", r.question_id},
                    {"mode", r.mode},
                    {"lambda", r.lambda},
                    {"raw_entities", r.raw_entities},
                    {"new_entities", r.new_entities},
                    {"aor", r.aor},
                    {"response_text", r.response_text}};
        out << doc.dump() << "\n";
    }
}

std::vector<DiscoveryRecord> load_discovery(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw_error(ErrorCode::IoFailure, "cannot open discovery file: " + path);
    }
    std::vector<DiscoveryRecord> records;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json doc = json::parse(line);
        DiscoveryRecord r;
        r.question_id = doc.at("question_id").get<std::string>();
        r.mode = doc.at("mode").get<std::string>();
        r.lambda = doc.at("lambda").get<double>();
        r.raw_entities = doc.at("raw_entities").get<std::vector<std::string>>();
        r.new_entities = doc.at("new_entities").get<std::vector<std::string>>();
        r.aor = doc.at("aor").get<double>();
        r.response_text = doc.at("response_text").get<std::string>();
        records.push_back(std::move(r));
    }
    return records;
}

std::unique_ptr<clients::ChatClient> make_chat_client(const RunConfig& config) {
    if (!config.replay_transcript.empty()) {
        return std::make_unique<clients::ReplayChatClient>(
            clients::ReplayChatClient::load(config.replay_transcript));
    }
    std::string url = config.api_url;
    std::string key = config.api_key;
    if (url.empty()) {
        const char* env = std::getenv("BP_API_URL");
        if (env != nullptr) url = env;
    }
    if (key.empty()) {
        const char* env = std::getenv("BP_API_KEY");
        if (env != nullptr) key = env;
    }
    if (url.empty()) {
        throw_error(ErrorCode::ConfigInvalid,
                    "no chat client configured: set paths.replay, client.api_url, "
                    "or BP_API_URL");
    }
    clients::RetryPolicy retry;
    retry.attempts = config.retry_attempts;
    return std::make_unique<clients::HttpChatClient>(
        url, key, retry, nullptr, config.rate_limit_per_minute);
}

std::unique_ptr<decoder::LanguageModel> make_language_model(const RunConfig& config) {
    if (!config.remote_socket.empty()) {
        if (config.embedding_file.empty()) {
            throw_error(ErrorCode::ConfigInvalid,
                        "remote model needs paths.embedding for the output head");
        }
        auto emb = linalg::EmbeddingMatrix::load_binary(config.embedding_file);
        return std::make_unique<RemoteLogitsModel>(
            std::move(emb), connect_unix_socket(config.remote_socket),
            config.remote_eos_token);
    }
    if (!config.model_file.empty()) {
        return std::make_unique<mock::MockLanguageModel>(
            mock::MockLanguageModel::load(config.model_file));
    }
    return std::make_unique<mock::MockLanguageModel>(demo::model());
}

std::unique_ptr<anchors::Tokenizer> make_tokenizer(const RunConfig& config) {
    if (!config.vocab_file.empty()) {
        return std::make_unique<anchors::VocabTokenizer>(
            anchors::VocabTokenizer::load(config.vocab_file));
    }
    return std::make_unique<anchors::VocabTokenizer>(demo::tokenizer());
}

namespace {

std::string dataset_config_hash(const RunConfig& config) {
    std::uint64_t h = hash_string(0, config.collection.followup_template);
    h ^= static_cast<std::uint64_t>(config.collection.rounds) * 0x9e3779b97f4a7c15ULL;
    h ^= config.seed;
    std::ostringstream out;
    out << std::hex << h;
    return out.str();
}

}  // namespace

int cmd_build_dataset(const RunConfig& config) {
    auto client = make_chat_client(config);

    // Resume: completed records from an earlier run are kept verbatim,
    // partial ones continue from the rounds they already hold.
    std::map<std::string, dataset::QuestionRecord> existing;
    if (std::filesystem::exists(config.dataset_path)) {
        for (auto& record : dataset::load_dataset(config.dataset_path)) {
            existing[record.id] = std::move(record);
        }
    }

    auto domains = dataset::generate_domains(*client, config.domains_raw_path);
    std::cout << "domains: " << domains.size() << "\n";

    std::vector<std::pair<std::string, std::string>> questions;
    for (const auto& domain : domains) {
        auto batch = dataset::generate_questions(*client, domain, config.collection);
        for (const auto& warning : batch.warnings) {
            std::cerr << "warning: " << warning << "\n";
        }
        for (auto& question : batch.questions) {
            if (config.max_questions > 0 &&
                static_cast<int>(questions.size()) >= config.max_questions) {
                break;
            }
            questions.emplace_back(domain, std::move(question));
        }
    }
    std::cout << "questions: " << questions.size() << "\n";

    std::vector<dataset::QuestionRecord> records;
    bool any_partial = false;
    for (const auto& [domain, question] : questions) {
        const std::string id = dataset::make_question_id(question);
        dataset::QuestionRecord record;
        auto it = existing.find(id);
        if (it != existing.end()) {
            record = it->second;
        } else {
            record.id = id;
            record.domain = domain;
            record.question = question;
        }

        if (record.entities.empty() || record.partial) {
            try {
                dataset::collect_answers(*client, record, config.collection);
                record.entities = dataset::extract_entities(record.rounds);
                std::tie(record.common, record.ambiguous) =
                    dataset::split_common_ambiguous(record.entities,
                                                    config.split_fraction);
            } catch (const Error& e) {
                record.partial = true;
                any_partial = true;
                std::cerr << "question " << id << ": " << e.what() << "\n";
            }
        }
        records.push_back(std::move(record));
    }

    dataset::save_dataset(config.dataset_path, records, dataset_config_hash(config));
    std::cout << "wrote " << records.size() << " records to "
              << config.dataset_path << "\n";
    return any_partial ? kExitPartial : kExitSuccess;
}

DiscoveryRecord discover_question(decoder::LanguageModel& model,
                                  const anchors::Tokenizer& tokenizer,
                                  const dataset::QuestionRecord& record,
                                  const RunConfig& config) {
    auto anchor_set =
        anchors::extract_anchors(record.entities, tokenizer, config.anchor_options);
    auto plan =
        linalg::build_suppression_plan(model.embedding(), anchor_set.token_ids);

    decoder::SamplerConfig sampler = config.sampler;
    // Independent per-question stream, stable under dataset reordering.
    sampler.seed = hash_string(config.seed, record.id);

    const auto prompt = tokenizer.encode(record.question);
    const linalg::SuppressionPlan* plan_ptr =
        sampler.mode == decoder::SuppressionMode::PromptOnly ? nullptr : &plan;
    auto result = decoder::decode(model, prompt, plan_ptr, sampler, &tokenizer);

    DiscoveryRecord out;
    out.question_id = record.id;
    out.mode = decoder::mode_name(sampler.mode);
    out.lambda = sampler.lambda;
    out.response_text = result.text;
    out.raw_entities = dataset::extract_entities({result.text});
    out.aor = metrics::answer_overlap_rate(out.raw_entities, record.entities,
                                           config.aor_granularity);

    std::set<std::string> already_given;
    for (const auto& entity : record.entities) {
        already_given.insert(metrics::normalize_answer(entity));
    }
    for (const auto& entity : out.raw_entities) {
        if (!already_given.count(metrics::normalize_answer(entity))) {
            out.new_entities.push_back(entity);
        }
    }
    return out;
}

int cmd_discover(const RunConfig& config) {
    auto records = dataset::load_dataset(config.dataset_path);
    auto model = make_language_model(config);
    auto tokenizer = make_tokenizer(config);

    std::vector<DiscoveryRecord> discoveries;
    int failures = 0;
    for (const auto& record : records) {
        if (record.partial || record.entities.empty()) {
            std::cerr << "skipping incomplete record " << record.id << "\n";
            ++failures;
            continue;
        }
        try {
            discoveries.push_back(
                discover_question(*model, *tokenizer, record, config));
        } catch (const Error& e) {
            std::cerr << "question " << record.id << ": " << e.what() << "\n";
            ++failures;
        }
    }

    save_discovery(config.discovery_path, discoveries);
    std::cout << "wrote " << discoveries.size() << " discovery records to "
              << config.discovery_path << "\n";
    return failures > 0 ? kExitPartial : kExitSuccess;
}

namespace {

json tally_to_json(const verification::CategoryTally& tally) {
    json rows = json::array();
    for (const auto& row : tally.crosstab) {
        rows.push_back(json{row[0], row[1], row[2]});
    }
    return json{{"total", tally.total},
                {"crosstab", rows},
                {"unqualified_pct", tally.unqualified_pct},
                {"inaccurate_pct", tally.inaccurate_pct},
                {"hidden_correct_pct", tally.hidden_correct_pct},
                {"unexpected_wrong_pct", tally.unexpected_wrong_pct},
                {"admission_aligned_pct", tally.admission_aligned_pct}};
}

verification::CategoryTally tally_from_json(const json& doc) {
    verification::CategoryTally tally;
    tally.total = doc.at("total").get<std::size_t>();
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            tally.crosstab[r][c] = doc.at("crosstab")[r][c].get<double>();
        }
    }
    tally.unqualified_pct = doc.at("unqualified_pct").get<double>();
    tally.inaccurate_pct = doc.at("inaccurate_pct").get<double>();
    tally.hidden_correct_pct = doc.at("hidden_correct_pct").get<double>();
    tally.unexpected_wrong_pct = doc.at("unexpected_wrong_pct").get<double>();
    tally.admission_aligned_pct = doc.at("admission_aligned_pct").get<double>();
    return tally;
}

std::string format_metric(double v) {
    std::ostringstream out;
    out.setf(std::ios::fixed);
    out.precision(4);
    out << v;
    return out.str();
}

std::string render_report_markdown(const json& report) {
    std::ostringstream md;
    md << "# Knowledge boundary probe report\n\n";
    md << "Mode: " << report.value("mode", std::string("?")) << ", lambda "
       << report.value("lambda", 0.0) << ", seed " << report.value("seed", 0ULL)
       << ".\n\n";

    md << "## Aggregate metrics\n\n";
    if (report.contains("aggregate") && !report.at("aggregate").is_null()) {
        const auto& agg = report.at("aggregate");
        md << "| EM | F1 | AOR | BLEU-1 | BLEU-2 | BLEU-3 | BLEU-4 |\n";
        md << "| --- | --- | --- | --- | --- | --- | --- |\n";
        md << "| " << format_metric(agg.at("em").get<double>()) << " | "
           << format_metric(agg.at("f1").get<double>()) << " | "
           << format_metric(agg.at("aor").get<double>());
        for (const auto& b : agg.at("bleu")) {
            md << " | " << format_metric(b.get<double>());
        }
        md << " |\n\n";
    } else {
        md << "No discovered answers to score.\n\n";
    }

    const auto render_tally = [&md](const json& report_section,
                                    const std::string& title) {
        if (report_section.is_null()) {
            md << "## " << title << "\n\nNo answers evaluated.\n\n";
            return;
        }
        md << verification::render_crosstab_markdown(
                  tally_from_json(report_section), title)
           << "\n";
    };
    render_tally(report.at("target_generated"), "Target-generated answers");
    render_tally(report.at("auxiliary_discovered"), "Auxiliary-discovered answers");

    md << "## Per-question results\n\n";
    md << "| question | entities | ambiguous | discovered | AOR | EM | F1 |\n";
    md << "| --- | --- | --- | --- | --- | --- | --- |\n";
    for (const auto& q : report.at("questions")) {
        md << "| " << q.at("question").get<std::string>() << " | "
           << q.at("entities").get<std::size_t>() << " | "
           << q.at("ambiguous").get<std::size_t>() << " | "
           << q.at("discovered").get<std::size_t>() << " | ";
        const auto opt = [&](const char* key) {
            return q.at(key).is_null() ? std::string("-")
                                       : format_metric(q.at(key).get<double>());
        };
        md << opt("aor") << " | " << opt("em") << " | " << opt("f1") << " |\n";
    }
    md << "\n";

    if (report.contains("gaps") && !report.at("gaps").empty()) {
        md << "## Gaps\n\n";
        for (const auto& gap : report.at("gaps")) {
            md << "- " << gap.at("question_id").get<std::string>() << " / "
               << gap.at("answer").get<std::string>() << ": "
               << gap.at("error").get<std::string>() << "\n";
        }
        md << "\n";
    }
    return md.str();
}

double mean(const std::vector<double>& values) {
    double sum = 0.0;
    for (double v : values) sum += v;
    return values.empty() ? 0.0 : sum / static_cast<double>(values.size());
}

}  // namespace

int cmd_evaluate(const RunConfig& config) {
    auto records = dataset::load_dataset(config.dataset_path);
    auto discoveries = load_discovery(config.discovery_path);
    auto client = make_chat_client(config);
    clients::EvalCache cache =
        config.cache_path.empty() ? clients::EvalCache()
                                  : clients::EvalCache(config.cache_path);

    verification::OverrideStore overrides;
    if (!config.override_file.empty()) {
        overrides = verification::OverrideStore::load(config.override_file);
    }
    clients::VerdictRules rules = config.verdict_rules_file.empty()
                                      ? clients::VerdictRules::defaults()
                                      : clients::VerdictRules::load(
                                            config.verdict_rules_file);
    clients::EvaluateOptions options;
    options.retry.attempts = config.retry_attempts;
    options.rules = &rules;

    std::map<std::string, const dataset::QuestionRecord*> record_by_id;
    for (const auto& record : records) record_by_id[record.id] = &record;

    std::vector<verification::EvaluationPair> pairs;
    json answers = json::array();
    json gaps = json::array();

    const auto evaluate_answer = [&](const dataset::QuestionRecord& record,
                                     const std::string& answer,
                                     verification::Provenance provenance) {
        try {
            auto self_rec = clients::self_evaluate(
                *client, record.question, answer, clients::self_eval_template(),
                cache, record.id, options);
            auto rag_rec = clients::rag_evaluate(
                *client, record.question, answer, clients::rag_eval_template(),
                cache, record.id, options);

            verification::EvaluationPair pair{
                metrics::NormalizedEntity(answer), record.id, self_rec.verdict,
                rag_rec.verdict, provenance};
            if (auto forced = overrides.lookup(record.id, answer)) {
                pair.truth_verdict = *forced;
            }
            auto categories = verification::categorize(pair);

            json cats = json::array();
            if (categories.count(verification::Category::Unqualified)) cats.push_back("unqualified");
            if (categories.count(verification::Category::Inaccurate)) cats.push_back("inaccurate");
            if (categories.count(verification::Category::HiddenCorrect)) cats.push_back("hidden_correct");
            if (categories.count(verification::Category::UnexpectedWrong)) cats.push_back("unexpected_wrong");

            answers.push_back(
                {{"question_id", record.id},
                 {"answer", answer},
                 {"provenance", verification::provenance_name(provenance)},
                 {"self", verification::verdict_name(pair.self_verdict)},
                 {"truth", verification::verdict_name(pair.truth_verdict)},
                 {"self_parse_failed", self_rec.parse_failed},
                 {"truth_parse_failed", rag_rec.parse_failed},
                 {"citations", rag_rec.citations},
                 {"categories", cats}});
            pairs.push_back(std::move(pair));
        } catch (const Error& e) {
            gaps.push_back({{"question_id", record.id},
                            {"answer", answer},
                            {"error", e.what()}});
        }
    };

    for (const auto& record : records) {
        for (const auto& answer : record.ambiguous) {
            evaluate_answer(record, answer,
                            verification::Provenance::TargetGenerated);
        }
    }
    for (const auto& discovery : discoveries) {
        auto it = record_by_id.find(discovery.question_id);
        if (it == record_by_id.end()) {
            gaps.push_back({{"question_id", discovery.question_id},
                            {"answer", ""},
                            {"error", "discovery references unknown question"}});
            continue;
        }
        for (const auto& answer : discovery.new_entities) {
            evaluate_answer(*it->second, answer,
                            verification::Provenance::AuxiliaryDiscovered);
        }
    }

    // Verified ground truth per question: answers the truth verdict holds
    // correct, across both provenances.
    std::map<std::string, std::set<std::string>> verified;
    for (const auto& pair : pairs) {
        if (pair.truth_verdict == verification::Verdict::Correct) {
            verified[pair.question_id].insert(pair.answer.norm);
        }
    }

    json questions = json::array();
    std::vector<double> ems, f1s, aors;
    std::array<std::vector<double>, 4> bleus;
    for (const auto& record : records) {
        json row = {{"id", record.id},
                    {"question", record.question},
                    {"entities", record.entities.size()},
                    {"ambiguous", record.ambiguous.size()},
                    {"discovered", 0},
                    {"aor", nullptr},
                    {"em", nullptr},
                    {"f1", nullptr},
                    {"bleu", nullptr}};

        const DiscoveryRecord* discovery = nullptr;
        for (const auto& d : discoveries) {
            if (d.question_id == record.id) {
                discovery = &d;
                break;
            }
        }
        if (discovery != nullptr) {
            row["discovered"] = discovery->new_entities.size();
            row["aor"] = discovery->aor;
            aors.push_back(discovery->aor);

            const auto& truth = verified[record.id];
            if (!discovery->new_entities.empty() && !truth.empty()) {
                const double em = metrics::exact_match(discovery->new_entities,
                                                       truth, config.em_mode);
                const double f1 =
                    metrics::f1_word_overlap(discovery->new_entities, truth);
                row["em"] = em;
                row["f1"] = f1;
                ems.push_back(em);
                f1s.push_back(f1);
            }

            std::string reference;
            for (const auto& round : record.rounds) {
                if (!reference.empty()) reference += "\n";
                reference += round;
            }
            json bleu_row = json::array();
            for (int n = 1; n <= 4; ++n) {
                const double b =
                    metrics::bleu_n(discovery->response_text, reference, n);
                bleu_row.push_back(b);
                bleus[static_cast<std::size_t>(n - 1)].push_back(b);
            }
            row["bleu"] = bleu_row;
        }
        questions.push_back(std::move(row));
    }

    json report;
    report["mode"] = discoveries.empty() ? decoder::mode_name(config.sampler.mode)
                                         : discoveries.front().mode;
    report["lambda"] = discoveries.empty() ? config.sampler.lambda
                                           : discoveries.front().lambda;
    report["seed"] = config.seed;
    report["questions"] = std::move(questions);
    report["answers"] = std::move(answers);
    report["gaps"] = gaps;

    if (!aors.empty()) {
        json agg = {{"em", mean(ems)},
                    {"f1", mean(f1s)},
                    {"aor", mean(aors)},
                    {"bleu", json::array()}};
        for (const auto& per_n : bleus) agg["bleu"].push_back(mean(per_n));
        report["aggregate"] = std::move(agg);
    } else {
        report["aggregate"] = nullptr;
    }

    const auto tally_or_null = [&](verification::ProvenanceFilter filter) -> json {
        try {
            return tally_to_json(verification::tally(pairs, filter));
        } catch (const Error&) {
            return nullptr;  // nothing evaluated under this provenance
        }
    };
    report["target_generated"] =
        tally_or_null(verification::ProvenanceFilter::TargetGenerated);
    report["auxiliary_discovered"] =
        tally_or_null(verification::ProvenanceFilter::AuxiliaryDiscovered);

    std::filesystem::create_directories(config.report_dir);
    const auto json_path = std::filesystem::path(config.report_dir) / "report.json";
    const auto md_path = std::filesystem::path(config.report_dir) / "report.md";
    {
        std::ofstream out(json_path);
        if (!out) {
            throw_error(ErrorCode::IoFailure,
                        "cannot write report: " + json_path.string());
        }
        out << report.dump(2) << "\n";
    }
    {
        std::ofstream out(md_path);
        if (!out) {
            throw_error(ErrorCode::IoFailure,
                        "cannot write report: " + md_path.string());
        }
        out << render_report_markdown(report);
    }
    std::cout << "wrote " << json_path.string() << " and " << md_path.string()
              << "\n";
    return gaps.empty() ? kExitSuccess : kExitPartial;
}

int cmd_report(const RunConfig& config) {
    const auto json_path = std::filesystem::path(config.report_dir) / "report.json";
    std::ifstream in(json_path);
    if (!in) {
        throw_error(ErrorCode::IoFailure,
                    "cannot open report: " + json_path.string() +
                        " (run evaluate first)");
    }
    json report = json::parse(in);
    const std::string markdown = render_report_markdown(report);

    const auto md_path = std::filesystem::path(config.report_dir) / "report.md";
    std::ofstream out(md_path);
    if (!out) {
        throw_error(ErrorCode::IoFailure, "cannot write report: " + md_path.string());
    }
    out << markdown;
    std::cout << markdown;
    return kExitSuccess;
}

namespace {

bool approx(double a, double b, double tol) { return std::abs(a - b) <= tol; }

}  // namespace

int cmd_selfcheck(const RunConfig&) {
    struct Check {
        std::string name;
        bool ok;
    };
    std::vector<Check> checks;
    const auto run = [&checks](const std::string& name, auto&& fn) {
        bool ok = false;
        try {
            ok = fn();
        } catch (const std::exception& e) {
            std::cerr << name << " raised: " << e.what() << "\n";
        }
        checks.push_back({name, ok});
    };

    run("semantic estimate on the worked 4x2 head", [] {
        Eigen::MatrixXd m(4, 2);
        m << 1, 0, 0, 1, 1, 1, 0, 0;
        linalg::EmbeddingMatrix emb(m);
        auto plan = linalg::build_suppression_plan(emb, {0, 1});
        return approx(plan.estimate.vector[0], 1.0 / 6.0, 1e-12) &&
               approx(plan.estimate.vector[1], 1.0 / 6.0, 1e-12) &&
               approx(plan.suppression.vector[2], 1.0 / 3.0, 1e-12) &&
               approx(plan.suppression.vector[3], 0.0, 1e-12);
    });

    run("projector idempotence on a random head", [] {
        auto emb = linalg::EmbeddingMatrix::random(50, 8, 11);
        double worst = 0.0;
        for (int trial = 0; trial < 3; ++trial) {
            SplitMix64 rng(100 + static_cast<std::uint64_t>(trial));
            Eigen::VectorXd delta = Eigen::VectorXd::Zero(50);
            delta[static_cast<int>(rng.next_below(50))] = 0.5;
            delta[static_cast<int>(rng.next_below(50))] += 0.5;
            Eigen::VectorXd proj = emb.data() * emb.solve_least_squares(delta);
            Eigen::VectorXd twice = emb.data() * emb.solve_least_squares(proj);
            worst = std::max(worst, (twice - proj).cwiseAbs().maxCoeff());
        }
        return worst <= 1e-8;
    });

    run("answer mass sums to one over unique anchors", [] {
        auto mass = linalg::build_answer_mass({3, 7, 3, 9}, 10);
        return approx(mass.sum(), 1.0, 1e-12) && mass.n == 3;
    });

    run("logit adjustment is an exact subtraction", [] {
        SplitMix64 rng(5);
        Eigen::VectorXd y1(32), dy(32);
        for (int i = 0; i < 32; ++i) {
            y1[i] = rng.next_signed();
            dy[i] = rng.next_signed();
        }
        for (double lambda : {0.0, 60.0, 70.0, 80.0}) {
            Eigen::VectorXd y2 =
                linalg::adjust_logits(y1, linalg::SuppressionVector{dy}, lambda);
            if (((y2 + lambda * dy) - y1).cwiseAbs().maxCoeff() > 1e-12) return false;
        }
        return true;
    });

    run("nucleus keeps the smallest covering prefix", [] {
        Eigen::VectorXd probs(3);
        probs << 0.6, 0.3, 0.1;
        auto kept = decoder::nucleus_set(probs, 0.6);
        return kept == std::vector<int>{0};
    });

    run("repetition penalty divides positives, multiplies negatives", [] {
        Eigen::VectorXd logits(2);
        logits << 2.0, -1.0;
        auto adjusted = decoder::apply_repetition_penalty(logits, {0, 1}, 2.0);
        return approx(adjusted[0], 1.0, 1e-12) && approx(adjusted[1], -2.0, 1e-12);
    });

    run("normalization is idempotent on its own output", [] {
        for (const std::string s : {"Peas ", "Berries", "koala", "Foxes", "Languages"}) {
            const std::string once = metrics::normalize_answer(s);
            if (metrics::normalize_answer(once) != once) return false;
        }
        return metrics::normalize_answer("Peas ") == "pea" &&
               metrics::normalize_answer("Berries") == "berry";
    });

    run("75/25 split reproduces the 52 -> 13 datapoint", [] {
        std::vector<std::string> entities(52, "x");
        for (std::size_t i = 0; i < entities.size(); ++i) {
            entities[i] = "e" + std::to_string(i);
        }
        auto [common, ambiguous] = dataset::split_common_ambiguous(entities);
        return common.size() == 39 && ambiguous.size() == 13;
    });

    run("unigram overlap hand case", [] {
        return approx(metrics::bleu_n("the the the", "the cat", 1), 1.0 / 3.0, 1e-12);
    });

    run("demo model emits a parseable list and suppression removes anchors", [] {
        auto model = demo::model();
        auto tok = demo::tokenizer();
        auto record = demo::animals_record();
        RunConfig config;
        config.seed = 3;
        config.sampler.mode = decoder::SuppressionMode::PromptOnly;
        auto prompt_run = discover_question(model, tok, record, config);
        if (prompt_run.raw_entities.empty()) return false;

        config.sampler.mode = decoder::SuppressionMode::Suppress;
        auto suppress_run = discover_question(model, tok, record, config);
        std::set<std::string> known;
        for (const auto& e : record.entities) {
            known.insert(metrics::normalize_answer(e));
        }
        for (const auto& e : suppress_run.raw_entities) {
            if (known.count(metrics::normalize_answer(e))) return false;
        }
        return !suppress_run.raw_entities.empty();
    });

    bool all_ok = true;
    for (const auto& check : checks) {
        std::cout << (check.ok ? "ok   - " : "FAIL - ") << check.name << "\n";
        all_ok = all_ok && check.ok;
    }
    std::cout << (all_ok ? "selfcheck passed" : "selfcheck FAILED") << "\n";
    return all_ok ? kExitSuccess : kExitFatal;
}

}  // namespace bprobe::commands
