#include "bprobe/mock_model.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace bprobe::mock {

using nlohmann::json;

MockLanguageModel::MockLanguageModel(linalg::EmbeddingMatrix embedding, Config config)
    : embedding_(std::move(embedding)), config_(std::move(config)) {
    if (config_.behavior == Behavior::kStructuredList) {
        const auto d = embedding_.cols();
        for (const auto* v : {&config_.slot_hidden, &config_.dash_hidden,
                              &config_.newline_hidden, &config_.eos_hidden}) {
            if (v->size() != d) {
                throw_error(ErrorCode::ConfigInvalid,
                            "structured mock hidden vectors must have length " +
                                std::to_string(d));
            }
        }
    }
}

Eigen::VectorXd MockLanguageModel::step(std::span<const int> context) {
    return embedding_.data() * context_map(context);
}

Eigen::VectorXd MockLanguageModel::context_map(std::span<const int> context) const {
    return config_.behavior == Behavior::kRandom ? random_hidden(context)
                                                 : structured_hidden(context);
}

Eigen::VectorXd MockLanguageModel::random_hidden(std::span<const int> context) const {
    SplitMix64 rng(hash_context(config_.seed, context));
    Eigen::VectorXd x(embedding_.cols());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        x[i] = config_.hidden_scale * rng.next_signed();
    }
    return x;
}

Eigen::VectorXd MockLanguageModel::structured_hidden(std::span<const int> context) const {
    const int last = context.empty() ? -1 : context.back();

    if (config_.entity_tokens.count(last)) return config_.newline_hidden;

    if (last == config_.dash_token) {
        Eigen::VectorXd x = config_.slot_hidden;
        if (config_.noise_scale > 0.0 && !config_.noise_dims.empty()) {
            SplitMix64 rng(hash_context(config_.seed, context));
            for (int dim : config_.noise_dims) {
                x[dim] += config_.noise_scale * rng.next_signed();
            }
        }
        return x;
    }

    // Line start (newline, prompt end, or anything else): open the next
    // bullet, or close the response once the entity budget is spent.
    if (config_.entities_per_response > 0) {
        int emitted = 0;
        for (int id : context) {
            if (config_.entity_tokens.count(id)) ++emitted;
        }
        if (emitted >= config_.entities_per_response) return config_.eos_hidden;
    }
    return config_.dash_hidden;
}

namespace {

json vector_to_json(const Eigen::VectorXd& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

Eigen::VectorXd vector_from_json(const json& arr) {
    Eigen::VectorXd v(arr.size());
    for (size_t i = 0; i < arr.size(); ++i) v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
    return v;
}

}  // namespace

void MockLanguageModel::save(const std::string& path,
                             const std::string& embedding_file) const {
    const auto dir = std::filesystem::path(path).parent_path();
    embedding_.save_binary((dir / embedding_file).string());

    json doc;
    doc["embedding_file"] = embedding_file;
    doc["seed"] = config_.seed;
    doc["eos_token"] = config_.eos_token;
    doc["hidden_scale"] = config_.hidden_scale;
    if (config_.behavior == Behavior::kStructuredList) {
        doc["behavior"] = "structured_list";
        doc["dash_token"] = config_.dash_token;
        doc["newline_token"] = config_.newline_token;
        doc["entity_tokens"] = config_.entity_tokens;
        doc["slot_hidden"] = vector_to_json(config_.slot_hidden);
        doc["dash_hidden"] = vector_to_json(config_.dash_hidden);
        doc["newline_hidden"] = vector_to_json(config_.newline_hidden);
        doc["eos_hidden"] = vector_to_json(config_.eos_hidden);
        doc["noise_dims"] = config_.noise_dims;
        doc["noise_scale"] = config_.noise_scale;
        doc["entities_per_response"] = config_.entities_per_response;
    } else {
        doc["behavior"] = "random";
    }

    std::ofstream out(path);
    if (!out) throw_error(ErrorCode::IoFailure, "cannot write " + path);
    out << doc.dump(2) << "\n";
}

MockLanguageModel MockLanguageModel::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw_error(ErrorCode::IoFailure, "cannot open mock model " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw_error(ErrorCode::ParseFailure, path + ": " + e.what());
    }

    const auto dir = std::filesystem::path(path).parent_path();
    const auto embedding_file = doc.at("embedding_file").get<std::string>();
    auto embedding = linalg::EmbeddingMatrix::load_binary((dir / embedding_file).string());

    Config cfg;
    cfg.seed = doc.value("seed", 1ULL);
    cfg.eos_token = doc.value("eos_token", -1);
    cfg.hidden_scale = doc.value("hidden_scale", 1.0);
    const std::string behavior = doc.value("behavior", "random");
    if (behavior == "structured_list") {
        cfg.behavior = Behavior::kStructuredList;
        cfg.dash_token = doc.at("dash_token").get<int>();
        cfg.newline_token = doc.at("newline_token").get<int>();
        for (int id : doc.at("entity_tokens")) cfg.entity_tokens.insert(id);
        cfg.slot_hidden = vector_from_json(doc.at("slot_hidden"));
        cfg.dash_hidden = vector_from_json(doc.at("dash_hidden"));
        cfg.newline_hidden = vector_from_json(doc.at("newline_hidden"));
        cfg.eos_hidden = vector_from_json(doc.at("eos_hidden"));
        cfg.noise_dims = doc.value("noise_dims", std::vector<int>{});
        cfg.noise_scale = doc.value("noise_scale", 0.0);
        cfg.entities_per_response = doc.value("entities_per_response", 0);
    } else if (behavior != "random") {
        throw_error(ErrorCode::ParseFailure, path + ": unknown behavior " + behavior);
    }
    return MockLanguageModel(std::move(embedding), std::move(cfg));
}

}  // namespace bprobe::mock
