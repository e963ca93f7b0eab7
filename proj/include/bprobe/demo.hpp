#ifndef BPROBE_DEMO_HPP
#define BPROBE_DEMO_HPP

#include <string>
#include <vector>

#include "bprobe/anchors.hpp"
#include "bprobe/dataset.hpp"
#include "bprobe/mock_model.hpp"

namespace bprobe::demo {

/// Self-contained worked example: a small vocabulary, a structured mock
/// model whose bullet-list output is dominated by a handful of "known"
/// entities, and a matching question set with scripted chat responses.
/// Everything here is deterministic, so the full pipeline runs offline.
///
/// The embedding is built so that each known entity has a near-duplicate
/// surface (e.g. "Koala"/"koalas") sharing its semantic direction at a
/// slightly smaller norm. Subtracting the projected anchor mass therefore
/// pushes down both surfaces, while masking the anchor ids alone leaves
/// the near-duplicates free to surface.

std::vector<std::string> vocabulary();
anchors::VocabTokenizer tokenizer();

linalg::EmbeddingMatrix embedding();
mock::MockLanguageModel model();

// The surfaces the mock can emit at list slots.
const std::vector<std::string>& known_entities();      // canonical forms
const std::vector<std::string>& variant_entities();    // near-duplicates
const std::vector<std::string>& novel_entities();      // beyond the anchors

// The worked question with rounds, entities, and split already filled,
// exactly as a replay-driven dataset build produces it.
dataset::QuestionRecord animals_record();

struct Workspace {
    std::string root;
    std::string vocab_file;
    std::string model_file;
    std::string replay_file;
    std::string config_file;
};

// Materializes vocab.txt, model.json (+ .embd), replay.jsonl, and a config
// pointing at them, so `build-dataset`/`discover`/`evaluate` run end to end
// against the directory with no network and no external model.
Workspace write_workspace(const std::string& dir);

// Appends every scripted exchange (domains, questions, collection rounds,
// and both evaluation verdicts for every answer surface that can come up)
// to a replay transcript at path.
void write_replay_transcript(const std::string& path);

}  // namespace bprobe::demo

#endif  // BPROBE_DEMO_HPP
