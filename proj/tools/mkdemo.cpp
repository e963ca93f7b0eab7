#include <iostream>
#include <string>

#include "bprobe/demo.hpp"

// Materializes the self-contained demo workspace (vocabulary, mock model,
// replay transcript, config) into a directory, so the pipeline can be run
// end to end with no network access:
//
//   mkdemo demo/
//   bprobe --config demo/run.cfg build-dataset
//   bprobe --config demo/run.cfg discover
//   bprobe --config demo/run.cfg evaluate
int main(int argc, char** argv) {
    const std::string dir = argc > 1 ? argv[1] : "demo";
    try {
        auto ws = bprobe::demo::write_workspace(dir);
        std::cout << "demo workspace in " << ws.root << "\n"
                  << "  vocab:  " << ws.vocab_file << "\n"
                  << "  model:  " << ws.model_file << "\n"
                  << "  replay: " << ws.replay_file << "\n"
                  << "  config: " << ws.config_file << "\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
