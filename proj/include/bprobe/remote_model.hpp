#ifndef BPROBE_REMOTE_MODEL_HPP
#define BPROBE_REMOTE_MODEL_HPP

#include <memory>
#include <string>

#include "bprobe/decoder.hpp"
#include "bprobe/linalg.hpp"

namespace bprobe {

/// One request/response exchange of newline-terminated text lines.
class LineTransport {
public:
    virtual ~LineTransport() = default;
    virtual std::string roundtrip(const std::string& line) = 0;
};

/// Transport over a pair of file descriptors (socketpair, pipes, or a
/// connected socket where read_fd == write_fd). Owns and closes them.
class FdTransport : public LineTransport {
public:
    FdTransport(int read_fd, int write_fd);
    ~FdTransport() override;
    std::string roundtrip(const std::string& line) override;

private:
    int read_fd_;
    int write_fd_;
    std::string buffer_;
};

// Connects to a Unix domain socket serving the logits protocol.
std::unique_ptr<LineTransport> connect_unix_socket(const std::string& path);

/// Adapter that lets an external inference process serve next-token logits:
/// each step sends {"context":[ids]} and expects {"logits":[floats]} of
/// vocabulary length back on one line. The output-head embedding still lives
/// locally so suppression plans can be built against it.
class RemoteLogitsModel : public decoder::LanguageModel {
public:
    RemoteLogitsModel(linalg::EmbeddingMatrix embedding,
                      std::unique_ptr<LineTransport> transport, int eos_token);

    Eigen::VectorXd step(std::span<const int> context) override;
    const linalg::EmbeddingMatrix& embedding() const override { return embedding_; }
    int eos_token() const override { return eos_token_; }

private:
    linalg::EmbeddingMatrix embedding_;
    std::unique_ptr<LineTransport> transport_;
    int eos_token_;
};

}  // namespace bprobe

#endif  // BPROBE_REMOTE_MODEL_HPP
