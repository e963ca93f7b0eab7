#include "bprobe/remote_model.hpp"

#include <signal.h>
#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include <json.hpp>

#include "bprobe/errors.hpp"

namespace bprobe {

using json = nlohmann::json;

namespace {

// Writing to a hung-up peer raises SIGPIPE, whose default disposition kills
// the process before the error path can report anything. Block it for the
// duration of the write and drain any pending instance, so the caller sees
// a plain EPIPE instead.
class SigpipeGuard {
public:
    SigpipeGuard() {
        sigemptyset(&set_);
        sigaddset(&set_, SIGPIPE);
        pthread_sigmask(SIG_BLOCK, &set_, &old_);
    }
    ~SigpipeGuard() {
        timespec zero{0, 0};
        while (sigtimedwait(&set_, nullptr, &zero) > 0) {
        }
        pthread_sigmask(SIG_SETMASK, &old_, nullptr);
    }

private:
    sigset_t set_;
    sigset_t old_;
};

}  // namespace

FdTransport::FdTransport(int read_fd, int write_fd)
    : read_fd_(read_fd), write_fd_(write_fd) {}

FdTransport::~FdTransport() {
    ::close(read_fd_);
    if (write_fd_ != read_fd_) ::close(write_fd_);
}

std::string FdTransport::roundtrip(const std::string& line) {
    std::string out = line;
    out.push_back('\n');
    SigpipeGuard guard;
    std::size_t written = 0;
    while (written < out.size()) {
        ssize_t n = ::write(write_fd_, out.data() + written, out.size() - written);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw_error(ErrorCode::ModelStepFailure,
                        std::string("write to logits server failed: ") +
                            std::strerror(errno));
        }
        written += static_cast<std::size_t>(n);
    }

    for (;;) {
        std::size_t newline = buffer_.find('\n');
        if (newline != std::string::npos) {
            std::string result = buffer_.substr(0, newline);
            buffer_.erase(0, newline + 1);
            return result;
        }
        char chunk[4096];
        ssize_t n = ::read(read_fd_, chunk, sizeof(chunk));
        if (n < 0) {
            if (errno == EINTR) continue;
            throw_error(ErrorCode::ModelStepFailure,
                        std::string("read from logits server failed: ") +
                            std::strerror(errno));
        }
        if (n == 0) {
            throw_error(ErrorCode::ModelStepFailure,
                        "logits server closed the connection");
        }
        buffer_.append(chunk, static_cast<std::size_t>(n));
    }
}

std::unique_ptr<LineTransport> connect_unix_socket(const std::string& path) {
    int fd = ::socket(AF_UNIX, SOCK_STREAM, 0);
    if (fd < 0) {
        throw_error(ErrorCode::IoFailure,
                    std::string("socket creation failed: ") + std::strerror(errno));
    }
    sockaddr_un addr{};
    addr.sun_family = AF_UNIX;
    if (path.size() >= sizeof(addr.sun_path)) {
        ::close(fd);
        throw_error(ErrorCode::ConfigInvalid, "socket path too long: " + path);
    }
    std::strncpy(addr.sun_path, path.c_str(), sizeof(addr.sun_path) - 1);
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) {
        ::close(fd);
        throw_error(ErrorCode::IoFailure,
                    "cannot connect to " + path + ": " + std::strerror(errno));
    }
    return std::make_unique<FdTransport>(fd, fd);
}

RemoteLogitsModel::RemoteLogitsModel(linalg::EmbeddingMatrix embedding,
                                     std::unique_ptr<LineTransport> transport,
                                     int eos_token)
    : embedding_(std::move(embedding)),
      transport_(std::move(transport)),
      eos_token_(eos_token) {
    if (!transport_) {
        throw_error(ErrorCode::ConfigInvalid, "remote model needs a transport");
    }
}

Eigen::VectorXd RemoteLogitsModel::step(std::span<const int> context) {
    json request;
    request["context"] = std::vector<int>(context.begin(), context.end());
    const std::string reply = transport_->roundtrip(request.dump());

    json doc;
    try {
        doc = json::parse(reply);
    } catch (const json::parse_error& e) {
        throw_error(ErrorCode::ModelStepFailure,
                    std::string("malformed logits response: ") + e.what());
    }
    if (doc.contains("error")) {
        throw_error(ErrorCode::ModelStepFailure,
                    "logits server error: " + doc.at("error").get<std::string>());
    }
    auto logits = doc.at("logits").get<std::vector<double>>();
    if (static_cast<std::ptrdiff_t>(logits.size()) != embedding_.rows()) {
        throw_error(ErrorCode::DimensionMismatch,
                    "logits length " + std::to_string(logits.size()) +
                        " does not match vocabulary " +
                        std::to_string(embedding_.rows()));
    }
    return Eigen::Map<const Eigen::VectorXd>(logits.data(),
                                             static_cast<Eigen::Index>(logits.size()));
}

}  // namespace bprobe
