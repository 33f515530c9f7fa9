#pragma once

#include "drowsy/classify.hpp"

#include <sys/types.h>

#include <chrono>
#include <cstdint>
#include <string>

namespace drowsy {

std::string base64_encode(std::span<const std::uint8_t> bytes);
/// Throws std::invalid_argument on malformed input.
std::vector<std::uint8_t> base64_decode(std::string_view text);

/// One request line of the classifier wire protocol.
std::string encode_request(std::int64_t id, const RoiImage& img);

struct ClassifierResponse
{
    std::int64_t id = 0;
    StateVerdict verdict;
};

/// Parses one response line; throws ProtocolError when it does not match the schema.
ClassifierResponse decode_response(std::string_view line);

/// Child process speaking line-delimited JSON on stdin/stdout. One request in flight at a time;
/// a request that times out yields an unknown verdict and its late reply is discarded.
class ExternalClassifier final : public Classifier
{
public:
    explicit ExternalClassifier(std::string command,
                                std::chrono::milliseconds timeout = std::chrono::milliseconds(200));
    ~ExternalClassifier() override;

    ExternalClassifier(const ExternalClassifier&) = delete;
    ExternalClassifier& operator=(const ExternalClassifier&) = delete;

    /// Throws BackendUnavailable if the process has exited, ProtocolError on a bad reply.
    StateVerdict classify(const RoiImage& img) override;
    std::string name() const override { return "external:" + command_; }

    bool alive() const { return fd_ >= 0; }
    std::int64_t timeouts() const { return timeouts_; }

private:
    void shutdown_child();
    void write_all(const std::string& data);
    // Reads one line or returns false on timeout.
    bool read_line(std::string& line, std::chrono::steady_clock::time_point deadline);

    std::string command_;
    std::chrono::milliseconds timeout_;
    int fd_ = -1;
    pid_t pid_ = -1;
    std::int64_t next_id_ = 1;
    std::int64_t timeouts_ = 0;
    std::string buffer_;
};

} // namespace drowsy
