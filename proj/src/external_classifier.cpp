#include "drowsy/external_classifier.hpp"

#include "drowsy/error.hpp"

#include <boost/archive/iterators/base64_from_binary.hpp>
#include <boost/archive/iterators/binary_from_base64.hpp>
#include <boost/archive/iterators/transform_width.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <stdexcept>
#include <thread>

extern char** environ;

namespace drowsy {

std::string base64_encode(std::span<const std::uint8_t> bytes)
{
    using namespace boost::archive::iterators;
    using It = base64_from_binary<transform_width<const std::uint8_t*, 6, 8>>;
    std::string out(It(bytes.data()), It(bytes.data() + bytes.size()));
    out.append((3 - bytes.size() % 3) % 3, '=');
    return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text)
{
    using namespace boost::archive::iterators;
    using It = transform_width<binary_from_base64<const char*>, 8, 6>;
    if (text.size() % 4 != 0)
        throw std::invalid_argument("base64 length is not a multiple of 4");
    std::size_t pad = 0;
    while (pad < 2 && pad < text.size() && text[text.size() - 1 - pad] == '=')
        ++pad;
    std::string body(text);
    std::replace(body.end() - static_cast<std::ptrdiff_t>(pad), body.end(), '=', 'A');
    if (body.find('=') != std::string::npos)
        throw std::invalid_argument("misplaced base64 padding");
    std::vector<std::uint8_t> out;
    try
    {
        out.assign(It(body.data()), It(body.data() + body.size()));
    }
    catch (const std::exception&)
    {
        throw std::invalid_argument("invalid base64 character");
    }
    out.resize(out.size() - pad);
    return out;
}

std::string encode_request(std::int64_t id, const RoiImage& img)
{
    return fmt::format(R"({{"id":{},"kind":"{}","w":{},"h":{},"px_b64":"{}"}})", id, to_string(img.kind), img.width,
                       img.height, base64_encode(img.pixels));
}

ClassifierResponse decode_response(std::string_view line)
{
    nlohmann::json j;
    try
    {
        j = nlohmann::json::parse(line);
    }
    catch (const nlohmann::json::parse_error& e)
    {
        throw ProtocolError(std::string("reply is not JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("id") || !j["id"].is_number_integer())
        throw ProtocolError("reply lacks an integer id");
    if (!j.contains("state") || !j["state"].is_string())
        throw ProtocolError("reply lacks a state");
    if (!j.contains("conf") || !j["conf"].is_number())
        throw ProtocolError("reply lacks a numeric conf");

    ClassifierResponse r;
    r.id = j["id"].get<std::int64_t>();
    const auto state = j["state"].get<std::string>();
    if (state == "open")
        r.verdict.state = State::open;
    else if (state == "closed")
        r.verdict.state = State::closed;
    else
        throw ProtocolError("reply state must be open or closed, got '" + state + "'");
    r.verdict.confidence = j["conf"].get<double>();
    if (!(r.verdict.confidence >= 0.0 && r.verdict.confidence <= 1.0))
        throw ProtocolError("reply conf outside [0,1]");
    return r;
}

ExternalClassifier::ExternalClassifier(std::string command, std::chrono::milliseconds timeout)
    : command_(std::move(command)), timeout_(timeout)
{
    if (command_.empty())
        throw ConfigError("external classifier command is empty");

    int sv[2];
    if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, sv) != 0)
        throw BackendUnavailable(std::string("socketpair failed: ") + std::strerror(errno));

    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, sv[1], STDIN_FILENO);
    posix_spawn_file_actions_adddup2(&actions, sv[1], STDOUT_FILENO);

    std::string sh = "/bin/sh";
    std::string dash_c = "-c";
    char* argv[] = {sh.data(), dash_c.data(), command_.data(), nullptr};
    const int rc = ::posix_spawn(&pid_, "/bin/sh", &actions, nullptr, argv, environ);
    posix_spawn_file_actions_destroy(&actions);
    ::close(sv[1]);
    if (rc != 0)
    {
        ::close(sv[0]);
        pid_ = -1;
        throw BackendUnavailable(std::string("failed to start classifier: ") + std::strerror(rc));
    }
    fd_ = sv[0];
}

ExternalClassifier::~ExternalClassifier() { shutdown_child(); }

void ExternalClassifier::shutdown_child()
{
    if (fd_ >= 0)
    {
        ::close(fd_);
        fd_ = -1;
    }
    if (pid_ <= 0)
        return;
    // Closing the socket is the polite stop signal; a child that ignores it is killed.
    for (int i = 0; i < 20; ++i)
    {
        if (::waitpid(pid_, nullptr, WNOHANG) == pid_)
        {
            pid_ = -1;
            return;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, nullptr, 0);
    pid_ = -1;
}

void ExternalClassifier::write_all(const std::string& data)
{
    std::size_t sent = 0;
    while (sent < data.size())
    {
        const ssize_t n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
        if (n < 0)
        {
            if (errno == EINTR)
                continue;
            const std::string why = std::strerror(errno);
            shutdown_child();
            throw BackendUnavailable("write to classifier failed: " + why);
        }
        sent += static_cast<std::size_t>(n);
    }
}

bool ExternalClassifier::read_line(std::string& line, std::chrono::steady_clock::time_point deadline)
{
    for (;;)
    {
        if (auto nl = buffer_.find('\n'); nl != std::string::npos)
        {
            line = buffer_.substr(0, nl);
            buffer_.erase(0, nl + 1);
            return true;
        }
        const auto remaining =
            std::chrono::ceil<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
        if (remaining.count() <= 0)
            return false;

        pollfd p{fd_, POLLIN, 0};
        const int ready = ::poll(&p, 1, static_cast<int>(remaining.count()));
        if (ready < 0)
        {
            if (errno == EINTR)
                continue;
            throw BackendUnavailable(std::string("poll failed: ") + std::strerror(errno));
        }
        if (ready == 0)
            return false;

        char chunk[4096];
        const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
        if (n < 0 && errno == EINTR)
            continue;
        if (n <= 0)
        {
            shutdown_child();
            throw BackendUnavailable("classifier process closed its output");
        }
        buffer_.append(chunk, static_cast<std::size_t>(n));
    }
}

StateVerdict ExternalClassifier::classify(const RoiImage& img)
{
    if (!alive())
        throw BackendUnavailable("classifier process is not running");
    img.validate();

    const std::int64_t id = next_id_++;
    write_all(encode_request(id, img) + "\n");

    const auto deadline = std::chrono::steady_clock::now() + timeout_;
    std::string line;
    for (;;)
    {
        if (!read_line(line, deadline))
        {
            ++timeouts_;
            spdlog::warn("classifier request {} timed out after {} ms", id, timeout_.count());
            return StateVerdict::unknown();
        }
        const ClassifierResponse r = decode_response(line);
        if (r.id < id)
            continue; // late reply to an abandoned request
        if (r.id > id)
            throw ProtocolError(fmt::format("reply id {} does not match request id {}", r.id, id));
        return r.verdict;
    }
}

} // namespace drowsy
