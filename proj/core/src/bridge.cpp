/*
 * Copyright (C) 2026 The uvsync Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "uvsync/bridge.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <bit>
#include <cerrno>
#include <cstring>

#include "json.hpp"
#include "uvsync/error.hpp"

namespace uvsync::bridge {

using json = nlohmann::json;

namespace {

template <typename T>
void put_le(std::vector<std::byte>& out, T value) {
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        out.push_back(static_cast<std::byte>((static_cast<uint64_t>(value) >> (8 * i)) & 0xffu));
    }
}

template <typename T>
T get_le(std::span<const std::byte> in) {
    uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        v |= static_cast<uint64_t>(std::to_integer<uint8_t>(in[i])) << (8 * i);
    }
    return static_cast<T>(v);
}

json parse_header(const Message& m) {
    try {
        return json::parse(m.header);
    } catch (const json::exception& e) {
        fail(ErrorCode::ProtocolError, std::string("malformed header: ") + e.what());
    }
}

template <typename T>
T field(const json& j, const char* name) {
    try {
        return j.at(name).get<T>();
    } catch (const json::exception&) {
        fail(ErrorCode::ProtocolError, std::string("header field '") + name + "' missing or mistyped");
    }
}

std::size_t checked_count(long long a, long long b, long long c, long long d) {
    if (a < 0 || b < 0 || c < 0 || d < 0) {
        fail(ErrorCode::ProtocolError, "negative dimension in header");
    }
    return static_cast<std::size_t>(a) * static_cast<std::size_t>(b) * static_cast<std::size_t>(c) *
           static_cast<std::size_t>(d);
}

[[noreturn]] void sys_fail(ErrorCode code, const std::string& what) {
    fail(code, what + ": " + std::strerror(errno));
}

bool wait_fd(int fd, short events, std::chrono::milliseconds timeout) {
    pollfd p{fd, events, 0};
    for (;;) {
        const int r = ::poll(&p, 1, static_cast<int>(timeout.count()));
        if (r > 0) return true;
        if (r == 0) return false;
        if (errno != EINTR) sys_fail(ErrorCode::ProtocolError, "poll");
    }
}

} // namespace

std::vector<std::byte> encode(const Message& message) {
    std::vector<std::byte> out;
    out.reserve(4 + 2 + 4 + message.header.size() + 8 + message.payload.size());
    for (char c : kMagic) {
        out.push_back(static_cast<std::byte>(c));
    }
    out.push_back(static_cast<std::byte>(kVersion));
    out.push_back(static_cast<std::byte>(message.type));
    put_le<uint32_t>(out, static_cast<uint32_t>(message.header.size()));
    for (char c : message.header) {
        out.push_back(static_cast<std::byte>(c));
    }
    put_le<uint64_t>(out, static_cast<uint64_t>(message.payload.size()));
    out.insert(out.end(), message.payload.begin(), message.payload.end());
    return out;
}

Message read_message(ByteStream& stream) {
    std::byte prefix[10];
    stream.read_exact(prefix);
    if (std::memcmp(prefix, kMagic, 4) != 0) {
        fail(ErrorCode::ProtocolError, "bad magic");
    }
    const auto version = std::to_integer<uint8_t>(prefix[4]);
    if (version != kVersion) {
        fail(ErrorCode::ProtocolError, "unsupported protocol version " + std::to_string(version));
    }
    const auto type = std::to_integer<uint8_t>(prefix[5]);
    if (type < 1 || type > 4) {
        fail(ErrorCode::ProtocolError, "unknown message type " + std::to_string(type));
    }
    const auto header_len = get_le<uint32_t>(std::span<const std::byte>(prefix + 6, 4));
    if (header_len > kMaxHeaderBytes) {
        fail(ErrorCode::ProtocolError, "header too large");
    }
    Message m;
    m.type = static_cast<MessageType>(type);
    m.header.resize(header_len);
    stream.read_exact(std::as_writable_bytes(std::span<char>(m.header)));
    std::byte len_bytes[8];
    stream.read_exact(len_bytes);
    const auto payload_len = get_le<uint64_t>(len_bytes);
    if (payload_len > (uint64_t{1} << 34)) {
        fail(ErrorCode::ProtocolError, "payload too large");
    }
    m.payload.resize(static_cast<std::size_t>(payload_len));
    stream.read_exact(m.payload);
    return m;
}

void append_floats(std::vector<std::byte>& out, std::span<const float> values) {
    const std::size_t start = out.size();
    out.resize(start + values.size() * 4);
    for (std::size_t i = 0; i < values.size(); ++i) {
        uint32_t bits = std::bit_cast<uint32_t>(values[i]);
        for (int b = 0; b < 4; ++b) {
            out[start + 4 * i + b] = static_cast<std::byte>((bits >> (8 * b)) & 0xffu);
        }
    }
}

void read_floats(std::span<const std::byte> in, std::span<float> out) {
    if (in.size() != out.size() * 4) {
        fail(ErrorCode::ProtocolError, "payload size does not match header shape");
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = std::bit_cast<float>(get_le<uint32_t>(in.subspan(4 * i, 4)));
    }
}

Message make_hello_client() {
    return {MessageType::Hello, json{{"client", "uvsync"}, {"protocol", kVersion}}.dump(), {}};
}

Message make_hello_server(const DenoiserInfo& info) {
    return {MessageType::Hello,
            json{{"prediction_kind", std::string(to_string(info.kind))},
                 {"concurrent", info.concurrent},
                 {"name", info.name}}
                .dump(),
            {}};
}

DenoiserInfo parse_hello_server(const Message& message) {
    if (message.type != MessageType::Hello) {
        fail(ErrorCode::ProtocolError, "expected HELLO");
    }
    const json j = parse_header(message);
    DenoiserInfo info;
    try {
        info.kind = parse_prediction_kind(field<std::string>(j, "prediction_kind"));
    } catch (const Error& e) {
        fail(ErrorCode::ProtocolError, e.what());
    }
    info.concurrent = j.value("concurrent", false);
    info.name = "remote:" + j.value("name", std::string("backend"));
    return info;
}

Message make_request(const DenoiseRequest& request, PredictionKind expected) {
    request.validate();
    const Grid& first = request.latents.front();
    json h{{"timestep", request.timestep},
           {"model_timestep", request.model_timestep},
           {"alpha_bar", request.alpha_bar},
           {"view_id", request.view_id},
           {"background", request.background},
           {"frame_count", request.frame_count()},
           {"channels", first.channels()},
           {"height", first.height()},
           {"width", first.width()},
           {"prompt", request.prompt},
           {"prediction_kind", std::string(to_string(expected))},
           {"dtype", "f32"},
           {"guidance", request.guidance}};
    Message m{MessageType::DenoiseRequest, h.dump(), {}};
    for (const auto& g : request.latents) append_floats(m.payload, g.values());
    for (const auto& g : request.depths) append_floats(m.payload, g.values());
    return m;
}

DenoiseRequest parse_request(const Message& message) {
    if (message.type != MessageType::DenoiseRequest) {
        fail(ErrorCode::ProtocolError, "expected DENOISE_REQ");
    }
    const json h = parse_header(message);
    if (field<std::string>(h, "dtype") != "f32") {
        fail(ErrorCode::ProtocolError, "unsupported dtype");
    }
    DenoiseRequest r;
    r.timestep = field<int>(h, "timestep");
    r.model_timestep = h.value("model_timestep", 0);
    r.alpha_bar = h.value("alpha_bar", 0.0);
    r.view_id = field<int>(h, "view_id");
    r.background = h.value("background", false);
    r.prompt = field<std::string>(h, "prompt");
    if (h.contains("guidance")) {
        r.guidance = h.at("guidance").get<std::map<std::string, std::string>>();
    }
    const int k = field<int>(h, "frame_count");
    const int c = field<int>(h, "channels");
    const int height = field<int>(h, "height");
    const int width = field<int>(h, "width");
    const std::size_t latent_floats = checked_count(k, c, height, width);
    const std::size_t depth_floats = checked_count(k, 1, height, width);
    if (k < 1 || message.payload.size() != (latent_floats + depth_floats) * 4) {
        fail(ErrorCode::ProtocolError, "request payload does not match header shape");
    }
    std::span<const std::byte> payload(message.payload);
    std::size_t offset = 0;
    for (int f = 0; f < k; ++f) {
        Grid g(c, height, width);
        read_floats(payload.subspan(offset, g.size() * 4), g.values());
        offset += g.size() * 4;
        r.latents.push_back(std::move(g));
    }
    for (int f = 0; f < k; ++f) {
        Grid g(1, height, width);
        read_floats(payload.subspan(offset, g.size() * 4), g.values());
        offset += g.size() * 4;
        r.depths.push_back(std::move(g));
    }
    return r;
}

Message make_response(const DenoiseResponse& response) {
    if (response.frames.empty()) {
        fail(ErrorCode::InvalidArgument, "empty response");
    }
    const Grid& first = response.frames.front();
    json h{{"prediction_kind", std::string(to_string(response.kind))},
           {"frame_count", static_cast<int>(response.frames.size())},
           {"channels", first.channels()},
           {"height", first.height()},
           {"width", first.width()},
           {"dtype", "f32"}};
    Message m{MessageType::DenoiseResponse, h.dump(), {}};
    for (const auto& g : response.frames) append_floats(m.payload, g.values());
    return m;
}

void raise_if_error(const Message& message) {
    if (message.type == MessageType::Error) {
        const json h = parse_header(message);
        fail(ErrorCode::BackendUnavailable,
             "server error [" + h.value("code", std::string("unknown")) + "] " + h.value("message", std::string()));
    }
}

DenoiseResponse parse_response(const Message& message, const DenoiseRequest& request) {
    raise_if_error(message);
    if (message.type != MessageType::DenoiseResponse) {
        fail(ErrorCode::ProtocolError, "expected DENOISE_RESP");
    }
    const json h = parse_header(message);
    const Grid& first = request.latents.front();
    if (field<std::string>(h, "dtype") != "f32" || field<int>(h, "frame_count") != request.frame_count() ||
        field<int>(h, "channels") != first.channels() || field<int>(h, "height") != first.height() ||
        field<int>(h, "width") != first.width()) {
        fail(ErrorCode::ProtocolError, "response shape does not match request");
    }
    DenoiseResponse r;
    try {
        r.kind = parse_prediction_kind(field<std::string>(h, "prediction_kind"));
    } catch (const Error& e) {
        fail(ErrorCode::ProtocolError, e.what());
    }
    const std::size_t per_frame = first.size() * 4;
    if (message.payload.size() != per_frame * request.latents.size()) {
        fail(ErrorCode::ProtocolError, "response payload does not match header shape");
    }
    std::span<const std::byte> payload(message.payload);
    for (int f = 0; f < request.frame_count(); ++f) {
        Grid g(first.channels(), first.height(), first.width());
        read_floats(payload.subspan(f * per_frame, per_frame), g.values());
        r.frames.push_back(std::move(g));
    }
    return r;
}

Message make_error(const std::string& code, const std::string& text) {
    return {MessageType::Error, json{{"code", code}, {"message", text}}.dump(), {}};
}

Socket::Socket(Socket&& other) noexcept : fd_(other.fd_), timeout_(other.timeout_) { other.fd_ = -1; }

Socket& Socket::operator=(Socket&& other) noexcept {
    if (this != &other) {
        close();
        fd_ = other.fd_;
        timeout_ = other.timeout_;
        other.fd_ = -1;
    }
    return *this;
}

Socket::~Socket() { close(); }

void Socket::close() noexcept {
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

Socket Socket::connect(const std::string& host, uint16_t port, std::chrono::milliseconds timeout) {
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0 || res == nullptr) {
        fail(ErrorCode::BackendUnavailable, "cannot resolve " + host);
    }
    const int fd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
    if (fd < 0) {
        ::freeaddrinfo(res);
        sys_fail(ErrorCode::BackendUnavailable, "socket");
    }
    Socket sock(fd);
    const int flags = ::fcntl(fd, F_GETFL, 0);
    ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
    const int rc = ::connect(fd, res->ai_addr, res->ai_addrlen);
    ::freeaddrinfo(res);
    if (rc != 0) {
        if (errno != EINPROGRESS) {
            sys_fail(ErrorCode::BackendUnavailable, "connect to " + host + ":" + std::to_string(port));
        }
        if (!wait_fd(fd, POLLOUT, timeout)) {
            fail(ErrorCode::Timeout, "connect to " + host + ":" + std::to_string(port) + " timed out");
        }
        int err = 0;
        socklen_t len = sizeof(err);
        ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
        if (err != 0) {
            errno = err;
            sys_fail(ErrorCode::BackendUnavailable, "connect to " + host + ":" + std::to_string(port));
        }
    }
    ::fcntl(fd, F_SETFL, flags);
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    return sock;
}

void Socket::write_all(std::span<const std::byte> bytes) {
    std::size_t sent = 0;
    while (sent < bytes.size()) {
        if (!wait_fd(fd_, POLLOUT, timeout_)) {
            fail(ErrorCode::Timeout, "send timed out");
        }
        const ssize_t n = ::send(fd_, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            sys_fail(ErrorCode::ProtocolError, "send");
        }
        sent += static_cast<std::size_t>(n);
    }
}

void Socket::read_exact(std::span<std::byte> out) {
    std::size_t got = 0;
    while (got < out.size()) {
        if (!wait_fd(fd_, POLLIN, timeout_)) {
            fail(ErrorCode::Timeout, "receive timed out");
        }
        const ssize_t n = ::recv(fd_, out.data() + got, out.size() - got, 0);
        if (n == 0) {
            fail(ErrorCode::ProtocolError, "connection closed mid-message");
        }
        if (n < 0) {
            if (errno == EINTR) continue;
            sys_fail(ErrorCode::ProtocolError, "recv");
        }
        got += static_cast<std::size_t>(n);
    }
}

Listener::Listener(uint16_t port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) {
        sys_fail(ErrorCode::IoError, "socket");
    }
    const int one = 1;
    ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(port);
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 || ::listen(fd_, 8) != 0) {
        close();
        sys_fail(ErrorCode::IoError, "bind/listen on port " + std::to_string(port));
    }
    socklen_t len = sizeof(addr);
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
}

Listener::~Listener() { close(); }

void Listener::close() noexcept {
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

Socket Listener::accept(std::chrono::milliseconds timeout) {
    if (fd_ < 0 || !wait_fd(fd_, POLLIN, timeout)) {
        return Socket();
    }
    const int fd = ::accept(fd_, nullptr, nullptr);
    return fd >= 0 ? Socket(fd) : Socket();
}

RemoteAddress parse_address(const std::string& text) {
    std::string rest = text;
    if (rest.rfind("remote:", 0) == 0) {
        rest = rest.substr(7);
    }
    const auto colon = rest.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 >= rest.size()) {
        fail(ErrorCode::InvalidArgument, "expected HOST:PORT, got '" + text + "'");
    }
    int port = 0;
    try {
        port = std::stoi(rest.substr(colon + 1));
    } catch (const std::exception&) {
        port = -1;
    }
    require(port > 0 && port < 65536, ErrorCode::InvalidArgument, "bad port in '" + text + "'");
    return {rest.substr(0, colon), static_cast<uint16_t>(port)};
}

} // namespace uvsync::bridge

namespace uvsync {

RemoteDenoiser::RemoteDenoiser(const std::string& host, uint16_t port, const bridge::RemoteOptions& options)
    : socket_(bridge::Socket::connect(host, port, options.connect_timeout)) {
    socket_.set_timeout(options.io_timeout);
    socket_.write_all(bridge::encode(bridge::make_hello_client()));
    const bridge::Message reply = bridge::read_message(socket_);
    bridge::raise_if_error(reply);
    info_ = bridge::parse_hello_server(reply);
}

DenoiseResponse RemoteDenoiser::denoise(const DenoiseRequest& request) {
    std::lock_guard lock(mutex_);
    if (!socket_.is_open()) {
        fail(ErrorCode::BackendUnavailable, "bridge connection is closed");
    }
    try {
        socket_.write_all(bridge::encode(bridge::make_request(request, info_.kind)));
        return bridge::parse_response(bridge::read_message(socket_), request);
    } catch (const Error& e) {
        // The stream position is unknown after a transport failure.
        if (e.code() == ErrorCode::Timeout || e.code() == ErrorCode::ProtocolError) {
            socket_.close();
        }
        throw;
    }
}

} // namespace uvsync
