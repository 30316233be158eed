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

#ifndef UVSYNC_BRIDGE_HPP
#define UVSYNC_BRIDGE_HPP

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "uvsync/denoiser.hpp"

namespace uvsync::bridge {

// Frame layout, all integers little-endian:
//   "TX4D" | u8 version | u8 type | u32 header_len | header (UTF-8 JSON)
//   | u64 payload_len | payload
// Request payload: latents then depths, float32 C-order, frame-major.
// Response payload: predictions, same layout as the request latents.

inline constexpr char kMagic[4] = {'T', 'X', '4', 'D'};
inline constexpr uint8_t kVersion = 1;
inline constexpr uint32_t kMaxHeaderBytes = 1u << 20;

enum class MessageType : uint8_t { Hello = 1, DenoiseRequest = 2, DenoiseResponse = 3, Error = 4 };

struct Message {
    MessageType type = MessageType::Hello;
    std::string header;
    std::vector<std::byte> payload;
};

std::vector<std::byte> encode(const Message& message);

/// Blocking byte stream; read_exact throws ProtocolError on a short read and
/// Timeout when the deadline passes.
class ByteStream {
public:
    virtual ~ByteStream() = default;
    virtual void write_all(std::span<const std::byte> bytes) = 0;
    virtual void read_exact(std::span<std::byte> out) = 0;
};

/// Reads and validates one frame (magic, version, type, size limits).
Message read_message(ByteStream& stream);

void append_floats(std::vector<std::byte>& out, std::span<const float> values);
void read_floats(std::span<const std::byte> in, std::span<float> out);

Message make_hello_client();
Message make_hello_server(const DenoiserInfo& info);
DenoiserInfo parse_hello_server(const Message& message);

Message make_request(const DenoiseRequest& request, PredictionKind expected);
DenoiseRequest parse_request(const Message& message);
Message make_response(const DenoiseResponse& response);
/// Validates the response against the request shape; ProtocolError otherwise.
DenoiseResponse parse_response(const Message& message, const DenoiseRequest& request);

Message make_error(const std::string& code, const std::string& text);
/// Throws BackendUnavailable carrying the server's code for ERROR frames.
void raise_if_error(const Message& message);

/// RAII TCP socket with per-operation timeouts.
class Socket final : public ByteStream {
public:
    Socket() = default;
    explicit Socket(int fd) : fd_(fd) {}
    Socket(Socket&& other) noexcept;
    Socket& operator=(Socket&& other) noexcept;
    Socket(const Socket&) = delete;
    Socket& operator=(const Socket&) = delete;
    ~Socket() override;

    /// Throws BackendUnavailable when the peer is unreachable, Timeout when
    /// the connect deadline passes.
    static Socket connect(const std::string& host, uint16_t port, std::chrono::milliseconds timeout);

    void set_timeout(std::chrono::milliseconds timeout) { timeout_ = timeout; }
    void write_all(std::span<const std::byte> bytes) override;
    void read_exact(std::span<std::byte> out) override;
    void close() noexcept;
    bool is_open() const noexcept { return fd_ >= 0; }

private:
    int fd_ = -1;
    std::chrono::milliseconds timeout_{30000};
};

/// Loopback listener, used by in-process bridge servers and tests.
class Listener {
public:
    /// Port 0 picks an ephemeral port.
    explicit Listener(uint16_t port = 0);
    Listener(const Listener&) = delete;
    Listener& operator=(const Listener&) = delete;
    ~Listener();

    uint16_t port() const noexcept { return port_; }
    /// Waits up to `timeout` for a client; returns a closed socket on timeout.
    Socket accept(std::chrono::milliseconds timeout);
    void close() noexcept;

private:
    int fd_ = -1;
    uint16_t port_ = 0;
};

struct RemoteOptions {
    std::chrono::milliseconds connect_timeout{5000};
    std::chrono::milliseconds io_timeout{60000};
};

struct RemoteAddress {
    std::string host;
    uint16_t port = 0;
};

/// Parses "HOST:PORT" or "remote:HOST:PORT".
RemoteAddress parse_address(const std::string& text);

} // namespace uvsync::bridge

namespace uvsync {

/// Denoiser backed by an out-of-process server speaking the bridge protocol.
/// Connects and performs the HELLO handshake on construction; calls are
/// serialised over the single connection.
class RemoteDenoiser final : public Denoiser {
public:
    RemoteDenoiser(const std::string& host, uint16_t port, const bridge::RemoteOptions& options = {});

    DenoiserInfo info() const override { return info_; }
    DenoiseResponse denoise(const DenoiseRequest& request) override;

private:
    bridge::Socket socket_;
    DenoiserInfo info_;
    std::mutex mutex_;
};

} // namespace uvsync

#endif // UVSYNC_BRIDGE_HPP
