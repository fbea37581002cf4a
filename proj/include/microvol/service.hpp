#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "microvol/runtime.hpp"
#include "microvol/transfer_function.hpp"

namespace microvol {

struct ServiceConfig {
    /// Store used when a session request names none.
    std::filesystem::path store;
    std::string address = "127.0.0.1";
    unsigned short port = 8080;  // 0 picks a free port
    std::size_t max_sessions = 8;
    int io_threads = 2;
    /// Session defaults; each POST /session may override them.
    RuntimeConfig runtime;
    std::optional<TransferFunction> transfer_function;  // default: "bands" over the store value range
    std::chrono::microseconds io_delay{0};
    std::string cors_origin = "*";
};

/// HTTP + WebSocket front end over RuntimeSession. See API.md for the
/// message schemas.
class RenderService {
public:
    explicit RenderService(ServiceConfig config);
    ~RenderService();
    RenderService(const RenderService&) = delete;
    RenderService& operator=(const RenderService&) = delete;

    /// Binds, starts the I/O threads and returns the bound port.
    unsigned short start();
    /// Closes every connection, stops prefetching and joins all threads.
    void stop();
    /// Blocks until stop() is called from another thread or a signal handler.
    void wait();

    std::size_t session_count() const;
    unsigned short port() const;

    class Impl;

private:
    std::unique_ptr<Impl> impl_;
};

}  // namespace microvol
