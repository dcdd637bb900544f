#pragma once

#include <memory>
#include <string>

#include "tasteprint/project.hpp"

namespace tasteprint {

/// Local HTTP service over one project directory. JSON bodies throughout;
/// errors are {"error": <code>, "message": ..., ...} with 400/404/409/422.
class Server {
public:
    explicit Server(ProjectStore& store);
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    /// Binds the port (0 picks a free one) and returns the bound port.
    /// Throws IoError when the port is busy.
    int bind(const std::string& host, int port);
    /// Serves until stop(); call after bind().
    void listen();
    void stop();
    bool running() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace tasteprint
