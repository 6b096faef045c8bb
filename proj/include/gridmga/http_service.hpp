#pragma once

#include <memory>
#include <string>

#include "gridmga/session.hpp"

namespace httplib {
class Server;
}

namespace gridmga {

/// JSON-over-HTTP front end of a SessionManager.
///
///   POST /sessions                                create from {"case"} or {"network"}, optional "config"
///   GET  /sessions/{id}                           status and round summaries
///   POST /sessions/{id}/rounds                    start an MGA round {"count", "seed"}
///   GET  /sessions/{id}/rounds/{k}/alternatives   alternatives of round k
///   POST /sessions/{id}/rounds/{k}/ranking        {"ranked_ids"} or {"simulate": {"fn", "top_k"}}
///   GET  /networks                                bundled cases
class HttpService {
public:
    explicit HttpService(SessionManager& sessions);
    ~HttpService();

    /// Binds to host:port (0 picks a free port) and returns the bound port.
    int bind(const std::string& host, int port);
    /// Serves until stop(); call after bind().
    void listen();
    void stop();

    httplib::Server& server();

private:
    SessionManager& sessions_;
    std::unique_ptr<httplib::Server> server_;
};

}  // namespace gridmga
