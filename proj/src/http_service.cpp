#include "gridmga/http_service.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "gridmga/errors.hpp"

namespace gridmga {

namespace {

void reply(httplib::Response& res, int status, const Json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

Json error_body(const std::string& message, const std::vector<std::string>& issues = {}) {
    Json j{{"error", message}};
    if (!issues.empty()) j["issues"] = issues;
    return j;
}

/// Maps library errors onto HTTP status codes.
template <class Handler>
httplib::Server::Handler wrap(Handler h) {
    return [h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
        try {
            h(req, res);
        } catch (const NotFoundError& e) {
            reply(res, 404, error_body(e.what()));
        } catch (const ConflictError& e) {
            reply(res, 409, error_body(e.what()));
        } catch (const ValidationError& e) {
            reply(res, 422, error_body(e.what(), e.issues()));
        } catch (const ParseError& e) {
            reply(res, 400, error_body(e.what()));
        } catch (const DomainError& e) {
            reply(res, 422, error_body(e.what(), {e.what()}));
        } catch (const ConfigError& e) {
            reply(res, 422, error_body(e.what(), {e.what()}));
        } catch (const Json::exception& e) {
            reply(res, 400, error_body(std::string("malformed request body: ") + e.what()));
        } catch (const std::exception& e) {
            spdlog::error("{} {}: {}", req.method, req.path, e.what());
            reply(res, 500, error_body(e.what()));
        }
    };
}

Json body_of(const httplib::Request& req) {
    if (req.body.empty()) return Json::object();
    auto j = parse_json_text(req.body);
    if (!j.is_object()) throw ParseError(0, "request body must be a JSON object");
    return j;
}

std::size_t index_param(const httplib::Request& req, std::size_t match) {
    const std::string& s = req.matches[static_cast<int>(match)];
    try {
        return static_cast<std::size_t>(std::stoull(s));
    } catch (const std::exception&) {
        throw NotFoundError("round '" + s + "' does not exist");
    }
}

}  // namespace

HttpService::HttpService(SessionManager& sessions) : sessions_(sessions), server_(std::make_unique<httplib::Server>()) {
    auto& srv = *server_;

    srv.Get("/networks", wrap([this](const httplib::Request&, httplib::Response& res) {
        reply(res, 200, Json{{"networks", sessions_.bundled_networks()}});
    }));

    srv.Post("/sessions", wrap([this](const httplib::Request& req, httplib::Response& res) {
        const auto body = body_of(req);
        const auto config = session_config_from_json(body.value("config", Json()));
        std::string id;
        if (body.contains("network")) {
            Network net;
            try {
                net = parse_network_document(body["network"].dump());
            } catch (const ParseError& e) {
                throw ValidationError({e.what()});
            }
            id = sessions_.create_session(net, body.value("name", net.name), config);
        } else if (body.contains("case")) {
            id = sessions_.create_session_from_case(body["case"].get<std::string>(), config);
        } else {
            throw ValidationError({"request needs 'case' or 'network'"});
        }
        reply(res, 201, Json{{"id", id}, {"status", "idle"}});
    }));

    srv.Get(R"(/sessions/([0-9a-zA-Z_-]+))", wrap([this](const httplib::Request& req, httplib::Response& res) {
        reply(res, 200, sessions_.session_summary(req.matches[1]));
    }));

    srv.Post(R"(/sessions/([0-9a-zA-Z_-]+)/rounds)", wrap([this](const httplib::Request& req, httplib::Response& res) {
        const auto body = body_of(req);
        const auto count = body.value("count", std::int64_t{20});
        if (count <= 0) throw ValidationError({"count must be at least 1"});
        const auto k = sessions_.generate_round(req.matches[1], static_cast<std::size_t>(count),
                                                body.value("seed", std::uint64_t{1}));
        reply(res, 202, Json{{"round", k}, {"status", "solving"}});
    }));

    srv.Get(R"(/sessions/([0-9a-zA-Z_-]+)/rounds/([0-9]+)/alternatives)",
            wrap([this](const httplib::Request& req, httplib::Response& res) {
                reply(res, 200, sessions_.round_alternatives(req.matches[1], index_param(req, 2)));
            }));

    srv.Post(R"(/sessions/([0-9a-zA-Z_-]+)/rounds/([0-9]+)/ranking)",
             wrap([this](const httplib::Request& req, httplib::Response& res) {
                 const auto body = body_of(req);
                 const std::string id = req.matches[1];
                 const auto k = index_param(req, 2);
                 HitlParams params;
                 try {
                     params = hitl_params_from_json(body);
                     if (body.contains("count")) params.round_count = body["count"].get<std::size_t>();
                 } catch (const DomainError& e) {
                     throw ValidationError({e.what()});
                 }
                 const auto seed = body.value("seed", std::uint64_t{1});
                 std::size_t next = 0;
                 if (body.contains("simulate")) {
                     const auto& sim = body["simulate"];
                     FunctionId fn;
                     try {
                         fn = parse_function_id(sim.value("fn", std::string("u4")));
                     } catch (const DomainError& e) {
                         throw ValidationError({e.what()});
                     }
                     next = sessions_.submit_simulated_ranking(id, k, fn, sim.value("top_k", std::size_t{3}), params, seed);
                 } else {
                     if (!body.contains("ranked_ids")) throw ValidationError({"request needs 'ranked_ids' or 'simulate'"});
                     RankingFeedback ranking;
                     for (const auto& v : body["ranked_ids"]) {
                         if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
                             throw ValidationError({"ranked ids must be non-negative integers"});
                         ranking.ranked_ids.push_back(v.get<std::size_t>());
                     }
                     ranking.source = "human";
                     next = sessions_.submit_ranking(id, k, ranking, params, seed);
                 }
                 reply(res, 202, Json{{"round", next}, {"status", "solving"}});
             }));
}

HttpService::~HttpService() { stop(); }

int HttpService::bind(const std::string& host, int port) {
    if (port == 0) {
        const int p = server_->bind_to_any_port(host);
        if (p < 0) throw Error("cannot bind " + host);
        return p;
    }
    if (!server_->bind_to_port(host, port)) throw Error("cannot bind " + host + ":" + std::to_string(port));
    return port;
}

void HttpService::listen() { server_->listen_after_bind(); }

void HttpService::stop() {
    if (server_) server_->stop();
}

httplib::Server& HttpService::server() { return *server_; }

}  // namespace gridmga
