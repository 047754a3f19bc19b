#include "inferalign/backends/http_server.hpp"

namespace inferalign::backends {

void mount_wire_routes(httplib::Server& http, WireServer& server, const std::string& prefix) {
  for (const std::string op : {"hello", "generate", "mutate", "score"}) {
    http.Post(prefix + "/" + op, [&server, op](const httplib::Request& req, httplib::Response& res) {
      json response;
      json request = json::parse(req.body.empty() ? "{}" : req.body, nullptr, false);
      if (request.is_discarded()) {
        response = make_error("parse_error", "request body is not JSON");
      } else if (!request.is_object()) {
        response = make_error("invalid_request", "request must be a JSON object");
      } else if (request.contains("op") && request["op"] != op) {
        response = make_error("invalid_request", "op does not match the endpoint /" + op);
      } else {
        request["op"] = op;
        response = server.handle(request);
      }
      res.set_content(dump_lenient(response), "application/json");
    });
  }
}

}  // namespace inferalign::backends
