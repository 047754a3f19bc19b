#pragma once

#include <string>

#include <httplib.h>

#include "inferalign/backends/wire.hpp"

namespace inferalign::backends {

/// Registers POST <prefix>/{hello,generate,mutate,score} on `http`. The op is
/// taken from the path; a body "op" that disagrees is an invalid_request.
void mount_wire_routes(httplib::Server& http, WireServer& server, const std::string& prefix = "");

}  // namespace inferalign::backends
