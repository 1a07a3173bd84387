#pragma once

namespace subsplit {

// Sets the spdlog level from SUBSPLIT_LOG (trace, debug, info, warn, error,
// off). Defaults to warn.
void init_logging();

}  // namespace subsplit
