#pragma once

namespace vlut {

// Full command-line surface: gen-data, train, eval, track. Returns 0 on
// success, 1 on validation errors (bad flags, malformed configs or specs),
// 2 on runtime failures (unreadable files, aborted training).
int cli_main(int argc, const char* const* argv);

}  // namespace vlut
