#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include "sign/engine.hpp"

namespace sign {

// RunLog files are append-only JSON lines: one config header line, one line
// per round, one trailer line. Field names are a public contract (see the
// README); mock-roster files are byte-identical across repeated runs.
std::string runlog_header_line(const GameConfig& cfg);
std::string runlog_event_line(const RoundEvent& ev);
std::string runlog_trailer_line(const RunLog& log);

std::string runlog_to_string(const RunLog& log);
void write_runlog(const std::filesystem::path& path, const RunLog& log);

// Parses a log file. A file without a trailer (a run that died mid-write)
// comes back with status aborted. Throws ConfigError("runlog-parse") on
// malformed content.
RunLog read_runlog(const std::filesystem::path& path);

// True iff the file holds a completed run (used to resume sweeps).
bool runlog_is_completed(const std::filesystem::path& path);

// Streams a run to disk as it happens, so aborted processes keep their
// completed rounds. Flushes after every line.
class RunLogWriter {
public:
    RunLogWriter(const std::filesystem::path& path, const GameConfig& cfg);

    void append(const RoundEvent& ev);
    void finish(const RunLog& log);

private:
    std::ofstream out_;
};

} // namespace sign
