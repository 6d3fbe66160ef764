#pragma once

#include <nlohmann/json.hpp>

#include <fstream>
#include <functional>
#include <string>
#include <vector>

namespace memtrade {

// Receives one JSONL record per call (requests, responses, per-day manifests,
// decisions). Null sinks are allowed everywhere; logging is optional.
using TranscriptSink = std::function<void(const nlohmann::json&)>;

// File-backed transcript, one JSON object per line.
class TranscriptWriter {
public:
    explicit TranscriptWriter(const std::string& path);

    void write(const nlohmann::json& record);
    const std::string& path() const { return path_; }

    TranscriptSink sink() {
        return [this](const nlohmann::json& record) { write(record); };
    }

private:
    std::string path_;
    std::ofstream out_;
};

// Parses a transcript file back into records. Throws ParseError on bad lines.
std::vector<nlohmann::json> read_transcript(const std::string& path);

} // namespace memtrade
