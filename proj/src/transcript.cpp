#include "memtrade/transcript.hpp"

#include "memtrade/errors.hpp"

namespace memtrade {

TranscriptWriter::TranscriptWriter(const std::string& path) : path_(path), out_(path) {
    if (!out_.is_open()) {
        throw ConfigError("cannot open transcript for writing: " + path);
    }
}

void TranscriptWriter::write(const nlohmann::json& record) {
    out_ << record.dump() << '\n';
    out_.flush();
}

std::vector<nlohmann::json> read_transcript(const std::string& path) {
    std::ifstream in(path);
    if (!in.is_open()) {
        throw ConfigError("cannot open transcript: " + path);
    }
    std::vector<nlohmann::json> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            records.push_back(nlohmann::json::parse(line));
        } catch (const nlohmann::json::exception& ex) {
            throw ParseError(path + " line " + std::to_string(line_no) + ": " + ex.what());
        }
    }
    return records;
}

} // namespace memtrade
