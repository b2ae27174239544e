#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "cesim/workflow.hpp"

namespace cesim {

/// One timestamped metric observation routed to a sink.
struct ReportRecord {
    long tick = 0;
    std::string callback;
    std::string scope;
    std::string subject = "-";
    nlohmann::json value;
};

/// Round every float in a json payload through 9 significant digits so
/// serialized outputs are byte-stable across replays.
nlohmann::json canonical_json(const nlohmann::json& value);

/// Render a record value for the csv column.
std::string csv_value(const nlohmann::json& value);

/// Buffers records per tick and flushes them to per-callback csv files and
/// a per-run nested json document (tick -> callback -> subject).
class Reporter {
public:
    Reporter() = default;

    /// Directory layout: <dir>/metrics/<callback>.csv for csv mode records,
    /// the json document is produced by `json_document()`.
    void open(const std::filesystem::path& run_dir);

    void set_mode(const std::string& callback, ReportMode mode);
    ReportMode mode(const std::string& callback) const;

    void add(ReportRecord record);

    /// Write this tick's records in deterministic order.
    void flush_tick(long tick);

    void finalize();

    const nlohmann::json& json_document() const { return json_doc_; }
    std::size_t records_written() const { return records_written_; }

private:
    std::filesystem::path run_dir_;
    std::map<std::string, ReportMode> modes_;
    std::map<std::string, std::ofstream> csv_files_;
    std::vector<ReportRecord> pending_;
    nlohmann::json json_doc_ = nlohmann::json::object();
    std::size_t records_written_ = 0;
};

} // namespace cesim
