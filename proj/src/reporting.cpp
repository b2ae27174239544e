#include "cesim/reporting.hpp"

#include <algorithm>

#include "cesim/gml.hpp"

namespace cesim {

nlohmann::json canonical_json(const nlohmann::json& value) {
    if (value.is_number_float()) {
        return nlohmann::json::parse(format_value(value.get<double>()));
    }
    if (value.is_object()) {
        nlohmann::json out = nlohmann::json::object();
        for (const auto& [k, v] : value.items()) {
            out[k] = canonical_json(v);
        }
        return out;
    }
    if (value.is_array()) {
        nlohmann::json out = nlohmann::json::array();
        for (const auto& v : value) {
            out.push_back(canonical_json(v));
        }
        return out;
    }
    return value;
}

std::string csv_value(const nlohmann::json& value) {
    std::string text;
    if (value.is_string()) {
        text = value.get<std::string>();
    } else if (value.is_null()) {
        text = "null";
    } else {
        text = value.dump();
    }
    if (text.find_first_of(",\"\n") == std::string::npos) {
        return text;
    }
    std::string quoted = "\"";
    for (char c : text) {
        if (c == '"') {
            quoted += '"';
        }
        quoted += c;
    }
    quoted += '"';
    return quoted;
}

void Reporter::open(const std::filesystem::path& run_dir) {
    run_dir_ = run_dir;
    std::filesystem::create_directories(run_dir_ / "metrics");
}

void Reporter::set_mode(const std::string& callback, ReportMode mode) {
    modes_[callback] = mode;
}

ReportMode Reporter::mode(const std::string& callback) const {
    auto it = modes_.find(callback);
    return it == modes_.end() ? ReportMode::Csv : it->second;
}

void Reporter::add(ReportRecord record) {
    record.value = canonical_json(record.value);
    pending_.push_back(std::move(record));
}

void Reporter::flush_tick(long tick) {
    // Stable order inside a tick: callback, then subject, then insertion.
    std::stable_sort(pending_.begin(), pending_.end(), [](const ReportRecord& a, const ReportRecord& b) {
        if (a.callback != b.callback) {
            return a.callback < b.callback;
        }
        return a.subject < b.subject;
    });
    for (const ReportRecord& record : pending_) {
        ReportMode m = mode(record.callback);
        if (m == ReportMode::Csv) {
            auto it = csv_files_.find(record.callback);
            if (it == csv_files_.end()) {
                std::filesystem::path path = run_dir_ / "metrics" / (record.callback + ".csv");
                std::ofstream file(path, std::ios::binary);
                if (!file) {
                    throw IoError("cannot open '" + path.string() + "'");
                }
                file << "tick,callback,scope,subject,value\n";
                it = csv_files_.emplace(record.callback, std::move(file)).first;
            }
            it->second << record.tick << ',' << record.callback << ',' << record.scope << ','
                       << record.subject << ',' << csv_value(record.value) << '\n';
        } else if (m == ReportMode::Json) {
            json_doc_[std::to_string(record.tick)][record.callback][record.subject] = record.value;
        }
        ++records_written_;
    }
    (void)tick;
    pending_.clear();
}

void Reporter::finalize() {
    for (auto& [name, file] : csv_files_) {
        (void)name;
        file.flush();
    }
}

} // namespace cesim
