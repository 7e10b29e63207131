#pragma once

// Output serialization. JSON is emitted directly so key order is exactly
// insertion order and doubles are printed with 17 significant digits;
// reruns of the same experiment produce byte-identical files. Files are
// written to a temporary sibling and renamed into place.

#include "gcalc/common.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace gcalc {

/// Incremental JSON builder preserving insertion order of keys.
class JsonWriter {
public:
    JsonWriter& begin_object() { return open('{'); }
    JsonWriter& end_object() { return close('}'); }
    JsonWriter& begin_array() { return open('['); }
    JsonWriter& end_array() { return close(']'); }

    JsonWriter& key(std::string_view name) {
        comma();
        append_string(name);
        out_ += ':';
        just_keyed_ = true;
        return *this;
    }

    JsonWriter& value(double v) {
        comma();
        if (std::isfinite(v)) {
            out_ += fmt_g17(v);
        } else {
            // JSON has no non-finite literals; stringify the sentinel.
            append_string(std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf"));
        }
        return *this;
    }
    JsonWriter& value(std::int64_t v) { comma(); out_ += std::to_string(v); return *this; }
    JsonWriter& value(int v) { return value(static_cast<std::int64_t>(v)); }
    JsonWriter& value(std::uint64_t v) { comma(); out_ += std::to_string(v); return *this; }
    JsonWriter& value(bool v) { comma(); out_ += v ? "true" : "false"; return *this; }
    JsonWriter& value(std::string_view v) { comma(); append_string(v); return *this; }
    JsonWriter& value(const char* v) { return value(std::string_view(v)); }

    template <class T>
    JsonWriter& kv(std::string_view name, const T& v) {
        key(name);
        return value(v);
    }

    JsonWriter& kv(std::string_view name, const std::vector<double>& vs) {
        key(name).begin_array();
        for (double v : vs) value(v);
        return end_array();
    }

    const std::string& str() const { return out_; }

private:
    JsonWriter& open(char c) {
        comma();
        out_ += c;
        needs_comma_.push_back(false);
        return *this;
    }
    JsonWriter& close(char c) {
        out_ += c;
        needs_comma_.pop_back();
        if (!needs_comma_.empty()) needs_comma_.back() = true;
        return *this;
    }
    void comma() {
        if (just_keyed_) {
            just_keyed_ = false;
            return;
        }
        if (!needs_comma_.empty()) {
            if (needs_comma_.back()) out_ += ',';
            needs_comma_.back() = true;
        }
    }
    void append_string(std::string_view s) {
        out_ += '"';
        for (char c : s) {
            switch (c) {
            case '"': out_ += "\\\""; break;
            case '\\': out_ += "\\\\"; break;
            case '\n': out_ += "\\n"; break;
            case '\t': out_ += "\\t"; break;
            case '\r': out_ += "\\r"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                    out_ += buf;
                } else {
                    out_ += c;
                }
            }
        }
        out_ += '"';
    }

    std::string out_;
    std::vector<bool> needs_comma_;
    bool just_keyed_ = false;
};

/// Write content to path atomically (temp file in the same directory, then
/// rename). Creates parent directories as needed.
inline void atomic_write(const std::filesystem::path& path, std::string_view content) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw Error("atomic_write: cannot open " + tmp.string());
        os.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!os) throw Error("atomic_write: short write to " + tmp.string());
    }
    fs::rename(tmp, path);
}

} // namespace gcalc
