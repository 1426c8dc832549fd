#pragma once

#include <charconv>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace fractal {

// Shortest round-trip decimal form; locale-free and deterministic, so equal
// inputs produce byte-identical report bodies.
inline std::string format_number(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

template <typename T>
    requires std::is_integral_v<T>
inline std::string format_number(T v) {
    return std::to_string(v);
}

// Minimal RFC 4180 writer: CRLF line endings, quoting only when needed.
class CsvWriter {
public:
    explicit CsvWriter(std::initializer_list<std::string_view> header) {
        bool first = true;
        for (auto h : header) {
            if (!first) out_ += ',';
            out_ += escape(std::string(h));
            first = false;
        }
        out_ += "\r\n";
    }

    template <typename... Ts>
    void row(const Ts&... cells) {
        bool first = true;
        (append_cell(cells, first), ...);
        out_ += "\r\n";
    }

    const std::string& str() const { return out_; }

private:
    static std::string escape(const std::string& s) {
        if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
        std::string q = "\"";
        for (char c : s) {
            if (c == '"') q += '"';
            q += c;
        }
        q += '"';
        return q;
    }

    template <typename T>
    void append_cell(const T& v, bool& first) {
        if (!first) out_ += ',';
        first = false;
        if constexpr (std::is_convertible_v<T, std::string_view>) {
            out_ += escape(std::string(v));
        } else {
            out_ += format_number(v);
        }
    }

    std::string out_;
};

} // namespace fractal
