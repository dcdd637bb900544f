#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace tasteprint {

enum class Severity { Info, Warning, Error };

struct Diagnostic {
    Severity severity = Severity::Warning;
    std::string code;     // stable machine-readable tag, e.g. "extrapolation"
    std::string message;
    std::optional<std::size_t> layer;

    bool operator==(const Diagnostic&) const = default;
};

/// Append-only collection of warnings and errors produced by an operation.
class Diagnostics {
public:
    void add(Severity s, std::string code, std::string message,
             std::optional<std::size_t> layer = std::nullopt);
    void warn(std::string code, std::string message, std::optional<std::size_t> layer = std::nullopt) {
        add(Severity::Warning, std::move(code), std::move(message), layer);
    }
    void error(std::string code, std::string message, std::optional<std::size_t> layer = std::nullopt) {
        add(Severity::Error, std::move(code), std::move(message), layer);
    }
    void append(const Diagnostics& other);

    const std::vector<Diagnostic>& items() const { return items_; }
    bool empty() const { return items_.empty(); }
    std::size_t size() const { return items_.size(); }
    std::size_t count(Severity s) const;
    std::size_t count(const std::string& code) const;
    bool has_errors() const { return count(Severity::Error) > 0; }

    nlohmann::json to_json() const;
    std::string to_text() const;

private:
    std::vector<Diagnostic> items_;
};

/// Adds to `sink` if non-null.
inline void note(Diagnostics* sink, Severity s, std::string code, std::string message,
                 std::optional<std::size_t> layer = std::nullopt) {
    if (sink) sink->add(s, std::move(code), std::move(message), layer);
}

const char* to_string(Severity s);

}  // namespace tasteprint
