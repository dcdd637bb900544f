#include "tasteprint/diagnostics.hpp"

#include <algorithm>
#include <sstream>

namespace tasteprint {

const char* to_string(Severity s) {
    switch (s) {
    case Severity::Info: return "info";
    case Severity::Warning: return "warning";
    case Severity::Error: return "error";
    }
    return "unknown";
}

void Diagnostics::add(Severity s, std::string code, std::string message, std::optional<std::size_t> layer) {
    items_.push_back(Diagnostic{s, std::move(code), std::move(message), layer});
}

void Diagnostics::append(const Diagnostics& other) {
    items_.insert(items_.end(), other.items_.begin(), other.items_.end());
}

std::size_t Diagnostics::count(Severity s) const {
    return static_cast<std::size_t>(
        std::count_if(items_.begin(), items_.end(), [s](const Diagnostic& d) { return d.severity == s; }));
}

std::size_t Diagnostics::count(const std::string& code) const {
    return static_cast<std::size_t>(
        std::count_if(items_.begin(), items_.end(), [&](const Diagnostic& d) { return d.code == code; }));
}

nlohmann::json Diagnostics::to_json() const {
    auto out = nlohmann::json::array();
    for (const auto& d : items_) {
        nlohmann::json j{{"severity", to_string(d.severity)}, {"code", d.code}, {"message", d.message}};
        if (d.layer) j["layer"] = *d.layer;
        out.push_back(std::move(j));
    }
    return out;
}

std::string Diagnostics::to_text() const {
    std::ostringstream os;
    for (const auto& d : items_) {
        os << to_string(d.severity) << ": ";
        if (d.layer) os << "[layer " << *d.layer << "] ";
        os << d.message << " (" << d.code << ")\n";
    }
    return os.str();
}

}  // namespace tasteprint
