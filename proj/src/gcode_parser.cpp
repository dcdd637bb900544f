#include <cctype>
#include <charconv>
#include <cmath>

#include "tasteprint/errors.hpp"
#include "tasteprint/gcode.hpp"

namespace tasteprint {

namespace {

struct Word {
    char letter;
    std::string_view value;
};

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

// Splits "G1 X1.5 Y-2" into letter/value words; whitespace between a letter
// and its number is not allowed.
std::vector<Word> split_words(std::string_view s, std::size_t line) {
    std::vector<Word> words;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        if (i >= s.size()) break;
        const char letter = static_cast<char>(std::toupper(static_cast<unsigned char>(s[i])));
        if (!std::isalpha(static_cast<unsigned char>(letter)))
            throw ParseError("expected a parameter letter, found '" + std::string(1, s[i]) + "'", line,
                             ParseError::Unit::Line);
        std::size_t j = i + 1;
        while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
        words.push_back({letter, s.substr(i + 1, j - i - 1)});
        i = j;
    }
    return words;
}

double number(const Word& w, std::size_t line) {
    double v = 0.0;
    std::string_view t = w.value;
    if (!t.empty() && t.front() == '+') t.remove_prefix(1);
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || res.ec != std::errc{} || res.ptr != t.data() + t.size() || !std::isfinite(v))
        throw ParseError(std::string("malformed parameter '") + w.letter + std::string(w.value) + "'", line,
                         ParseError::Unit::Line);
    return v;
}

int integer(const Word& w, std::size_t line) {
    const double v = number(w, line);
    if (v != std::floor(v) || std::abs(v) > 1e9)
        throw ParseError(std::string("parameter '") + w.letter + std::string(w.value) + "' must be an integer", line,
                         ParseError::Unit::Line);
    return static_cast<int>(v);
}

}  // namespace

GcodeProgram parse_gcode(std::string_view text) {
    GcodeProgram prog;
    std::size_t pos = 0, line_no = 0;
    while (pos < text.size()) {
        const std::size_t nl = text.find('\n', pos);
        std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() : nl + 1;
        ++line_no;
        if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
        const std::string_view line = trim(raw);
        if (line.empty()) continue;

        auto push = [&](GcodeCommand c) {
            prog.commands.push_back(std::move(c));
            prog.source_lines.push_back(line_no);
        };
        if (line.front() == ';') {
            push(gcode::Comment{std::string(line.substr(1))});
            continue;
        }
        const std::string_view body = trim(line.substr(0, line.find(';')));
        const auto words = split_words(body, line_no);
        if (words.empty()) continue;
        const Word& head = words.front();
        const std::string code = std::string(1, head.letter) + std::to_string(integer(head, line_no));
        const std::span<const Word> params(words.data() + 1, words.size() - 1);

        auto unknown_param = [&](const Word& w) {
            prog.warnings.warn("unknown-parameter", "line " + std::to_string(line_no) + ": parameter '" +
                                                        std::string(1, w.letter) + "' ignored on " + code);
        };

        if (code == "G0" || code == "G1") {
            gcode::Move m;
            m.rapid = code == "G0";
            for (const auto& w : params) {
                switch (w.letter) {
                case 'X': m.x = number(w, line_no); break;
                case 'Y': m.y = number(w, line_no); break;
                case 'Z': m.z = number(w, line_no); break;
                case 'E': m.e = number(w, line_no); break;
                case 'F': m.f = number(w, line_no); break;
                default: unknown_param(w);
                }
            }
            push(m);
        } else if (code == "G4") {
            gcode::Dwell d;
            bool have = false;
            for (const auto& w : params) {
                if (w.letter == 'P') {
                    d.ms = integer(w, line_no);
                    have = true;
                } else {
                    unknown_param(w);
                }
            }
            if (!have) throw ParseError("G4 without P", line_no, ParseError::Unit::Line);
            push(d);
        } else if (code == "M810") {
            gcode::Spray s;
            bool have_c = false, have_d = false;
            for (const auto& w : params) {
                if (w.letter == 'C') {
                    s.channel = integer(w, line_no);
                    have_c = true;
                } else if (w.letter == 'D') {
                    s.duration_ms = integer(w, line_no);
                    have_d = true;
                } else {
                    unknown_param(w);
                }
            }
            if (!have_c || !have_d) throw ParseError("M810 needs C and D", line_no, ParseError::Unit::Line);
            push(s);
        } else if (code == "G28") {
            push(gcode::Home{});
        } else if (code == "G21" || code == "G90" || code == "M82" || code == "M84") {
            for (const auto& w : params) unknown_param(w);
            push(gcode::Setting{code});
        } else {
            prog.warnings.warn("unknown-command", "line " + std::to_string(line_no) + ": unknown command " + code +
                                                      " kept verbatim");
            push(gcode::Opaque{std::string(line)});
        }
    }
    return prog;
}

}  // namespace tasteprint
