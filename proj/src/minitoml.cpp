#include "aspectsum/minitoml.hpp"

#include <cctype>
#include <sstream>
#include <stdexcept>

#include "aspectsum/util.hpp"

namespace aspectsum {

namespace {

struct Cursor {
    const std::string& line;
    std::size_t pos = 0;

    bool done() const { return pos >= line.size(); }
    char peek() const { return line[pos]; }
    void skip_ws() {
        while (!done() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
    }
};

[[noreturn]] void fail(const std::string& origin, std::size_t line_no, const std::string& what) {
    throw std::runtime_error(origin + ":" + std::to_string(line_no) + ": " + what);
}

std::string parse_string(Cursor& c, const std::string& origin, std::size_t line_no) {
    ++c.pos;  // opening quote
    std::string out;
    while (!c.done() && c.peek() != '"') {
        char ch = c.line[c.pos++];
        if (ch == '\\') {
            if (c.done()) fail(origin, line_no, "dangling escape in string");
            const char esc = c.line[c.pos++];
            switch (esc) {
                case 'n': out += '\n'; break;
                case 't': out += '\t'; break;
                case '"': out += '"'; break;
                case '\\': out += '\\'; break;
                default: fail(origin, line_no, std::string("unsupported escape \\") + esc);
            }
        } else {
            out += ch;
        }
    }
    if (c.done()) fail(origin, line_no, "unterminated string");
    ++c.pos;  // closing quote
    return out;
}

nlohmann::json parse_scalar(Cursor& c, const std::string& origin, std::size_t line_no) {
    c.skip_ws();
    if (c.done()) fail(origin, line_no, "missing value");
    if (c.peek() == '"') return parse_string(c, origin, line_no);

    std::string word;
    while (!c.done() && c.peek() != ',' && c.peek() != ']' && c.peek() != '#' &&
           c.peek() != ' ' && c.peek() != '\t')
        word += c.line[c.pos++];
    if (word == "true") return true;
    if (word == "false") return false;
    if (word.empty()) fail(origin, line_no, "missing value");

    const bool looks_float = word.find_first_of(".eE") != std::string::npos &&
                             word.find_first_not_of("+-0123456789.eE") == std::string::npos;
    try {
        std::size_t used = 0;
        if (looks_float) {
            const double d = std::stod(word, &used);
            if (used == word.size()) return d;
        } else {
            const long long v = std::stoll(word, &used);
            if (used == word.size()) return v;
        }
    } catch (const std::exception&) {
        // fall through to the error below
    }
    fail(origin, line_no, "cannot parse value '" + word + "'");
}

nlohmann::json parse_value(Cursor& c, const std::string& origin, std::size_t line_no) {
    c.skip_ws();
    if (c.done()) fail(origin, line_no, "missing value");
    if (c.peek() != '[') return parse_scalar(c, origin, line_no);

    ++c.pos;  // '['
    nlohmann::json arr = nlohmann::json::array();
    c.skip_ws();
    if (!c.done() && c.peek() == ']') {
        ++c.pos;
        return arr;
    }
    while (true) {
        arr.push_back(parse_scalar(c, origin, line_no));
        c.skip_ws();
        if (c.done()) fail(origin, line_no, "unterminated array");
        if (c.peek() == ',') {
            ++c.pos;
            c.skip_ws();
            continue;
        }
        if (c.peek() == ']') {
            ++c.pos;
            return arr;
        }
        fail(origin, line_no, "expected ',' or ']' in array");
    }
}

bool valid_key(const std::string& key) {
    if (key.empty()) return false;
    for (char ch : key)
        if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '_' && ch != '-') return false;
    return true;
}

// Strips a trailing comment that is not inside a string literal.
std::string strip_comment(const std::string& line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (ch == '"' && (i == 0 || line[i - 1] != '\\')) in_string = !in_string;
        if (ch == '#' && !in_string) return line.substr(0, i);
    }
    return line;
}

}  // namespace

nlohmann::json parse_minitoml(const std::string& content, const std::string& origin) {
    nlohmann::json root = nlohmann::json::object();
    nlohmann::json* table = &root;

    std::istringstream in(content);
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = trim(strip_comment(raw));
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') fail(origin, line_no, "unterminated table header");
            const std::string name = trim(line.substr(1, line.size() - 2));
            if (name.empty()) fail(origin, line_no, "empty table name");
            table = &root;
            for (const std::string& part : split(name, '.')) {
                const std::string key = trim(part);
                if (!valid_key(key)) fail(origin, line_no, "bad table name '" + name + "'");
                table = &(*table)[key];
                if (!table->is_object() && !table->is_null())
                    fail(origin, line_no, "table '" + name + "' collides with a value");
                if (table->is_null()) *table = nlohmann::json::object();
            }
            continue;
        }

        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) fail(origin, line_no, "expected key = value");
        const std::string key = trim(line.substr(0, eq));
        if (!valid_key(key)) fail(origin, line_no, "bad key '" + key + "'");
        if (table->contains(key)) fail(origin, line_no, "duplicate key '" + key + "'");

        const std::string value_text = line.substr(eq + 1);
        Cursor cursor{value_text, 0};
        nlohmann::json value = parse_value(cursor, origin, line_no);
        cursor.skip_ws();
        if (!cursor.done()) fail(origin, line_no, "trailing characters after value");
        (*table)[key] = std::move(value);
    }
    return root;
}

}  // namespace aspectsum
