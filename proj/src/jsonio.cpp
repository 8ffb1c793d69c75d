#include "geoidx/jsonio.hpp"

#include <fstream>
#include <sstream>

namespace geoidx::jsonio {

ValidationError::ValidationError(std::string source, std::size_t line, const std::string& message)
    : Error(source + ":" + std::to_string(line) + ": " + message),
      source_(std::move(source)),
      line_(line),
      message_(message) {}

std::string pointer_token(const std::string& key) {
    std::string out;
    for (char c : key) {
        if (c == '~') out += "~0";
        else if (c == '/') out += "~1";
        else out += c;
    }
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

namespace {

// Walks text that is already known to be valid JSON, recording the line on
// which each value starts.
class LineScanner {
public:
    LineScanner(const std::string& text, std::map<std::string, std::size_t>& lines) : s_(text), lines_(lines) {}

    void run() {
        skip_ws();
        value("");
    }

private:
    void skip_ws() {
        while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\n' || s_[pos_] == '\r')) {
            if (s_[pos_] == '\n') ++line_;
            ++pos_;
        }
    }

    std::string string_token() {
        const std::size_t start = pos_++;
        while (pos_ < s_.size() && s_[pos_] != '"') {
            if (s_[pos_] == '\\') ++pos_;
            ++pos_;
        }
        ++pos_;
        return json::parse(s_.substr(start, pos_ - start)).get<std::string>();
    }

    void value(const std::string& ptr) {
        lines_.emplace(ptr, line_);
        const char c = s_[pos_];
        if (c == '{') {
            ++pos_;
            skip_ws();
            while (s_[pos_] != '}') {
                const std::string key = string_token();
                skip_ws();
                ++pos_;  // ':'
                skip_ws();
                value(ptr + "/" + pointer_token(key));
                skip_ws();
                if (s_[pos_] == ',') {
                    ++pos_;
                    skip_ws();
                }
            }
            ++pos_;
        } else if (c == '[') {
            ++pos_;
            skip_ws();
            std::size_t i = 0;
            while (s_[pos_] != ']') {
                value(ptr + "/" + std::to_string(i++));
                skip_ws();
                if (s_[pos_] == ',') {
                    ++pos_;
                    skip_ws();
                }
            }
            ++pos_;
        } else if (c == '"') {
            string_token();
        } else {
            while (pos_ < s_.size() && s_[pos_] != ',' && s_[pos_] != '}' && s_[pos_] != ']' && s_[pos_] != ' ' &&
                   s_[pos_] != '\n' && s_[pos_] != '\r' && s_[pos_] != '\t') {
                ++pos_;
            }
        }
    }

    const std::string& s_;
    std::map<std::string, std::size_t>& lines_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
};

}  // namespace

Document Document::parse(const std::string& text, std::string source) {
    Document d;
    d.source_ = std::move(source);
    try {
        d.root_ = json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') ++line;
        }
        std::string msg = e.what();
        const auto cut = msg.find("] ");
        if (cut != std::string::npos) msg = msg.substr(cut + 2);
        throw ValidationError(d.source_, line, "malformed JSON: " + msg);
    }
    LineScanner(text, d.lines_).run();
    return d;
}

Document Document::load(const std::string& path) { return parse(read_file(path), path); }

std::size_t Document::line_of(const std::string& pointer) const {
    std::string p = pointer;
    while (true) {
        auto it = lines_.find(p);
        if (it != lines_.end()) return it->second;
        if (p.empty()) return 1;
        p = p.substr(0, p.rfind('/'));
    }
}

void Document::fail(const std::string& pointer, const std::string& message) const {
    throw ValidationError(source_, line_of(pointer), message);
}

}  // namespace geoidx::jsonio
