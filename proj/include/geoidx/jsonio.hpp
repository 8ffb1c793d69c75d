#pragma once

#include <map>
#include <set>
#include <string>

#include <json.hpp>

#include "geoidx/value.hpp"

namespace geoidx::jsonio {

using json = nlohmann::ordered_json;

/// A validation failure anchored to a line of the input file. what() reads
/// "<source>:<line>: <message>".
class ValidationError : public Error {
public:
    ValidationError(std::string source, std::size_t line, const std::string& message);
    const std::string& source() const { return source_; }
    std::size_t line() const { return line_; }
    const std::string& message() const { return message_; }

private:
    std::string source_;
    std::size_t line_;
    std::string message_;
};

/// Parsed JSON plus the 1-based line on which every value starts, keyed by
/// JSON pointer ("" for the root, "/workload/3/key").
class Document {
public:
    /// Throws ValidationError on malformed JSON.
    static Document parse(const std::string& text, std::string source);
    static Document load(const std::string& path);

    const json& root() const { return root_; }
    const std::string& source() const { return source_; }

    /// Line of the value at pointer, or of its nearest ancestor.
    std::size_t line_of(const std::string& pointer) const;

    [[noreturn]] void fail(const std::string& pointer, const std::string& message) const;

private:
    json root_;
    std::string source_;
    std::map<std::string, std::size_t> lines_;
};

/// Escapes a key for use in a JSON pointer.
std::string pointer_token(const std::string& key);

// Strict view of one JSON object: unknown fields are rejected.
class Object {
public:
    Object(const Document& doc, std::string ptr, std::set<std::string> allowed)
        : doc_(doc), ptr_(std::move(ptr)), v_(doc.root().at(json::json_pointer(ptr_))) {
        if (!v_.is_object()) doc_.fail(ptr_, "expected an object");
        for (const auto& [k, _] : v_.items()) {
            if (!allowed.count(k)) doc_.fail(p(k), "unknown field '" + k + "'");
        }
    }

    bool has(const std::string& k) const { return v_.contains(k); }
    std::string p(const std::string& k) const { return ptr_ + "/" + jsonio::pointer_token(k); }
    const json& at(const std::string& k) const {
        if (!has(k)) doc_.fail(ptr_, "missing field '" + k + "'");
        return v_.at(k);
    }
    const std::string& ptr() const { return ptr_; }
    const Document& doc() const { return doc_; }

    std::uint64_t u64(const std::string& k) const {
        const json& x = at(k);
        if (!x.is_number_unsigned() && !(x.is_number_integer() && x.get<std::int64_t>() >= 0)) {
            doc_.fail(p(k), "'" + k + "' must be a non-negative integer");
        }
        return x.get<std::uint64_t>();
    }
    std::uint64_t u64(const std::string& k, std::uint64_t def) const { return has(k) ? u64(k) : def; }

    double num(const std::string& k) const {
        const json& x = at(k);
        if (!x.is_number()) doc_.fail(p(k), "'" + k + "' must be a number");
        return x.get<double>();
    }
    double num(const std::string& k, double def) const { return has(k) ? num(k) : def; }

    bool flag(const std::string& k, bool def) const {
        if (!has(k)) return def;
        if (!at(k).is_boolean()) doc_.fail(p(k), "'" + k + "' must be true or false");
        return at(k).get<bool>();
    }

    std::string str(const std::string& k) const {
        const json& x = at(k);
        if (!x.is_string()) doc_.fail(p(k), "'" + k + "' must be a string");
        return x.get<std::string>();
    }
    std::string str(const std::string& k, const std::string& def) const { return has(k) ? str(k) : def; }

private:
    const Document& doc_;
    std::string ptr_;
    const json& v_;
};

/// Reads a whole file; throws Error if it cannot be opened.
std::string read_file(const std::string& path);

}  // namespace geoidx::jsonio
