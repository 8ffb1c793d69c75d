#include "geoidx/query.hpp"

#include <cctype>
#include <charconv>
#include <sstream>

namespace geoidx::query {

const char* to_string(Cmp c) {
    switch (c) {
        case Cmp::Eq: return "=";
        case Cmp::Lt: return "<";
        case Cmp::Le: return "<=";
        case Cmp::Gt: return ">";
        case Cmp::Ge: return ">=";
    }
    return "?";
}

ParseError::ParseError(Kind kind, std::size_t offset, const std::string& message)
    : Error("at offset " + std::to_string(offset) + ": " + message), kind_(kind), offset_(offset) {}

namespace {

struct Token {
    enum class Type { Ident, Number, String, Op, LParen, RParen, Colon, End };
    Type type = Type::End;
    std::string text;
    Value value;
    std::size_t offset = 0;
};

class Lexer {
public:
    explicit Lexer(const std::string& text) : s_(text) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        while (true) {
            while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
            if (pos_ >= s_.size()) break;
            out.push_back(next());
        }
        out.push_back(Token{Token::Type::End, "", {}, s_.size()});
        return out;
    }

private:
    Token next() {
        const std::size_t start = pos_;
        const char c = s_[pos_];
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
            return Token{Token::Type::Ident, s_.substr(start, pos_ - start), {}, start};
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.') return number();
        if (c == '"') return string();
        if (c == '(') return single(Token::Type::LParen);
        if (c == ')') return single(Token::Type::RParen);
        if (c == ':') return single(Token::Type::Colon);
        if (c == '=') return single(Token::Type::Op);
        if (c == '<' || c == '>') {
            ++pos_;
            if (pos_ < s_.size() && s_[pos_] == '=') ++pos_;
            return Token{Token::Type::Op, s_.substr(start, pos_ - start), {}, start};
        }
        throw ParseError(ParseError::Kind::Syntax, start, std::string("unexpected character '") + c + "'");
    }

    Token single(Token::Type t) {
        ++pos_;
        return Token{t, s_.substr(pos_ - 1, 1), {}, pos_ - 1};
    }

    Token number() {
        const std::size_t start = pos_;
        const char* first = s_.data() + pos_;
        if (*first == '+') ++first;
        double d = 0;
        auto res = std::from_chars(first, s_.data() + s_.size(), d);
        if (res.ec != std::errc()) throw ParseError(ParseError::Kind::Syntax, start, "malformed number");
        pos_ = static_cast<std::size_t>(res.ptr - s_.data());
        return Token{Token::Type::Number, s_.substr(start, pos_ - start), d, start};
    }

    Token string() {
        const std::size_t start = pos_++;
        std::string out;
        while (true) {
            if (pos_ >= s_.size()) throw ParseError(ParseError::Kind::Syntax, start, "unterminated string");
            const char c = s_[pos_++];
            if (c == '"') break;
            if (c == '\\') {
                if (pos_ >= s_.size()) throw ParseError(ParseError::Kind::Syntax, start, "unterminated string");
                out.push_back(s_[pos_++]);
                continue;
            }
            out.push_back(c);
        }
        return Token{Token::Type::String, s_.substr(start, pos_ - start), out, start};
    }

    const std::string& s_;
    std::size_t pos_ = 0;
};

bool keyword(const Token& t, const char* word) {
    if (t.type != Token::Type::Ident || t.text.size() != std::char_traits<char>::length(word)) return false;
    for (std::size_t i = 0; i < t.text.size(); ++i) {
        if (std::toupper(static_cast<unsigned char>(t.text[i])) != word[i]) return false;
    }
    return true;
}

class Parser {
public:
    Parser(std::vector<Token> tokens, const Schema& schema) : toks_(std::move(tokens)), schema_(schema) {}

    Query run() {
        if (peek().type == Token::Type::End) {
            throw ParseError(ParseError::Kind::Syntax, 0, "empty query");
        }
        Query q;
        q.expr = expr();
        if (keyword(peek(), "FRESHNESS")) {
            take();
            q.level = level();
        }
        if (peek().type != Token::Type::End) {
            throw ParseError(ParseError::Kind::Syntax, peek().offset, "unexpected '" + peek().text + "'");
        }
        return q;
    }

private:
    const Token& peek() const { return toks_[pos_]; }
    const Token& take() {
        const Token& t = toks_[pos_];
        if (t.type != Token::Type::End) ++pos_;
        return t;
    }

    Expr expr() {
        std::vector<Expr> parts{term()};
        while (keyword(peek(), "OR")) {
            take();
            parts.push_back(term());
        }
        return parts.size() == 1 ? std::move(parts[0]) : Expr::any_of(std::move(parts));
    }

    Expr term() {
        std::vector<Expr> parts{factor()};
        while (keyword(peek(), "AND")) {
            take();
            parts.push_back(factor());
        }
        return parts.size() == 1 ? std::move(parts[0]) : Expr::all_of(std::move(parts));
    }

    Expr factor() {
        if (peek().type == Token::Type::LParen) {
            take();
            Expr e = expr();
            if (peek().type != Token::Type::RParen) {
                throw ParseError(ParseError::Kind::Syntax, peek().offset, "expected ')'");
            }
            take();
            return e;
        }
        return Expr::leaf(predicate());
    }

    Predicate predicate() {
        const Token& name = take();
        if (name.type != Token::Type::Ident || keyword(name, "AND") || keyword(name, "OR") ||
            keyword(name, "FRESHNESS")) {
            throw ParseError(ParseError::Kind::Syntax, name.offset,
                             name.type == Token::Type::End ? "expected a predicate" : "expected an attribute name");
        }
        const auto axis = schema_.find(name.text);
        if (!axis) {
            throw ParseError(ParseError::Kind::UnknownAttribute, name.offset, "unknown attribute '" + name.text + "'");
        }
        const Token& op = take();
        if (op.type != Token::Type::Op) throw ParseError(ParseError::Kind::Syntax, op.offset, "expected a comparator");
        Predicate p;
        p.attr = name.text;
        if (op.text == "=") p.cmp = Cmp::Eq;
        else if (op.text == "<") p.cmp = Cmp::Lt;
        else if (op.text == "<=") p.cmp = Cmp::Le;
        else if (op.text == ">") p.cmp = Cmp::Gt;
        else p.cmp = Cmp::Ge;

        const Token& lit = take();
        if (lit.type != Token::Type::Number && lit.type != Token::Type::String) {
            throw ParseError(ParseError::Kind::Syntax, lit.offset, "expected a number or a quoted string");
        }
        const Attribute& attr = schema_.at(*axis);
        if ((attr.kind == AttrKind::Numeric) != (lit.type == Token::Type::Number)) {
            throw ParseError(ParseError::Kind::Domain, lit.offset,
                             "'" + attr.name + "' is " + (attr.kind == AttrKind::Numeric ? "numeric" : "text"));
        }
        if (!schema_.conforms(*axis, lit.value)) {
            throw ParseError(ParseError::Kind::Domain, lit.offset,
                             format_value(lit.value) + " lies outside the domain of '" + attr.name + "'");
        }
        p.value = lit.value;
        return p;
    }

    StalenessLevel level() {
        const Token& t = take();
        if (keyword(t, "STRONG")) return StalenessLevel::strong();
        if (keyword(t, "SNAPSHOT")) return StalenessLevel::snapshot();
        if (keyword(t, "ANY")) return StalenessLevel::any();
        if (keyword(t, "BOUNDED")) {
            if (take().type != Token::Type::Colon) {
                throw ParseError(ParseError::Kind::Syntax, t.offset + t.text.size(), "expected ':' after bounded");
            }
            const Token& k = take();
            std::uint64_t v = 0;
            const char* end = k.text.data() + k.text.size();
            auto res = std::from_chars(k.text.data(), end, v);
            if (k.type != Token::Type::Number || res.ec != std::errc() || res.ptr != end) {
                throw ParseError(ParseError::Kind::Syntax, k.offset, "expected a non-negative integer bound");
            }
            return StalenessLevel::bounded(v);
        }
        throw ParseError(ParseError::Kind::Syntax, t.offset, "expected strong, bounded:<k>, snapshot or any");
    }

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
    const Schema& schema_;
};

void print_to(std::ostream& os, const Expr& e) {
    if (e.kind == Expr::Kind::Pred) {
        os << e.pred.attr << ' ' << to_string(e.pred.cmp) << ' ' << format_value(e.pred.value);
        return;
    }
    const char* sep = e.kind == Expr::Kind::And ? " AND " : " OR ";
    for (std::size_t i = 0; i < e.children.size(); ++i) {
        if (i) os << sep;
        const Expr& c = e.children[i];
        if (c.kind == Expr::Kind::Pred) {
            print_to(os, c);
        } else {
            os << '(';
            print_to(os, c);
            os << ')';
        }
    }
}

}  // namespace

Query parse(const std::string& text, const Schema& schema) {
    return Parser(Lexer(text).run(), schema).run();
}

std::string print(const Expr& e) {
    std::ostringstream os;
    print_to(os, e);
    return os.str();
}

std::string print(const Query& q) { return print(q.expr) + " FRESHNESS " + q.level.to_string(); }

bool evaluate(const Predicate& p, const Schema& schema, const Point& point) {
    const int c = compare(point.at(schema.axis_of(p.attr)), p.value);
    switch (p.cmp) {
        case Cmp::Eq: return c == 0;
        case Cmp::Lt: return c < 0;
        case Cmp::Le: return c <= 0;
        case Cmp::Gt: return c > 0;
        case Cmp::Ge: return c >= 0;
    }
    return false;
}

bool evaluate(const Expr& e, const Schema& schema, const Point& point) {
    switch (e.kind) {
        case Expr::Kind::Pred: return evaluate(e.pred, schema, point);
        case Expr::Kind::And:
            for (const auto& c : e.children) {
                if (!evaluate(c, schema, point)) return false;
            }
            return true;
        case Expr::Kind::Or:
            for (const auto& c : e.children) {
                if (evaluate(c, schema, point)) return true;
            }
            return false;
    }
    return false;
}

std::vector<std::vector<Predicate>> to_dnf(const Expr& e, std::size_t max_conjuncts) {
    using Dnf = std::vector<std::vector<Predicate>>;
    switch (e.kind) {
        case Expr::Kind::Pred: return Dnf{{e.pred}};
        case Expr::Kind::Or: {
            Dnf out;
            for (const auto& c : e.children) {
                Dnf part = to_dnf(c, max_conjuncts);
                out.insert(out.end(), part.begin(), part.end());
                if (out.size() > max_conjuncts) throw Error("query expands to more than " + std::to_string(max_conjuncts) + " conjuncts");
            }
            return out;
        }
        case Expr::Kind::And: {
            Dnf out{{}};
            for (const auto& c : e.children) {
                Dnf part = to_dnf(c, max_conjuncts);
                if (out.size() * part.size() > max_conjuncts) {
                    throw Error("query expands to more than " + std::to_string(max_conjuncts) + " conjuncts");
                }
                Dnf next;
                for (const auto& a : out) {
                    for (const auto& b : part) {
                        auto conj = a;
                        conj.insert(conj.end(), b.begin(), b.end());
                        next.push_back(std::move(conj));
                    }
                }
                out = std::move(next);
            }
            return out;
        }
    }
    return {};
}

Interval predicate_interval(const Predicate& p, const Schema& schema) {
    const Attribute& a = schema.at(schema.axis_of(p.attr));
    switch (p.cmp) {
        case Cmp::Eq: return Interval{p.value, p.value, false, false};
        case Cmp::Lt: return Interval{a.min, p.value, false, true};
        case Cmp::Le: return Interval{a.min, p.value, false, false};
        case Cmp::Gt: return Interval{p.value, a.max, true, false};
        case Cmp::Ge: return Interval{p.value, a.max, false, false};
    }
    return Interval{a.min, a.max};
}

std::vector<Rect> to_rectangles(const Expr& e, const Schema& schema) {
    std::vector<Rect> out;
    for (auto& conj : to_dnf(e)) {
        Region r = Region::full(schema);
        for (const auto& p : conj) {
            const std::size_t axis = schema.axis_of(p.attr);
            r.axis(axis) = intersect(r.axis(axis), predicate_interval(p, schema));
        }
        if (r.empty()) continue;
        out.push_back(Rect{std::move(r), std::move(conj)});
    }
    return out;
}

QueryGenerator::QueryGenerator(const Schema& schema, std::vector<std::vector<Value>> pools)
    : schema_(schema), pools_(std::move(pools)) {
    pools_.resize(schema.size());
    for (std::size_t i = 0; i < schema.size(); ++i) {
        if (!pools_[i].empty()) continue;
        const Attribute& a = schema.at(i);
        if (a.kind == AttrKind::Numeric) {
            const double lo = std::get<double>(a.min);
            const double hi = std::get<double>(a.max);
            for (int k = 0; k <= 20; ++k) pools_[i].push_back(lo + (hi - lo) * k / 20.0);
        } else {
            pools_[i] = {a.min, a.max};
        }
    }
}

Predicate QueryGenerator::predicate(std::mt19937_64& rng) const {
    const auto axis = std::uniform_int_distribution<std::size_t>(0, schema_.size() - 1)(rng);
    const auto& pool = pools_[axis];
    Predicate p;
    p.attr = schema_.at(axis).name;
    p.cmp = static_cast<Cmp>(std::uniform_int_distribution<int>(0, 4)(rng));
    p.value = pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
    return p;
}

Expr QueryGenerator::expr(std::mt19937_64& rng, int depth) const {
    if (depth <= 0 || std::uniform_int_distribution<int>(0, 2)(rng) == 0) return Expr::leaf(predicate(rng));
    const int n = std::uniform_int_distribution<int>(2, 3)(rng);
    std::vector<Expr> children;
    for (int i = 0; i < n; ++i) children.push_back(expr(rng, depth - 1));
    const bool conj = std::uniform_int_distribution<int>(0, 1)(rng) == 0;
    return conj ? Expr::all_of(std::move(children)) : Expr::any_of(std::move(children));
}

Query QueryGenerator::query(std::mt19937_64& rng, int depth) const {
    Query q;
    q.expr = expr(rng, depth);
    switch (std::uniform_int_distribution<int>(0, 3)(rng)) {
        case 0: q.level = StalenessLevel::strong(); break;
        case 1: q.level = StalenessLevel::bounded(std::uniform_int_distribution<std::uint64_t>(0, 64)(rng)); break;
        case 2: q.level = StalenessLevel::snapshot(); break;
        default: q.level = StalenessLevel::any(); break;
    }
    return q;
}

}  // namespace geoidx::query
