#include "tracelens/property.hpp"

#include "tracelens/errors.hpp"

#include <cctype>
#include <charconv>
#include <cmath>

namespace tracelens {

namespace {

enum class Tok {
    End, LParen, RParen, LBracket, RBracket, LBrace, RBrace, Comma,
    Bang, Amp, Pipe, Implies, EqQuery, Le, Ge, Lt, Gt,
    Ident, Str, Num
};

struct Token {
    Tok kind = Tok::End;
    int pos = 0; // 1-based column
    std::string text;
    double num = 0.0;
};

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    Token next() {
        while (at_ < src_.size() && (src_[at_] == ' ' || src_[at_] == '\t')) ++at_;
        Token t;
        t.pos = static_cast<int>(at_) + 1;
        if (at_ >= src_.size()) return t;
        char c = src_[at_];
        switch (c) {
        case '(': ++at_; t.kind = Tok::LParen; return t;
        case ')': ++at_; t.kind = Tok::RParen; return t;
        case '[': ++at_; t.kind = Tok::LBracket; return t;
        case ']': ++at_; t.kind = Tok::RBracket; return t;
        case '{': ++at_; t.kind = Tok::LBrace; return t;
        case '}': ++at_; t.kind = Tok::RBrace; return t;
        case ',': ++at_; t.kind = Tok::Comma; return t;
        case '!': ++at_; t.kind = Tok::Bang; return t;
        case '&': ++at_; t.kind = Tok::Amp; return t;
        case '|': ++at_; t.kind = Tok::Pipe; return t;
        case '=':
            if (at_ + 1 < src_.size() && src_[at_ + 1] == '?') {
                at_ += 2; t.kind = Tok::EqQuery; return t;
            }
            if (at_ + 1 < src_.size() && src_[at_ + 1] == '>') {
                at_ += 2; t.kind = Tok::Implies; return t;
            }
            fail(t.pos, "unexpected '='");
        case '<':
            if (at_ + 1 < src_.size() && src_[at_ + 1] == '=') { at_ += 2; t.kind = Tok::Le; }
            else { ++at_; t.kind = Tok::Lt; }
            return t;
        case '>':
            if (at_ + 1 < src_.size() && src_[at_ + 1] == '=') { at_ += 2; t.kind = Tok::Ge; }
            else { ++at_; t.kind = Tok::Gt; }
            return t;
        case '"': {
            size_t end = src_.find('"', at_ + 1);
            if (end == std::string_view::npos)
                fail(t.pos, "unterminated label");
            t.kind = Tok::Str;
            t.text = std::string(src_.substr(at_ + 1, end - at_ - 1));
            at_ = end + 1;
            return t;
        }
        default: break;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            size_t start = at_;
            while (at_ < src_.size() &&
                   (std::isdigit(static_cast<unsigned char>(src_[at_])) || src_[at_] == '.' ||
                    src_[at_] == 'e' || src_[at_] == 'E' ||
                    ((src_[at_] == '+' || src_[at_] == '-') && at_ > start &&
                     (src_[at_ - 1] == 'e' || src_[at_ - 1] == 'E'))))
                ++at_;
            std::string_view num = src_.substr(start, at_ - start);
            auto [p, ec] = std::from_chars(num.data(), num.data() + num.size(), t.num);
            if (ec != std::errc{} || p != num.data() + num.size())
                fail(t.pos, "bad number '" + std::string(num) + "'");
            t.kind = Tok::Num;
            t.text = std::string(num);
            return t;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            size_t start = at_;
            while (at_ < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(src_[at_])) || src_[at_] == '_'))
                ++at_;
            t.kind = Tok::Ident;
            t.text = std::string(src_.substr(start, at_ - start));
            return t;
        }
        fail(t.pos, std::string("unexpected character '") + c + "'");
    }

    [[noreturn]] static void fail(int pos, const std::string& msg) {
        throw InputError("syntax error at column " + std::to_string(pos) + ": " + msg);
    }

private:
    std::string_view src_;
    size_t at_ = 0;
};

class Parser {
public:
    explicit Parser(std::string_view src) : lex_(src) { advance(); }

    Property parse() {
        Property prop;
        if (cur_.kind == Tok::Ident && cur_.text == "filter") {
            advance();
            expect(Tok::LParen, "'(' after filter");
            if (cur_.kind != Tok::Ident || cur_.text != "state")
                Lexer::fail(cur_.pos, "only filter(state, ...) is supported");
            advance();
            expect(Tok::Comma, "',' after state");
            StateFormulaPtr query = parse_state_formula();
            if (!is_quantitative(*query))
                Lexer::fail(query->pos, "filter needs a quantitative query (P=? or R{...}=?)");
            reject_nested_queries(*query, true);
            expect(Tok::Comma, "',' after the filter query");
            StateFormulaPtr cond = parse_state_formula();
            reject_nested_queries(*cond, false);
            expect(Tok::RParen, "')' closing filter");
            expect(Tok::End, "end of property");
            prop.formula = std::move(query);
            prop.filter_condition = std::move(cond);
            return prop;
        }
        StateFormulaPtr f = parse_state_formula();
        expect(Tok::End, "end of property");
        reject_nested_queries(*f, true);
        prop.formula = std::move(f);
        return prop;
    }

private:
    void advance() { cur_ = lex_.next(); }

    void expect(Tok kind, const char* what) {
        if (cur_.kind != kind)
            Lexer::fail(cur_.pos, std::string("expected ") + what);
        advance();
    }

    static bool is_quantitative(const StateFormula& f) {
        return (f.kind == StateFormula::Kind::Prob && f.cmp == CompareOp::Query) ||
               f.kind == StateFormula::Kind::Reward;
    }

    // Quantitative queries may appear only as the root (when allow_root).
    static void reject_nested_queries(const StateFormula& f, bool allow_root) {
        if (!allow_root && is_quantitative(f))
            Lexer::fail(f.pos, "quantitative query must be the whole property");
        auto descend = [](const StateFormulaPtr& p) {
            if (p) reject_nested_queries(*p, false);
        };
        descend(f.lhs);
        descend(f.rhs);
        descend(f.target);
        if (f.path) {
            descend(f.path->lhs);
            descend(f.path->rhs);
        }
    }

    StateFormulaPtr make(StateFormula::Kind kind, int pos) {
        auto f = std::make_unique<StateFormula>();
        f->kind = kind;
        f->pos = pos;
        return f;
    }

    StateFormulaPtr make_not(StateFormulaPtr inner, int pos) {
        auto f = make(StateFormula::Kind::Not, pos);
        f->lhs = std::move(inner);
        return f;
    }

    StateFormulaPtr make_and(StateFormulaPtr a, StateFormulaPtr b, int pos) {
        auto f = make(StateFormula::Kind::And, pos);
        f->lhs = std::move(a);
        f->rhs = std::move(b);
        return f;
    }

    // implication (right-assoc, lowest) > disjunction > conjunction > unary
    StateFormulaPtr parse_state_formula() { return parse_implies(); }

    StateFormulaPtr parse_implies() {
        StateFormulaPtr lhs = parse_or();
        if (cur_.kind == Tok::Implies) {
            int pos = cur_.pos;
            advance();
            StateFormulaPtr rhs = parse_implies();
            // a => b  ==  !(a & !b)
            return make_not(make_and(std::move(lhs), make_not(std::move(rhs), pos), pos), pos);
        }
        return lhs;
    }

    StateFormulaPtr parse_or() {
        StateFormulaPtr lhs = parse_and();
        while (cur_.kind == Tok::Pipe) {
            int pos = cur_.pos;
            advance();
            StateFormulaPtr rhs = parse_and();
            // a | b  ==  !(!a & !b)
            lhs = make_not(make_and(make_not(std::move(lhs), pos),
                                    make_not(std::move(rhs), pos), pos),
                           pos);
        }
        return lhs;
    }

    StateFormulaPtr parse_and() {
        StateFormulaPtr lhs = parse_unary();
        while (cur_.kind == Tok::Amp) {
            int pos = cur_.pos;
            advance();
            lhs = make_and(std::move(lhs), parse_unary(), pos);
        }
        return lhs;
    }

    StateFormulaPtr parse_unary() {
        if (cur_.kind == Tok::Bang) {
            int pos = cur_.pos;
            advance();
            return make_not(parse_unary(), pos);
        }
        return parse_atom();
    }

    StateFormulaPtr parse_atom() {
        int pos = cur_.pos;
        switch (cur_.kind) {
        case Tok::LParen: {
            advance();
            StateFormulaPtr inner = parse_state_formula();
            expect(Tok::RParen, "')'");
            return inner;
        }
        case Tok::Str: {
            auto f = make(StateFormula::Kind::Atom, pos);
            f->name = cur_.text;
            advance();
            return f;
        }
        case Tok::Ident:
            if (cur_.text == "true") {
                advance();
                return make(StateFormula::Kind::True, pos);
            }
            if (cur_.text == "false") {
                advance();
                return make_not(make(StateFormula::Kind::True, pos), pos);
            }
            if (cur_.text == "P") return parse_prob(pos);
            if (cur_.text == "R") return parse_reward(pos);
            Lexer::fail(pos, "unexpected identifier '" + cur_.text +
                                 "' (labels are quoted)");
        default:
            Lexer::fail(pos, "expected a state formula");
        }
    }

    StateFormulaPtr parse_prob(int pos) {
        advance(); // P
        auto f = make(StateFormula::Kind::Prob, pos);
        switch (cur_.kind) {
        case Tok::EqQuery: f->cmp = CompareOp::Query; advance(); break;
        case Tok::Lt: f->cmp = CompareOp::Lt; advance(); f->threshold = parse_threshold(); break;
        case Tok::Le: f->cmp = CompareOp::Le; advance(); f->threshold = parse_threshold(); break;
        case Tok::Gt: f->cmp = CompareOp::Gt; advance(); f->threshold = parse_threshold(); break;
        case Tok::Ge: f->cmp = CompareOp::Ge; advance(); f->threshold = parse_threshold(); break;
        default: Lexer::fail(cur_.pos, "expected =?, <, <=, > or >= after P");
        }
        expect(Tok::LBracket, "'[' opening the path formula");
        f->path = parse_path();
        expect(Tok::RBracket, "']' closing the path formula");
        return f;
    }

    double parse_threshold() {
        if (cur_.kind != Tok::Num)
            Lexer::fail(cur_.pos, "expected a probability bound");
        double v = cur_.num;
        if (!(v >= 0.0 && v <= 1.0))
            Lexer::fail(cur_.pos, "probability bound must be in [0,1]");
        advance();
        return v;
    }

    long parse_step_bound() {
        if (cur_.kind != Tok::Num)
            Lexer::fail(cur_.pos, "expected a step bound");
        double v = cur_.num;
        long n = static_cast<long>(v);
        if (v < 0 || static_cast<double>(n) != v)
            Lexer::fail(cur_.pos, "step bound must be a non-negative integer");
        advance();
        return n;
    }

    std::unique_ptr<PathFormula> parse_path() {
        auto path = std::make_unique<PathFormula>();
        if (cur_.kind == Tok::Ident && cur_.text == "X") {
            advance();
            path->kind = PathFormula::Kind::Next;
            path->lhs = parse_state_formula();
            return path;
        }
        if (cur_.kind == Tok::Ident && cur_.text == "F") {
            int pos = cur_.pos;
            advance();
            path->kind = PathFormula::Kind::Until;
            path->lhs = make(StateFormula::Kind::True, pos); // F phi == true U phi
            if (cur_.kind == Tok::Le) {
                advance();
                path->bound = parse_step_bound();
            }
            path->rhs = parse_state_formula();
            return path;
        }
        path->kind = PathFormula::Kind::Until;
        path->lhs = parse_state_formula();
        if (cur_.kind != Tok::Ident || cur_.text != "U")
            Lexer::fail(cur_.pos, "expected U in the path formula");
        advance();
        if (cur_.kind == Tok::Le) {
            advance();
            path->bound = parse_step_bound();
        }
        path->rhs = parse_state_formula();
        return path;
    }

    StateFormulaPtr parse_reward(int pos) {
        advance(); // R
        expect(Tok::LBrace, "'{' after R");
        if (cur_.kind != Tok::Str)
            Lexer::fail(cur_.pos, "expected a quoted reward structure name");
        auto f = make(StateFormula::Kind::Reward, pos);
        f->name = cur_.text;
        advance();
        expect(Tok::RBrace, "'}' after the reward structure name");
        expect(Tok::EqQuery, "'=?' (reward properties are queries)");
        expect(Tok::LBracket, "'['");
        if (cur_.kind == Tok::Ident && cur_.text == "C") {
            advance();
            if (cur_.kind != Tok::Le)
                Lexer::fail(cur_.pos, "expected <= after C");
            advance();
            f->reward_kind = StateFormula::RewardKind::Cumulative;
            f->horizon = parse_step_bound();
        } else if (cur_.kind == Tok::Ident && cur_.text == "F") {
            advance();
            f->reward_kind = StateFormula::RewardKind::Reachability;
            f->target = parse_state_formula();
        } else {
            Lexer::fail(cur_.pos, "expected C<=N or F inside a reward query");
        }
        expect(Tok::RBracket, "']'");
        return f;
    }

    Lexer lex_;
    Token cur_;
};

} // namespace

Property parse_property(std::string_view text) {
    Parser parser(text);
    Property prop = parser.parse();
    prop.text = std::string(text);
    return prop;
}

std::vector<Property> parse_property_file(std::string_view text, std::string_view origin) {
    std::vector<Property> props;
    size_t pos = 0;
    int lineno = 0;
    while (pos < text.size()) {
        size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        size_t first = line.find_first_not_of(" \t");
        if (first == std::string_view::npos || line[first] == '#') continue;
        try {
            Property p = parse_property(line);
            p.line = lineno;
            props.push_back(std::move(p));
        } catch (const InputError& e) {
            throw InputError(std::string(origin) + ":" + std::to_string(lineno) + ": " +
                             e.what());
        }
    }
    return props;
}

} // namespace tracelens
