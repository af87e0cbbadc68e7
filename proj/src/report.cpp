#include "tracelens/report.hpp"

#include "tracelens/errors.hpp"
#include "tracelens/text_format.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace tracelens {

ThetaCurve theta_curve(const AdmixtureModel& model, int k) {
    if (k < 1 || k > model.pattern_count())
        throw InputError("pattern index " + std::to_string(k) + " out of range 1.." +
                         std::to_string(model.pattern_count()));
    const long m_users = model.theta.rows();
    if (m_users < 1)
        throw InputError("model has no users");
    std::vector<double> col(static_cast<size_t>(m_users));
    for (long m = 0; m < m_users; ++m) col[static_cast<size_t>(m)] = model.theta(m, k - 1);
    std::sort(col.begin(), col.end());

    ThetaCurve curve;
    curve.pattern = k;
    curve.points.reserve(col.size());
    if (m_users == 1) {
        curve.points.push_back({0.0, col[0]});
    } else {
        for (long m = 0; m < m_users; ++m)
            curve.points.push_back({static_cast<double>(m) / static_cast<double>(m_users - 1),
                                    col[static_cast<size_t>(m)]});
    }
    return curve;
}

std::string theta_curve_csv(const ThetaCurve& curve) {
    std::ostringstream out;
    out << "x,theta\n";
    for (const auto& p : curve.points)
        out << format_double(p.x) << "," << format_double(p.y) << "\n";
    return out.str();
}

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

std::string format_sig3(double v) {
    std::array<char, 32> buf;
    auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v,
                                 std::chars_format::general, 3);
    return std::string(buf.data(), p);
}

bool valid_identifier(const std::string& s) {
    if (s.empty()) return false;
    if (!std::isalpha(static_cast<unsigned char>(s[0])) && s[0] != '_') return false;
    for (char c : s)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
    return true;
}

} // namespace

std::string results_table_csv(const ResultTable& table) {
    std::ostringstream out;
    out << "property,cut,label";
    for (int k = 1; k <= table.patterns; ++k) out << ",AP" << k;
    out << ",query\n";
    for (const ResultRow& row : table.rows) {
        if (static_cast<int>(row.values.size()) != table.patterns)
            throw InputError("result row '" + row.property_id + "' has " +
                             std::to_string(row.values.size()) + " values for " +
                             std::to_string(table.patterns) + " patterns");
        out << csv_field(row.property_id) << "," << csv_field(row.cut) << ","
            << csv_field(row.label);
        for (double v : row.values) out << "," << format_double(v);
        out << "," << csv_field(row.query) << "\n";
    }
    return out.str();
}

std::string pattern_graph_dot(const Dtmc& dtmc, const std::string& name,
                              const std::vector<double>& thresholds) {
    if (thresholds.empty())
        throw InputError("need at least one probability threshold");
    for (size_t i = 0; i < thresholds.size(); ++i) {
        if (!(thresholds[i] > 0.0 && thresholds[i] <= 1.0))
            throw InputError("thresholds must lie in (0,1]");
        if (i > 0 && thresholds[i] <= thresholds[i - 1])
            throw InputError("thresholds must be strictly ascending");
    }
    if (!valid_identifier(name))
        throw InputError("graph name must be an identifier: '" + name + "'");

    const int n = dtmc.state_count();
    std::vector<std::string> node_label(n);
    for (int s = 0; s < n; ++s) node_label[s] = "s" + std::to_string(s);
    for (const auto& [lname, states] : dtmc.labels)
        if (states.size() == 1) node_label[states[0]] = lname;

    std::ostringstream out;
    out << "digraph " << name << " {\n";
    out << "  rankdir=LR;\n";
    out << "  node [shape=box, fontsize=10];\n";
    for (int s = 0; s < n; ++s)
        out << "  s" << s << " [label=\"" << node_label[s] << "\"];\n";
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            double p = dtmc.matrix(i, j);
            if (p < thresholds.front()) continue;
            size_t bucket = 0;
            while (bucket + 1 < thresholds.size() && p >= thresholds[bucket + 1]) ++bucket;
            out << "  s" << i << " -> s" << j << " [label=\"" << format_sig3(p)
                << "\", penwidth=" << bucket + 1 << "];\n";
        }
    }
    out << "}\n";
    return out.str();
}

// ---------------------------------------------------------------- PRISM --

std::string export_prism(const Dtmc& dtmc, const std::string& name) {
    if (!valid_identifier(name))
        throw InputError("module name must be an identifier: '" + name + "'");
    const int n = dtmc.state_count();
    for (const auto& [lname, states] : dtmc.labels)
        if (states.size() != 1)
            throw InputError("label \"" + lname + "\" covers " +
                             std::to_string(states.size()) +
                             " states; the export format needs singleton labels");

    std::ostringstream out;
    out << "dtmc\n\n";
    out << "module " << name << "\n";
    out << "  x : [0.." << n - 1 << "] init " << dtmc.initial << ";\n\n";
    for (int i = 0; i < n; ++i) {
        out << "  [] (x=" << i << ") -> ";
        bool first = true;
        double sum = 0.0;
        for (int j = 0; j < n; ++j) {
            double p = dtmc.matrix(i, j);
            sum += p;
            if (p == 0.0) continue;
            if (!first) out << " + ";
            out << format_double17(p) << ":(x'=" << j << ")";
            first = false;
        }
        out << "; // row " << i << " sum = " << format_double(sum) << "\n";
    }
    out << "endmodule\n\n";

    // label lines in state order, as in the model template
    std::vector<std::pair<int, std::string>> label_lines;
    for (const auto& [lname, states] : dtmc.labels)
        label_lines.emplace_back(states[0], lname);
    std::sort(label_lines.begin(), label_lines.end());
    for (const auto& [state, lname] : label_lines)
        out << "label \"" << lname << "\" = (x=" << state << ");\n";
    if (!label_lines.empty()) out << "\n";

    // reward blocks: per-state label rewards first, r_Steps last
    std::vector<std::string> order;
    for (const auto& [state, lname] : label_lines)
        if (dtmc.rewards.count("r_" + lname)) order.push_back("r_" + lname);
    std::vector<std::string> rest;
    for (const auto& [rname, r] : dtmc.rewards)
        if (rname != "r_Steps" &&
            std::find(order.begin(), order.end(), rname) == order.end())
            rest.push_back(rname);
    std::sort(rest.begin(), rest.end());
    order.insert(order.end(), rest.begin(), rest.end());
    if (dtmc.rewards.count("r_Steps")) order.push_back("r_Steps");

    for (const std::string& rname : order) {
        const RewardStructure& r = dtmc.rewards.at(rname);
        out << "rewards \"" << rname << "\"";
        if (r.kind == RewardStructure::Kind::State) {
            bool any = false;
            for (int s = 0; s < n; ++s) {
                if (r.state_values(s) == 0.0) continue;
                out << " (x=" << s << ") : " << format_double17(r.state_values(s)) << ";";
                any = true;
            }
            if (!any) out << " (x=0) : 0;";
        } else {
            bool uniform = true;
            double c = r.transition_values(0, 0);
            for (int i = 0; i < n && uniform; ++i)
                for (int j = 0; j < n; ++j)
                    if (r.transition_values(i, j) != c) {
                        uniform = false;
                        break;
                    }
            if (uniform) {
                out << " [] true : " << format_double17(c) << ";";
            } else {
                for (int i = 0; i < n; ++i) {
                    double ci = r.transition_values(i, 0);
                    for (int j = 1; j < n; ++j)
                        if (r.transition_values(i, j) != ci)
                            throw InputError(
                                "transition reward structure \"" + rname +
                                "\" is not constant per row; it has no guarded-command form");
                    if (ci != 0.0) out << " [] (x=" << i << ") : " << format_double17(ci) << ";";
                }
            }
        }
        out << " endrewards\n";
    }
    return out.str();
}

namespace {

// Token scanner for the exported subset. Comments run to end of line.
struct PrismScanner {
    enum class Kind {
        End, Ident, Str, Num,
        LBracket, RBracket, LParen, RParen, Colon, Semi, Plus, Eq, Arrow, DotDot, Prime
    };

    struct Token {
        Kind kind = Kind::End;
        std::string text;
        double num = 0.0;
        int line = 1;
    };

    explicit PrismScanner(std::string_view src, std::string_view origin)
        : src_(src), origin_(origin) {
        advance();
    }

    const Token& peek() const { return cur_; }

    Token take() {
        Token t = cur_;
        advance();
        return t;
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw InputError(std::string(origin_) + ":" + std::to_string(cur_.line) + ": " + msg);
    }

    Token expect(Kind kind, const char* what) {
        if (cur_.kind != kind) fail(std::string("expected ") + what);
        return take();
    }

    void expect_ident(const char* word) {
        if (cur_.kind != Kind::Ident || cur_.text != word)
            fail(std::string("expected '") + word + "'");
        advance();
    }

    bool at_ident(const char* word) const {
        return cur_.kind == Kind::Ident && cur_.text == word;
    }

    long expect_int(const char* what) {
        Token t = expect(Kind::Num, what);
        long v = static_cast<long>(t.num);
        if (static_cast<double>(v) != t.num) fail(std::string(what) + " must be an integer");
        return v;
    }

private:
    void advance() {
        while (at_ < src_.size()) {
            char c = src_[at_];
            if (c == '\n') {
                ++line_;
                ++at_;
            } else if (c == ' ' || c == '\t' || c == '\r') {
                ++at_;
            } else if (c == '/' && at_ + 1 < src_.size() && src_[at_ + 1] == '/') {
                while (at_ < src_.size() && src_[at_] != '\n') ++at_;
            } else {
                break;
            }
        }
        cur_ = Token{};
        cur_.line = line_;
        if (at_ >= src_.size()) return;
        char c = src_[at_];
        switch (c) {
        case '[': ++at_; cur_.kind = Kind::LBracket; return;
        case ']': ++at_; cur_.kind = Kind::RBracket; return;
        case '(': ++at_; cur_.kind = Kind::LParen; return;
        case ')': ++at_; cur_.kind = Kind::RParen; return;
        case ':': ++at_; cur_.kind = Kind::Colon; return;
        case ';': ++at_; cur_.kind = Kind::Semi; return;
        case '+': ++at_; cur_.kind = Kind::Plus; return;
        case '=': ++at_; cur_.kind = Kind::Eq; return;
        case '\'': ++at_; cur_.kind = Kind::Prime; return;
        case '-':
            if (at_ + 1 < src_.size() && src_[at_ + 1] == '>') {
                at_ += 2;
                cur_.kind = Kind::Arrow;
                return;
            }
            fail("stray '-'");
        case '.':
            if (at_ + 1 < src_.size() && src_[at_ + 1] == '.') {
                at_ += 2;
                cur_.kind = Kind::DotDot;
                return;
            }
            break; // fall through to number ('.5' style)
        case '"': {
            size_t end = src_.find('"', at_ + 1);
            if (end == std::string_view::npos) fail("unterminated string");
            cur_.kind = Kind::Str;
            cur_.text = std::string(src_.substr(at_ + 1, end - at_ - 1));
            at_ = end + 1;
            return;
        }
        default: break;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            size_t start = at_;
            while (at_ < src_.size()) {
                char d = src_[at_];
                if (std::isdigit(static_cast<unsigned char>(d)) || d == 'e' || d == 'E' ||
                    ((d == '+' || d == '-') && at_ > start &&
                     (src_[at_ - 1] == 'e' || src_[at_ - 1] == 'E'))) {
                    ++at_;
                } else if (d == '.') {
                    if (at_ + 1 < src_.size() && src_[at_ + 1] == '.') break; // range ..
                    ++at_;
                } else {
                    break;
                }
            }
            std::string_view text = src_.substr(start, at_ - start);
            auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), cur_.num);
            if (ec != std::errc{} || p != text.data() + text.size())
                fail("bad number '" + std::string(text) + "'");
            cur_.kind = Kind::Num;
            cur_.text = std::string(text);
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            size_t start = at_;
            while (at_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[at_])) ||
                                         src_[at_] == '_'))
                ++at_;
            cur_.kind = Kind::Ident;
            cur_.text = std::string(src_.substr(start, at_ - start));
            return;
        }
        fail(std::string("unexpected character '") + c + "'");
    }

    std::string_view src_;
    std::string_view origin_;
    size_t at_ = 0;
    int line_ = 1;
    Token cur_;
};

} // namespace

Dtmc import_prism(std::string_view text, std::string_view origin) {
    using K = PrismScanner::Kind;
    PrismScanner in(text, origin);

    in.expect_ident("dtmc");
    in.expect_ident("module");
    in.expect(K::Ident, "module name");
    in.expect_ident("x");
    in.expect(K::Colon, "':'");
    in.expect(K::LBracket, "'['");
    long lo = in.expect_int("range start");
    in.expect(K::DotDot, "'..'");
    long hi = in.expect_int("range end");
    in.expect(K::RBracket, "']'");
    in.expect_ident("init");
    long initial = in.expect_int("initial state");
    in.expect(K::Semi, "';'");
    if (lo != 0 || hi < 0)
        in.fail("variable range must start at 0");
    const long n = hi + 1;

    Eigen::MatrixXd matrix = Eigen::MatrixXd::Zero(n, n);
    std::vector<bool> has_row(static_cast<size_t>(n), false);
    while (in.peek().kind == K::LBracket) {
        in.take();
        in.expect(K::RBracket, "']'");
        in.expect(K::LParen, "'('");
        in.expect_ident("x");
        in.expect(K::Eq, "'='");
        long i = in.expect_int("state");
        in.expect(K::RParen, "')'");
        in.expect(K::Arrow, "'->'");
        if (i < 0 || i >= n) in.fail("command state out of range");
        if (has_row[static_cast<size_t>(i)]) in.fail("duplicate command for state " + std::to_string(i));
        has_row[static_cast<size_t>(i)] = true;
        while (true) {
            auto num = in.expect(K::Num, "probability");
            in.expect(K::Colon, "':'");
            in.expect(K::LParen, "'('");
            in.expect_ident("x");
            in.expect(K::Prime, "'''");
            in.expect(K::Eq, "'='");
            long j = in.expect_int("target state");
            in.expect(K::RParen, "')'");
            if (j < 0 || j >= n) in.fail("update target out of range");
            matrix(i, j) += num.num;
            if (in.peek().kind == K::Plus) {
                in.take();
                continue;
            }
            break;
        }
        in.expect(K::Semi, "';'");
    }
    in.expect_ident("endmodule");
    for (long i = 0; i < n; ++i)
        if (!has_row[static_cast<size_t>(i)])
            in.fail("missing command for state " + std::to_string(i));

    std::map<std::string, std::vector<int>> labels;
    while (in.at_ident("label")) {
        in.take();
        auto name = in.expect(K::Str, "label name");
        in.expect(K::Eq, "'='");
        in.expect(K::LParen, "'('");
        in.expect_ident("x");
        in.expect(K::Eq, "'='");
        long s = in.expect_int("state");
        in.expect(K::RParen, "')'");
        in.expect(K::Semi, "';'");
        if (s < 0 || s >= n) in.fail("label state out of range");
        if (!labels.emplace(name.text, std::vector<int>{static_cast<int>(s)}).second)
            in.fail("duplicate label \"" + name.text + "\"");
    }

    std::map<std::string, RewardStructure> rewards;
    while (in.at_ident("rewards")) {
        in.take();
        auto name = in.expect(K::Str, "reward structure name");
        bool saw_state = false, saw_transition = false;
        Eigen::VectorXd state_values = Eigen::VectorXd::Zero(n);
        Eigen::MatrixXd transition_values = Eigen::MatrixXd::Zero(n, n);
        while (!in.at_ident("endrewards")) {
            if (in.peek().kind == K::LBracket) {
                in.take();
                in.expect(K::RBracket, "']'");
                saw_transition = true;
                if (in.at_ident("true")) {
                    in.take();
                    in.expect(K::Colon, "':'");
                    auto v = in.expect(K::Num, "reward value");
                    in.expect(K::Semi, "';'");
                    transition_values.setConstant(v.num);
                } else {
                    in.expect(K::LParen, "'('");
                    in.expect_ident("x");
                    in.expect(K::Eq, "'='");
                    long i = in.expect_int("state");
                    in.expect(K::RParen, "')'");
                    in.expect(K::Colon, "':'");
                    auto v = in.expect(K::Num, "reward value");
                    in.expect(K::Semi, "';'");
                    if (i < 0 || i >= n) in.fail("reward state out of range");
                    transition_values.row(i).setConstant(v.num);
                }
            } else if (in.peek().kind == K::LParen) {
                in.take();
                in.expect_ident("x");
                in.expect(K::Eq, "'='");
                long s = in.expect_int("state");
                in.expect(K::RParen, "')'");
                in.expect(K::Colon, "':'");
                auto v = in.expect(K::Num, "reward value");
                in.expect(K::Semi, "';'");
                if (s < 0 || s >= n) in.fail("reward state out of range");
                saw_state = true;
                state_values(s) = v.num;
            } else {
                in.fail("expected a reward item or endrewards");
            }
        }
        in.take(); // endrewards
        if (saw_state && saw_transition)
            in.fail("reward structure \"" + name.text + "\" mixes state and transition items");
        RewardStructure r = saw_transition
                                ? RewardStructure::on_transitions(std::move(transition_values))
                                : RewardStructure::on_states(std::move(state_values));
        if (!rewards.emplace(name.text, std::move(r)).second)
            in.fail("duplicate reward structure \"" + name.text + "\"");
    }
    if (in.peek().kind != K::End)
        in.fail("unexpected trailing content");

    return build_dtmc(std::move(matrix), static_cast<int>(initial), std::move(labels),
                      std::move(rewards));
}

// ----------------------------------------------------------------- model --

std::string serialize_model(const AdmixtureModel& model) {
    const int n = model.state_count();
    const int K = model.pattern_count();
    const long M = model.theta.rows();
    std::ostringstream out;
    out << "tracelens-model v1\n";
    out << "states " << n << "\n";
    out << "patterns " << K << "\n";
    out << "users " << M << "\n";
    for (int i = 0; i < n; ++i) out << "state " << i << " " << model.vocabulary.name(i) << "\n";
    for (int k = 0; k < K; ++k) {
        out << "phi " << k + 1 << "\n";
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                if (j) out << " ";
                out << format_double17(model.phis[k](i, j));
            }
            out << "\n";
        }
    }
    out << "theta\n";
    for (long m = 0; m < M; ++m) {
        for (int k = 0; k < K; ++k) {
            if (k) out << " ";
            out << format_double17(model.theta(m, k));
        }
        out << "\n";
    }
    return out.str();
}

namespace {

std::vector<std::string_view> split_spaces(std::string_view line) {
    std::vector<std::string_view> parts;
    size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && line[i] == ' ') ++i;
        size_t j = i;
        while (j < line.size() && line[j] != ' ') ++j;
        if (j > i) parts.push_back(line.substr(i, j - i));
        i = j;
    }
    return parts;
}

void check_row_sums(const Eigen::MatrixXd& m, const char* what, std::string_view origin) {
    for (long i = 0; i < m.rows(); ++i) {
        double sum = m.row(i).sum();
        if (std::abs(sum - 1.0) > 1e-9)
            throw NumericError(std::string(origin) + ": " + what + " row " +
                               std::to_string(i) + " sums to " + format_double(sum));
    }
}

} // namespace

AdmixtureModel parse_model(std::string_view text, std::string_view origin) {
    size_t pos = 0;
    int lineno = 0;
    auto next_line = [&](std::string_view& line) {
        if (pos >= text.size()) return false;
        size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        line = text.substr(pos, eol - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        pos = eol + 1;
        ++lineno;
        return true;
    };
    auto fail = [&](const std::string& msg) -> InputError {
        return InputError(std::string(origin) + ":" + std::to_string(lineno) + ": " + msg);
    };
    auto header_int = [&](std::string_view line, const char* key) -> long {
        std::string prefix = std::string(key) + " ";
        if (line.substr(0, prefix.size()) != prefix)
            throw fail("expected '" + std::string(key) + " <n>'");
        return parse_int(line.substr(prefix.size()), key);
    };

    std::string_view line;
    if (!next_line(line) || line != "tracelens-model v1")
        throw fail("expected header 'tracelens-model v1'");
    if (!next_line(line)) throw fail("truncated file");
    long n = header_int(line, "states");
    if (!next_line(line)) throw fail("truncated file");
    long K = header_int(line, "patterns");
    if (!next_line(line)) throw fail("truncated file");
    long M = header_int(line, "users");
    if (n < 1 || K < 1 || M < 1) throw fail("states, patterns and users must be positive");

    std::vector<std::string> names(static_cast<size_t>(n));
    for (long i = 0; i < n; ++i) {
        if (!next_line(line)) throw fail("truncated state list");
        auto parts = split_spaces(line);
        if (parts.size() < 3 || parts[0] != "state")
            throw fail("expected 'state <id> <name>'");
        if (parse_int(parts[1], "state id") != i)
            throw fail("state ids must be ascending from 0");
        names[static_cast<size_t>(i)] =
            std::string(line.substr(static_cast<size_t>(parts[2].data() - line.data())));
    }
    int start = -1, stop = -1;
    for (long i = 0; i < n; ++i) {
        if (names[static_cast<size_t>(i)] == "TermsAndConditions") start = static_cast<int>(i);
        if (names[static_cast<size_t>(i)] == "UseStop") stop = static_cast<int>(i);
    }
    if (start < 0 || stop < 0)
        throw fail("vocabulary must contain TermsAndConditions and UseStop");

    AdmixtureModel model{Vocabulary(std::move(names), start, stop), {}, {}};
    auto read_matrix = [&](long rows, long cols, const char* what) {
        Eigen::MatrixXd m(rows, cols);
        for (long i = 0; i < rows; ++i) {
            if (!next_line(line)) throw fail(std::string("truncated ") + what);
            auto parts = split_spaces(line);
            if (static_cast<long>(parts.size()) != cols)
                throw fail(std::string(what) + " row has " + std::to_string(parts.size()) +
                           " values, expected " + std::to_string(cols));
            for (long j = 0; j < cols; ++j) m(i, j) = parse_double(parts[static_cast<size_t>(j)], what);
        }
        return m;
    };

    for (long k = 0; k < K; ++k) {
        if (!next_line(line) || line != "phi " + std::to_string(k + 1))
            throw fail("expected 'phi " + std::to_string(k + 1) + "'");
        model.phis.push_back(read_matrix(n, n, "phi"));
    }
    if (!next_line(line) || line != "theta") throw fail("expected 'theta'");
    model.theta = read_matrix(M, K, "theta");
    while (next_line(line))
        if (!line.empty()) throw fail("unexpected trailing content");

    for (long k = 0; k < K; ++k)
        check_row_sums(model.phis[static_cast<size_t>(k)], "phi", origin);
    check_row_sums(model.theta, "theta", origin);
    return model;
}

void save_model(const std::string& path, const AdmixtureModel& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write model file: " + path);
    out << serialize_model(model);
    if (!out) throw InputError("write failed: " + path);
}

AdmixtureModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open model file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_model(ss.str(), path);
}

} // namespace tracelens
