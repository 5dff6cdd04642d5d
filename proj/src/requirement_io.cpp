// S-expression form of requirement formulas:
//   (u x 2 0) (v x1 3 4)         pre/post value of neuron 0 of layer 2
//   1.5                          constant
//   (* c (u x 2 0))              scaled variable
//   (+ a b) (- a b)
//   (dist linf x1 x2 4)          layer-4 distance; (* c (dist ...)) scales it
//   (>= a 0)                     atom, any of <= < = > >=
//   (and e ...) (not e) (count >= 2 e ...)
//   (sign= x1 x2 2 0) (sign!= x1 x2 2 0)
//   (inbox x1 (lo ...) (hi ...))
#include "concolic/dr_logic.hpp"
#include "concolic/error.hpp"
#include "concolic/format.hpp"

#include <json.hpp>

#include <cctype>
#include <sstream>

namespace concolic {

namespace {

std::string neuron_args(NeuronId n)
{
    return std::to_string(n.layer) + " " + std::to_string(n.index);
}

std::string var_sexpr(const VarRef& v)
{
    return std::string("(") + (v.kind == ValueKind::Pre ? "u " : "v ") + std::string(var_name(v.input)) + " " + neuron_args(v.neuron) + ")";
}

std::string vector_sexpr(const char* head, const Vector& values)
{
    std::string out = std::string("(") + head;
    for (double x : values) {
        out += " " + format_double(x);
    }
    return out + ")";
}

// --- reader ----------------------------------------------------------------

struct SExp {
    std::string atom;
    std::vector<SExp> list;
    bool is_list = false;
};

class Reader {
public:
    explicit Reader(const std::string& text)
        : text_(text)
    {
    }

    SExp read_all()
    {
        SExp e = read();
        skip_space();
        if (pos_ != text_.size()) {
            fail("trailing characters");
        }
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& what) const
    {
        throw ParseError("s-expression, offset " + std::to_string(pos_) + ": " + what);
    }

    void skip_space()
    {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
        }
    }

    SExp read()
    {
        skip_space();
        if (pos_ >= text_.size()) {
            fail("unexpected end of input");
        }
        SExp e;
        if (text_[pos_] == '(') {
            ++pos_;
            e.is_list = true;
            for (;;) {
                skip_space();
                if (pos_ >= text_.size()) {
                    fail("unclosed list");
                }
                if (text_[pos_] == ')') {
                    ++pos_;
                    return e;
                }
                e.list.push_back(read());
            }
        }
        if (text_[pos_] == ')') {
            fail("unexpected ')'");
        }
        const std::size_t start = pos_;
        while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) && text_[pos_] != '(' &&
               text_[pos_] != ')') {
            ++pos_;
        }
        e.atom = text_.substr(start, pos_ - start);
        return e;
    }

    const std::string& text_;
    std::size_t pos_ = 0;
};

double number(const SExp& e)
{
    if (e.is_list) {
        throw ParseError("expected a number, found a list");
    }
    std::size_t used = 0;
    double x = 0.0;
    try {
        x = std::stod(e.atom, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != e.atom.size() || e.atom.empty()) {
        throw ParseError("expected a number, found \"" + e.atom + "\"");
    }
    return x;
}

int integer(const SExp& e)
{
    const double x = number(e);
    if (x != static_cast<double>(static_cast<int>(x))) {
        throw ParseError("expected an integer, found \"" + e.atom + "\"");
    }
    return static_cast<int>(x);
}

InputVar input_var(const SExp& e)
{
    if (!e.is_list) {
        if (e.atom == "x") {
            return InputVar::X;
        }
        if (e.atom == "x1") {
            return InputVar::X1;
        }
        if (e.atom == "x2") {
            return InputVar::X2;
        }
    }
    throw ParseError("expected an input variable (x, x1, x2), found \"" + e.atom + "\"");
}

std::optional<Rel> relation(const std::string& s)
{
    for (Rel r : {Rel::Le, Rel::Lt, Rel::Eq, Rel::Gt, Rel::Ge}) {
        if (s == rel_name(r)) {
            return r;
        }
    }
    return std::nullopt;
}

const std::string& head(const SExp& e)
{
    if (!e.is_list || e.list.empty() || e.list[0].is_list) {
        throw ParseError("expected a non-empty list with an operator head");
    }
    return e.list[0].atom;
}

void arity(const SExp& e, std::size_t n)
{
    if (e.list.size() != n + 1) {
        throw ParseError("\"" + e.list[0].atom + "\" takes " + std::to_string(n) + " arguments, got " + std::to_string(e.list.size() - 1));
    }
}

VarRef var_ref(const SExp& e)
{
    const std::string& h = head(e);
    if (h != "u" && h != "v") {
        throw ParseError("expected (u ...) or (v ...), found \"" + h + "\"");
    }
    arity(e, 3);
    return VarRef{h == "u" ? ValueKind::Pre : ValueKind::Post, input_var(e.list[1]), {integer(e.list[2]), integer(e.list[3])}};
}

Norm norm_atom(const SExp& e)
{
    if (e.is_list) {
        throw ParseError("expected a norm name");
    }
    try {
        return parse_norm(e.atom);
    } catch (const ConfigError& err) {
        throw ParseError(err.what());
    }
}

ArithExpr to_arith(const SExp& e);

LayerDistance dist_node(const SExp& e, double coef)
{
    arity(e, 4);
    return LayerDistance{coef, norm_atom(e.list[1]), integer(e.list[4]), input_var(e.list[2]), input_var(e.list[3])};
}

ArithExpr to_arith(const SExp& e)
{
    if (!e.is_list) {
        return constant(number(e));
    }
    const std::string& h = head(e);
    if (h == "u" || h == "v") {
        return std::make_shared<const ArithNode>(ArithNode{var_ref(e)});
    }
    if (h == "*") {
        arity(e, 2);
        const double c = number(e.list[1]);
        if (head(e.list[2]) == "dist") {
            return std::make_shared<const ArithNode>(ArithNode{dist_node(e.list[2], c)});
        }
        return scaled(c, var_ref(e.list[2]));
    }
    if (h == "+") {
        arity(e, 2);
        return to_arith(e.list[1]) + to_arith(e.list[2]);
    }
    if (h == "-") {
        arity(e, 2);
        return to_arith(e.list[1]) - to_arith(e.list[2]);
    }
    if (h == "dist") {
        return std::make_shared<const ArithNode>(ArithNode{dist_node(e, 1.0)});
    }
    throw ParseError("unknown arithmetic operator \"" + h + "\"");
}

BoolExpr to_bool(const SExp& e)
{
    const std::string& h = head(e);
    if (auto rel = relation(h)) {
        arity(e, 2);
        if (e.list[2].is_list || number(e.list[2]) != 0.0) {
            throw ParseError("atoms compare against 0");
        }
        return atom(to_arith(e.list[1]), *rel);
    }
    if (h == "and") {
        std::vector<BoolExpr> items;
        for (std::size_t i = 1; i < e.list.size(); ++i) {
            items.push_back(to_bool(e.list[i]));
        }
        return conj(std::move(items));
    }
    if (h == "not") {
        arity(e, 1);
        return negate(to_bool(e.list[1]));
    }
    if (h == "count") {
        if (e.list.size() < 3 || e.list[1].is_list) {
            throw ParseError("count needs a relation and a bound");
        }
        const auto rel = relation(e.list[1].atom);
        if (!rel) {
            throw ParseError("unknown relation \"" + e.list[1].atom + "\"");
        }
        const int q = integer(e.list[2]);
        if (q < 0) {
            throw ParseError("count bound must be non-negative");
        }
        std::vector<BoolExpr> items;
        for (std::size_t i = 3; i < e.list.size(); ++i) {
            items.push_back(to_bool(e.list[i]));
        }
        return count_cmp(std::move(items), *rel, static_cast<std::size_t>(q));
    }
    if (h == "sign=" || h == "sign!=") {
        arity(e, 4);
        const NeuronId n{integer(e.list[3]), integer(e.list[4])};
        return h == "sign=" ? sign_eq(input_var(e.list[1]), input_var(e.list[2]), n) : sign_neq(input_var(e.list[1]), input_var(e.list[2]), n);
    }
    if (h == "inbox") {
        arity(e, 3);
        const auto values = [](const SExp& list, const char* expected) {
            if (head(list) != expected) {
                throw ParseError(std::string("inbox expects (") + expected + " ...)");
            }
            Vector out;
            for (std::size_t i = 1; i < list.list.size(); ++i) {
                out.push_back(number(list.list[i]));
            }
            return out;
        };
        Vector lo = values(e.list[2], "lo");
        Vector hi = values(e.list[3], "hi");
        if (lo.size() != hi.size()) {
            throw ParseError("inbox bounds differ in length");
        }
        return in_box(input_var(e.list[1]), std::move(lo), std::move(hi));
    }
    throw ParseError("unknown boolean operator \"" + h + "\"");
}

std::optional<RequirementTag> parse_tag(const std::string& s)
{
    const auto open = s.find('(');
    if (open == std::string::npos || s.back() != ')') {
        return s == "custom" ? std::optional<RequirementTag>(RequirementTag{}) : std::nullopt;
    }
    const std::string name = s.substr(0, open);
    std::string args = s.substr(open + 1, s.size() - open - 2);
    for (char& ch : args) {
        if (ch == ',' || ch == ';') {
            ch = ' ';
        }
    }
    std::istringstream in(args);
    RequirementTag tag;
    for (Family f : {Family::NC, Family::SSC, Family::NBCHigh, Family::NBCLow, Family::LIP}) {
        if (name == family_name(f)) {
            tag.family = f;
            if (f == Family::LIP) {
                in >> tag.box;
            } else if (f == Family::SSC) {
                in >> tag.neuron.layer >> tag.neuron.index >> tag.decision.layer >> tag.decision.index;
            } else {
                in >> tag.neuron.layer >> tag.neuron.index;
            }
            if (!in) {
                return std::nullopt;
            }
            return tag;
        }
    }
    return std::nullopt;
}

}  // namespace

std::string to_sexpr(const ArithExpr& a)
{
    return std::visit(
        [](const auto& n) -> std::string {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, VarRef>) {
                return var_sexpr(n);
            } else if constexpr (std::is_same_v<T, ConstTerm>) {
                return format_double(n.value);
            } else if constexpr (std::is_same_v<T, ScaledVar>) {
                return "(* " + format_double(n.coef) + " " + var_sexpr(n.var) + ")";
            } else if constexpr (std::is_same_v<T, Sum>) {
                return "(+ " + to_sexpr(n.lhs) + " " + to_sexpr(n.rhs) + ")";
            } else if constexpr (std::is_same_v<T, Difference>) {
                return "(- " + to_sexpr(n.lhs) + " " + to_sexpr(n.rhs) + ")";
            } else {
                const std::string d = "(dist " + std::string(norm_name(n.norm)) + " " + std::string(var_name(n.a)) + " " +
                                      std::string(var_name(n.b)) + " " + std::to_string(n.layer) + ")";
                return n.coef == 1.0 ? d : "(* " + format_double(n.coef) + " " + d + ")";
            }
        },
        a->node);
}

std::string to_sexpr(const BoolExpr& e)
{
    return std::visit(
        [](const auto& n) -> std::string {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Atom>) {
                return "(" + std::string(rel_name(n.rel)) + " " + to_sexpr(n.expr) + " 0)";
            } else if constexpr (std::is_same_v<T, Conj>) {
                std::string out = "(and";
                for (const BoolExpr& item : n.items) {
                    out += " " + to_sexpr(item);
                }
                return out + ")";
            } else if constexpr (std::is_same_v<T, Negation>) {
                return "(not " + to_sexpr(n.inner) + ")";
            } else if constexpr (std::is_same_v<T, CountCmp>) {
                std::string out = "(count " + std::string(rel_name(n.rel)) + " " + std::to_string(n.q);
                for (const BoolExpr& item : n.items) {
                    out += " " + to_sexpr(item);
                }
                return out + ")";
            } else if constexpr (std::is_same_v<T, SignEq>) {
                return "(sign= " + std::string(var_name(n.a)) + " " + std::string(var_name(n.b)) + " " + neuron_args(n.neuron) + ")";
            } else if constexpr (std::is_same_v<T, SignNeq>) {
                return "(sign!= " + std::string(var_name(n.a)) + " " + std::string(var_name(n.b)) + " " + neuron_args(n.neuron) + ")";
            } else {
                return "(inbox " + std::string(var_name(n.x)) + " " + vector_sexpr("lo", n.lower) + " " + vector_sexpr("hi", n.upper) + ")";
            }
        },
        e->node);
}

ArithExpr parse_arith_sexpr(const std::string& text)
{
    return to_arith(Reader(text).read_all());
}

BoolExpr parse_bool_sexpr(const std::string& text)
{
    return to_bool(Reader(text).read_all());
}

std::string requirements_to_json(std::span<const Requirement> reqs)
{
    nlohmann::json arr = nlohmann::json::array();
    for (const Requirement& r : reqs) {
        arr.push_back({{"tag", r.tag.str()},
                       {"family", family_name(r.tag.family)},
                       {"quantifier", r.quantifier == Quantifier::Exists ? "exists" : "forall"},
                       {"arity", r.arity},
                       {"status", status_name(r.status)},
                       {"body", to_sexpr(r.body)}});
    }
    return arr.dump(1) + "\n";
}

std::vector<Requirement> requirements_from_json(const std::string& text)
{
    nlohmann::json arr;
    try {
        arr = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("requirement file is not valid JSON: ") + e.what());
    }
    if (!arr.is_array()) {
        throw ParseError("requirement file must hold a JSON array");
    }
    std::vector<Requirement> out;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const auto& obj = arr[i];
        const std::string where = "requirement " + std::to_string(i);
        try {
            Requirement r;
            const std::string q = obj.at("quantifier").get<std::string>();
            if (q != "exists" && q != "forall") {
                throw ParseError("quantifier must be exists or forall");
            }
            r.quantifier = q == "exists" ? Quantifier::Exists : Quantifier::Forall;
            r.arity = obj.at("arity").get<int>();
            if (r.arity != 1 && r.arity != 2) {
                throw ParseError("arity must be 1 or 2");
            }
            const std::string status = obj.at("status").get<std::string>();
            bool known = false;
            for (Status s : {Status::Open, Status::Satisfied, Status::Failed}) {
                if (status == status_name(s)) {
                    r.status = s;
                    known = true;
                }
            }
            if (!known) {
                throw ParseError("unknown status \"" + status + "\"");
            }
            const auto tag = parse_tag(obj.at("tag").get<std::string>());
            if (!tag) {
                throw ParseError("malformed tag \"" + obj.at("tag").get<std::string>() + "\"");
            }
            r.tag = *tag;
            r.body = parse_bool_sexpr(obj.at("body").get<std::string>());
            if (r.tag.family == Family::NBCHigh || r.tag.family == Family::NBCLow) {
                const auto* a = std::get_if<Atom>(&r.body->node);
                const auto* d = a ? std::get_if<Difference>(&a->expr->node) : nullptr;
                const auto* c = d ? std::get_if<ConstTerm>(&d->rhs->node) : nullptr;
                if (c == nullptr) {
                    throw ParseError("NBC body is not of the form (u - bound) ~ 0");
                }
                r.bound = c->value;
            }
            out.push_back(std::move(r));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(where + ": " + e.what());
        } catch (const ParseError& e) {
            throw ParseError(where + ": " + e.what());
        }
    }
    return out;
}

}  // namespace concolic
