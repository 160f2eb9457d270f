#include "twobsde/expression.hpp"

#include <cctype>
#include <cmath>
#include <functional>
#include <vector>

#include "twobsde/common.hpp"

namespace twobsde {

namespace {

enum class Op {
    Num, Var,
    Add, Sub, Mul, Div, Pow, Neg,
    Sin, Cos, Tan, Exp, Log, Sqrt, Abs, Sign, Tanh,
    Min, Max
};

}  // namespace

struct Expression::Node {
    Op op;
    double value = 0.0;  // Num
    int var = 0;         // Var index into (t,x,y,z,a)
    std::shared_ptr<const Node> lhs, rhs;
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;

NodePtr make(Op op, NodePtr l = nullptr, NodePtr r = nullptr) {
    auto n = std::make_shared<Expression::Node>();
    n->op = op;
    n->lhs = std::move(l);
    n->rhs = std::move(r);
    return n;
}

struct Parser {
    const std::string& s;
    size_t pos = 0;
    unsigned deps = 0;

    explicit Parser(const std::string& text) : s(text) {}

    void skip() {
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }

    bool eat(char c) {
        skip();
        if (pos < s.size() && s[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw ConfigError("expression parse error at position " + std::to_string(pos) + ": " +
                          what + " in '" + s + "'");
    }

    NodePtr parse_expr() {
        NodePtr n = parse_term();
        for (;;) {
            if (eat('+')) {
                n = make(Op::Add, n, parse_term());
            } else if (eat('-')) {
                n = make(Op::Sub, n, parse_term());
            } else {
                return n;
            }
        }
    }

    NodePtr parse_term() {
        NodePtr n = parse_unary();
        for (;;) {
            if (eat('*')) {
                n = make(Op::Mul, n, parse_unary());
            } else if (eat('/')) {
                n = make(Op::Div, n, parse_unary());
            } else {
                return n;
            }
        }
    }

    NodePtr parse_unary() {
        if (eat('-')) return make(Op::Neg, parse_unary());
        if (eat('+')) return parse_unary();
        return parse_power();
    }

    NodePtr parse_power() {
        NodePtr base = parse_atom();
        if (eat('^')) return make(Op::Pow, base, parse_unary());  // right-assoc
        return base;
    }

    NodePtr parse_atom() {
        skip();
        if (pos >= s.size()) fail("unexpected end of input");
        const char c = s[pos];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c))) return parse_word();
        if (eat('(')) {
            NodePtr n = parse_expr();
            if (!eat(')')) fail("missing ')'");
            return n;
        }
        fail(std::string("unexpected character '") + c + "'");
    }

    NodePtr parse_number() {
        size_t end = pos;
        auto is_num_char = [&](size_t i) {
            const char c = s[i];
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return true;
            if ((c == 'e' || c == 'E') && i > pos) return true;
            if ((c == '+' || c == '-') && i > pos && (s[i - 1] == 'e' || s[i - 1] == 'E'))
                return true;
            return false;
        };
        while (end < s.size() && is_num_char(end)) ++end;
        auto n = std::make_shared<Expression::Node>();
        n->op = Op::Num;
        try {
            n->value = std::stod(s.substr(pos, end - pos));
        } catch (const std::exception&) {
            fail("bad numeric literal");
        }
        pos = end;
        return n;
    }

    NodePtr parse_word() {
        size_t end = pos;
        while (end < s.size() &&
               (std::isalnum(static_cast<unsigned char>(s[end])) || s[end] == '_'))
            ++end;
        const std::string w = s.substr(pos, end - pos);
        pos = end;

        static const char* vars = "txyza";
        if (w.size() == 1) {
            for (int i = 0; i < 5; ++i) {
                if (w[0] == vars[i]) {
                    deps |= 1u << i;
                    auto n = std::make_shared<Expression::Node>();
                    n->op = Op::Var;
                    n->var = i;
                    return n;
                }
            }
        }
        if (w == "pi") {
            auto n = std::make_shared<Expression::Node>();
            n->op = Op::Num;
            n->value = M_PI;
            return n;
        }
        if (w == "e") {
            auto n = std::make_shared<Expression::Node>();
            n->op = Op::Num;
            n->value = M_E;
            return n;
        }

        struct Fn {
            const char* name;
            Op op;
            int arity;
        };
        static const Fn fns[] = {
            {"sin", Op::Sin, 1},   {"cos", Op::Cos, 1},   {"tan", Op::Tan, 1},
            {"exp", Op::Exp, 1},   {"log", Op::Log, 1},   {"sqrt", Op::Sqrt, 1},
            {"abs", Op::Abs, 1},   {"sign", Op::Sign, 1}, {"tanh", Op::Tanh, 1},
            {"min", Op::Min, 2},   {"max", Op::Max, 2},   {"pow", Op::Pow, 2},
        };
        for (const Fn& f : fns) {
            if (w == f.name) {
                if (!eat('(')) fail("'" + w + "' expects '('");
                NodePtr a = parse_expr();
                NodePtr b;
                if (f.arity == 2) {
                    if (!eat(',')) fail("'" + w + "' expects two arguments");
                    b = parse_expr();
                }
                if (!eat(')')) fail("missing ')' after '" + w + "'");
                return make(f.op, a, b);
            }
        }
        fail("unknown identifier '" + w + "'");
    }
};

double eval_node(const Expression::Node& n, const double* vars) {
    switch (n.op) {
        case Op::Num: return n.value;
        case Op::Var: return vars[n.var];
        case Op::Add: return eval_node(*n.lhs, vars) + eval_node(*n.rhs, vars);
        case Op::Sub: return eval_node(*n.lhs, vars) - eval_node(*n.rhs, vars);
        case Op::Mul: return eval_node(*n.lhs, vars) * eval_node(*n.rhs, vars);
        case Op::Div: return eval_node(*n.lhs, vars) / eval_node(*n.rhs, vars);
        case Op::Pow: return std::pow(eval_node(*n.lhs, vars), eval_node(*n.rhs, vars));
        case Op::Neg: return -eval_node(*n.lhs, vars);
        case Op::Sin: return std::sin(eval_node(*n.lhs, vars));
        case Op::Cos: return std::cos(eval_node(*n.lhs, vars));
        case Op::Tan: return std::tan(eval_node(*n.lhs, vars));
        case Op::Exp: return std::exp(eval_node(*n.lhs, vars));
        case Op::Log: return std::log(eval_node(*n.lhs, vars));
        case Op::Sqrt: return std::sqrt(eval_node(*n.lhs, vars));
        case Op::Abs: return std::fabs(eval_node(*n.lhs, vars));
        case Op::Sign: {
            const double v = eval_node(*n.lhs, vars);
            return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0);
        }
        case Op::Tanh: return std::tanh(eval_node(*n.lhs, vars));
        case Op::Min: return std::min(eval_node(*n.lhs, vars), eval_node(*n.rhs, vars));
        case Op::Max: return std::max(eval_node(*n.lhs, vars), eval_node(*n.rhs, vars));
    }
    throw NumericError("corrupt expression node");
}

}  // namespace

Expression Expression::parse(const std::string& text) {
    Parser p(text);
    NodePtr root = p.parse_expr();
    p.skip();
    if (p.pos != text.size()) p.fail("trailing input");
    Expression e;
    e.root_ = std::move(root);
    e.deps_ = p.deps;
    e.text_ = text;
    return e;
}

double Expression::eval(double t, double x, double y, double z, double a) const {
    const double vars[5] = {t, x, y, z, a};
    return eval_node(*root_, vars);
}

}  // namespace twobsde
