#pragma once

#include <memory>
#include <string>

namespace twobsde {

/// Compiled arithmetic expression over the variables (t, x, y, z, a).
///
/// Grammar: numbers, the five variables, + - * / ^, parentheses, unary minus,
/// constants pi and e, and the functions sin cos tan exp log sqrt abs sign
/// tanh min max pow. This is the only user-definable function form accepted
/// by configs; there is no escape to arbitrary code.
class Expression {
public:
    static Expression parse(const std::string& text);

    double eval(double t, double x, double y, double z, double a) const;

    // Bitmask of variables actually referenced (bit order t,x,y,z,a).
    unsigned dependencies() const { return deps_; }
    const std::string& text() const { return text_; }

    struct Node;

private:
    std::shared_ptr<const Node> root_;
    unsigned deps_ = 0;
    std::string text_;
};

}  // namespace twobsde
