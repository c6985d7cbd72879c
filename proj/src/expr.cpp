#include "expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <map>
#include <stdexcept>

namespace tbscat::app {

namespace {

class Parser {
public:
    explicit Parser(const std::string& s) : s_(s) {}

    double parse() {
        const double v = sum();
        skip();
        if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
        return v;
    }

private:
    const std::string& s_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& what) const {
        throw std::invalid_argument("expression \"" + s_ + "\": " + what + " at position " + std::to_string(pos_));
    }

    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    bool eat(char c) {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    double sum() {
        double v = product();
        for (;;) {
            if (eat('+')) v += product();
            else if (eat('-')) v -= product();
            else return v;
        }
    }

    double product() {
        double v = unary();
        for (;;) {
            if (eat('*')) v *= unary();
            else if (eat('/')) v /= unary();
            else return v;
        }
    }

    double unary() {
        if (eat('-')) return -unary();
        if (eat('+')) return unary();
        return power();
    }

    // right associative, binds tighter than unary minus on its left: -2^2 = -4
    double power() {
        const double base = atom();
        if (eat('^')) return std::pow(base, unary());
        return base;
    }

    double atom() {
        skip();
        if (pos_ >= s_.size()) fail("unexpected end");
        if (eat('(')) {
            const double v = sum();
            if (!eat(')')) fail("expected ')'");
            return v;
        }
        const char c = s_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            const char* begin = s_.c_str() + pos_;
            char* end = nullptr;
            const double v = std::strtod(begin, &end);
            if (end == begin) fail("bad number");
            pos_ += static_cast<std::size_t>(end - begin);
            return v;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            const std::size_t start = pos_;
            while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
            const std::string name = s_.substr(start, pos_ - start);
            if (name == "pi") return 3.14159265358979323846;
            if (name == "e") return 2.71828182845904523536;
            static const std::map<std::string, double (*)(double)> functions{
                {"sqrt", [](double x) { return std::sqrt(x); }}, {"exp", [](double x) { return std::exp(x); }},
                {"log", [](double x) { return std::log(x); }},   {"sin", [](double x) { return std::sin(x); }},
                {"cos", [](double x) { return std::cos(x); }},   {"tan", [](double x) { return std::tan(x); }},
                {"abs", [](double x) { return std::fabs(x); }},
            };
            const auto it = functions.find(name);
            if (it == functions.end()) {
                pos_ = start;
                fail("unknown name '" + name + "'");
            }
            if (!eat('(')) fail("expected '(' after " + name);
            const double arg = sum();
            if (!eat(')')) fail("expected ')'");
            return it->second(arg);
        }
        fail("unexpected '" + std::string(1, c) + "'");
    }
};

}  // namespace

double evaluate_expression(const std::string& text) {
    const double v = Parser(text).parse();
    if (!std::isfinite(v)) throw std::invalid_argument("expression \"" + text + "\" is not finite");
    return v;
}

}  // namespace tbscat::app
