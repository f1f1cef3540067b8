#include "nldiss/nonlinear_function.hpp"

#include <cmath>
#include <sstream>

#include "nldiss/errors.hpp"

namespace nldiss {

namespace {

std::string poly_label(double shift, const std::vector<double>& c)
{
    std::ostringstream os;
    os.precision(17);
    os << "poly[shift=" << shift << ";";
    for (std::size_t i = 0; i < c.size(); ++i) {
        os << (i ? "," : "") << c[i];
    }
    os << "]";
    return os.str();
}

}  // namespace

NonlinearFunction NonlinearFunction::polynomial(double shift, std::vector<double> coefficients)
{
    if (coefficients.empty()) {
        throw ConfigError("polynomial nonlinear function needs at least one coefficient");
    }
    if (!std::isfinite(shift)) {
        throw ConfigError("polynomial shift must be finite");
    }
    for (double c : coefficients) {
        if (!std::isfinite(c)) {
            throw ConfigError("polynomial coefficients must be finite");
        }
    }
    NonlinearFunction f;
    f.shift_ = shift;
    f.coefficients_ = std::move(coefficients);
    f.label_ = poly_label(f.shift_, f.coefficients_);
    return f;
}

NonlinearFunction NonlinearFunction::tabulated(std::vector<double> values)
{
    if (values.size() < 2) {
        throw ConfigError("tabulated nonlinear function needs at least two values");
    }
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw ConfigError("tabulated nonlinear function values must be finite");
        }
    }
    NonlinearFunction f;
    f.tabulated_ = std::move(values);
    f.label_ = "table[" + std::to_string(f.tabulated_.size()) + "]";
    return f;
}

NonlinearFunction NonlinearFunction::constant(double value)
{
    auto f = polynomial(0.0, {value});
    std::ostringstream os;
    os.precision(17);
    os << value;
    f.label_ = os.str();
    return f;
}

const std::vector<std::string>& NonlinearFunction::preset_names()
{
    static const std::vector<std::string> names{"x-1", "(x-1)^2", "(x-1)^3", "x^k"};
    return names;
}

NonlinearFunction NonlinearFunction::preset(std::string_view name, int power)
{
    NonlinearFunction f;
    if (name == "x-1") {
        f = polynomial(1.0, {0.0, 1.0});
    } else if (name == "(x-1)^2") {
        f = polynomial(1.0, {0.0, 0.0, 1.0});
    } else if (name == "(x-1)^3") {
        f = polynomial(1.0, {0.0, 0.0, 0.0, 1.0});
    } else if (name == "x^k") {
        if (power < 0) {
            throw ConfigError("preset x^k needs a non-negative power, got " + std::to_string(power));
        }
        std::vector<double> c(static_cast<std::size_t>(power) + 1, 0.0);
        c.back() = 1.0;
        f = polynomial(0.0, std::move(c));
        f.label_ = "x^" + std::to_string(power);
        return f;
    } else {
        throw ConfigError("unknown nonlinear function preset '" + std::string(name) + "'");
    }
    f.label_ = std::string(name);
    return f;
}

double NonlinearFunction::value(int n) const
{
    if (n < 0) {
        throw OutOfRangeError("nonlinear function evaluated at negative n");
    }
    if (!is_polynomial()) {
        if (static_cast<std::size_t>(n) >= tabulated_.size()) {
            throw OutOfRangeError("tabulated nonlinear function has no value at n=" + std::to_string(n));
        }
        return tabulated_[static_cast<std::size_t>(n)];
    }
    // Horner in (x - shift).
    const double u = static_cast<double>(n) - shift_;
    double acc = 0.0;
    for (auto it = coefficients_.rbegin(); it != coefficients_.rend(); ++it) {
        acc = acc * u + *it;
    }
    return acc;
}

double NonlinearFunction::derivative(int n) const
{
    if (n < 0) {
        throw OutOfRangeError("nonlinear function derivative at negative n");
    }
    if (!is_polynomial()) {
        const int last = static_cast<int>(tabulated_.size()) - 1;
        if (n > last) {
            throw OutOfRangeError("tabulated nonlinear function has no derivative at n=" + std::to_string(n));
        }
        if (n == 0) return value(1) - value(0);
        if (n == last) return value(last) - value(last - 1);
        return 0.5 * (value(n + 1) - value(n - 1));
    }
    const double u = static_cast<double>(n) - shift_;
    double acc = 0.0;
    for (std::size_t i = coefficients_.size(); i-- > 1;) {
        acc = acc * u + static_cast<double>(i) * coefficients_[i];
    }
    return acc;
}

}  // namespace nldiss
