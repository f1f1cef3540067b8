#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace nldiss {

/// Real function f on the non-negative integers that shapes the engineered
/// loss operator A = a f(a^dag a).
///
/// Two forms are supported:
///   - polynomial in (x - shift): f(x) = sum_i c_i (x - shift)^i, with the exact
///     polynomial derivative;
///   - tabulated values f(0..m-1), with the central difference
///     (f(n+1) - f(n-1)) / 2 as derivative (one-sided at the ends).
///
/// Named presets map onto polynomials: "x-1", "(x-1)^2", "(x-1)^3" and "x^k".
class NonlinearFunction {
public:
    static NonlinearFunction polynomial(double shift, std::vector<double> coefficients);
    static NonlinearFunction tabulated(std::vector<double> values);
    static NonlinearFunction constant(double value);

    /// Preset by name. `power` is only read for "x^k" and is unrelated to the
    /// projector gadget's k.
    static NonlinearFunction preset(std::string_view name, int power = 1);

    /// Names accepted by preset().
    static const std::vector<std::string>& preset_names();

    double value(int n) const;
    double derivative(int n) const;
    double operator()(int n) const { return value(n); }

    bool is_polynomial() const noexcept { return tabulated_.empty(); }
    double shift() const noexcept { return shift_; }
    const std::vector<double>& coefficients() const noexcept { return coefficients_; }
    const std::vector<double>& table() const noexcept { return tabulated_; }

    /// Human readable form, e.g. "(x-1)^3" or "poly[shift=0;0,0,1]".
    const std::string& describe() const noexcept { return label_; }

private:
    NonlinearFunction() = default;

    double shift_ = 0.0;
    std::vector<double> coefficients_;
    std::vector<double> tabulated_;
    std::string label_;
};

}  // namespace nldiss
