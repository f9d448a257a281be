#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hmi/params.hpp"

namespace hmi {

// The sophisticated trader's response Phi: nondecreasing, locally Lipschitz,
// identically 0 on (-inf, 0]. Power kind Phi(x) = c x^beta (beta >= 1),
// linear kind Phi(x) = slope * x, or a monotone piecewise-linear table with
// clamped extrapolation.
class Reaction {
public:
    enum class Kind { Power, Linear, Table };

    static Reaction power(double c, double beta) {
        if (!(c > 0.0)) throw std::domain_error("reaction power: c must be > 0");
        if (!(beta >= 1.0)) throw std::domain_error("reaction power: beta must be >= 1");
        Reaction r;
        r.kind_ = Kind::Power;
        r.c_ = c;
        r.beta_ = beta;
        return r;
    }

    static Reaction linear(double slope) {
        if (!(slope >= 0.0)) throw std::domain_error("reaction linear: slope must be >= 0");
        Reaction r;
        r.kind_ = Kind::Linear;
        r.c_ = slope;
        r.beta_ = 1.0;
        return r;
    }

    // knots (x_i, y_i): x strictly increasing starting at 0, y nondecreasing
    // starting at 0; constant beyond the last knot
    static Reaction table(std::vector<double> xs, std::vector<double> ys) {
        if (xs.size() != ys.size() || xs.size() < 2)
            throw std::domain_error("reaction table: need >= 2 knots");
        if (xs.front() != 0.0 || ys.front() != 0.0)
            throw std::domain_error("reaction table: first knot must be (0,0)");
        for (std::size_t i = 1; i < xs.size(); ++i) {
            if (!(xs[i] > xs[i - 1]))
                throw std::domain_error("reaction table: x must be strictly increasing");
            if (!(ys[i] >= ys[i - 1]))
                throw std::domain_error("reaction table: y must be nondecreasing");
        }
        Reaction r;
        r.kind_ = Kind::Table;
        r.xs_ = std::move(xs);
        r.ys_ = std::move(ys);
        return r;
    }

    // "power:c=1,beta=2" | "linear:slope=1" | "table:<path>"
    static Reaction from_string(const std::string& spec);

    Kind kind() const { return kind_; }
    double power_c() const { return c_; }
    double power_beta() const { return beta_; }

    double operator()(double x) const {
        if (x <= 0.0) return 0.0;
        switch (kind_) {
            case Kind::Power:
                return beta_ == 2.0 ? c_ * x * x : c_ * std::pow(x, beta_);
            case Kind::Linear:
                return c_ * x;
            case Kind::Table: {
                if (x >= xs_.back()) return ys_.back();
                const auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
                const std::size_t i = static_cast<std::size_t>(it - xs_.begin()) - 1;
                const double w = (x - xs_[i]) / (xs_[i + 1] - xs_[i]);
                return ys_[i] + w * (ys_[i + 1] - ys_[i]);
            }
        }
        return 0.0;
    }

    // Phi^T(x) = beta^T Phi((T beta^T)^{-1} x)
    double micro(const MicroParams& m, double x) const {
        if (!(m.beta_T > 0.0))
            throw std::domain_error("reaction micro: flow scale beta^T must be > 0");
        return m.beta_T * (*this)(x / (m.T * m.beta_T));
    }

    // unique x >= 0 with Phi(x) = y; requires a strictly increasing kind
    double inverse(double y) const {
        if (!(y >= 0.0)) throw std::domain_error("reaction inverse: y must be >= 0");
        if (y == 0.0) return 0.0;
        switch (kind_) {
            case Kind::Power:
                return std::pow(y / c_, 1.0 / beta_);
            case Kind::Linear:
                if (c_ == 0.0)
                    throw std::domain_error("reaction inverse: zero slope is not invertible");
                return y / c_;
            case Kind::Table: {
                if (y > ys_.back())
                    throw std::domain_error("reaction inverse: y above table range");
                const auto it = std::lower_bound(ys_.begin(), ys_.end(), y);
                const std::size_t i = static_cast<std::size_t>(it - ys_.begin());
                if (ys_[i] == y) {
                    // flat segments make the inverse ill-defined at this level
                    if (i + 1 < ys_.size() && ys_[i + 1] == y)
                        throw std::domain_error("reaction inverse: flat segment at y");
                    return xs_[i];
                }
                const double w = (y - ys_[i - 1]) / (ys_[i] - ys_[i - 1]);
                return xs_[i - 1] + w * (xs_[i] - xs_[i - 1]);
            }
        }
        return 0.0;
    }

    // right derivative; 0 on the negative half-line
    double derivative(double x) const {
        if (x < 0.0) return 0.0;
        switch (kind_) {
            case Kind::Power:
                if (x == 0.0) return beta_ == 1.0 ? c_ : 0.0;
                return c_ * beta_ * std::pow(x, beta_ - 1.0);
            case Kind::Linear:
                return c_;
            case Kind::Table: {
                if (x >= xs_.back()) return 0.0;
                const auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
                const std::size_t i = static_cast<std::size_t>(it - xs_.begin()) - 1;
                return (ys_[i + 1] - ys_[i]) / (xs_[i + 1] - xs_[i]);
            }
        }
        return 0.0;
    }

    // Lipschitz constant on [0, X]; for the power kind c beta X^{beta-1}
    double lipschitz_on(double X) const {
        if (!(X >= 0.0)) throw std::domain_error("lipschitz_on: X must be >= 0");
        switch (kind_) {
            case Kind::Power:
                return c_ * beta_ * std::pow(X, beta_ - 1.0);
            case Kind::Linear:
                return c_;
            case Kind::Table: {
                double m = 0.0;
                for (std::size_t i = 1; i < xs_.size() && xs_[i - 1] < X; ++i)
                    m = std::max(m, (ys_[i] - ys_[i - 1]) / (xs_[i] - xs_[i - 1]));
                return m;
            }
        }
        return 0.0;
    }

    // Taylor coefficients of Phi at 0 up to order j_max: Phi(x) = sum a_k x^k.
    // Defined for the linear kind and for power kinds with integer exponent;
    // the Adomian construction needs these.
    std::vector<double> taylor_at_zero(int j_max) const {
        if (j_max < 1) throw std::domain_error("taylor_at_zero: order must be >= 1");
        std::vector<double> a(static_cast<std::size_t>(j_max) + 1, 0.0);
        switch (kind_) {
            case Kind::Linear:
                a[1] = c_;
                return a;
            case Kind::Power: {
                const double b_round = std::round(beta_);
                if (std::abs(beta_ - b_round) > 1e-12)
                    throw std::domain_error(
                        "taylor_at_zero: power reaction with non-integer exponent is not "
                        "smooth at 0");
                const int b = static_cast<int>(b_round);
                if (b <= j_max) a[static_cast<std::size_t>(b)] = c_;
                return a;
            }
            case Kind::Table:
                throw std::domain_error("taylor_at_zero: table reaction is not smooth at 0");
        }
        return a;
    }

    std::string describe() const {
        std::ostringstream out;
        switch (kind_) {
            case Kind::Power:
                out << "power:c=" << c_ << ",beta=" << beta_;
                break;
            case Kind::Linear:
                out << "linear:slope=" << c_;
                break;
            case Kind::Table:
                out << "table:" << xs_.size() << " knots";
                break;
        }
        return out.str();
    }

private:
    Reaction() = default;

    Kind kind_ = Kind::Power;
    double c_ = 1.0;
    double beta_ = 2.0;
    std::vector<double> xs_, ys_;
};

inline Reaction Reaction::from_string(const std::string& spec) {
    const auto colon = spec.find(':');
    const std::string head = spec.substr(0, colon);
    const std::string rest = colon == std::string::npos ? "" : spec.substr(colon + 1);
    auto parse_kv = [&rest](const char* key, double fallback, bool* found = nullptr) {
        std::istringstream in(rest);
        std::string item;
        while (std::getline(in, item, ',')) {
            const auto eq = item.find('=');
            if (eq == std::string::npos) continue;
            if (item.substr(0, eq) == key) {
                if (found) *found = true;
                return std::stod(item.substr(eq + 1));
            }
        }
        return fallback;
    };
    if (head == "power") return power(parse_kv("c", 1.0), parse_kv("beta", 2.0));
    if (head == "linear") return linear(parse_kv("slope", 1.0));
    if (head == "table") {
        std::ifstream in(rest);
        if (!in) throw std::runtime_error("reaction table: cannot open " + rest);
        std::vector<double> xs, ys;
        double x, y;
        while (in >> x >> y) {
            xs.push_back(x);
            ys.push_back(y);
        }
        return table(std::move(xs), std::move(ys));
    }
    throw std::domain_error("reaction: unknown kind '" + head + "'");
}

}  // namespace hmi
