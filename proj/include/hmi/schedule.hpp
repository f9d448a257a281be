#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace hmi {

// Execution schedule f: nonnegative, supported on [0,1), int_0^1 f = 1.
// Either the flat schedule f = 1 (optionally extended past 1 for asymptotic
// studies) or a piecewise-constant table on uniform cells of [0,1).
class Schedule {
public:
    static Schedule flat() { return Schedule(true, false, {}); }

    // Constant forcing f = 1 on all of [0,inf); used by the tail/scaling
    // checks whose theory assumes the metaorder never ends.
    static Schedule flat_extended() { return Schedule(true, true, {}); }

    // values on uniform cells of [0,1); renormalized to unit integral.
    // |renorm - 1| > 1e-12 is reported through *renormalized if given.
    static Schedule piecewise(std::vector<double> values, bool* renormalized = nullptr) {
        if (values.empty()) throw std::domain_error("schedule: empty table");
        double integral = 0.0;
        for (double v : values) {
            if (!(v >= 0.0)) throw std::domain_error("schedule: negative value");
            integral += v;
        }
        integral /= static_cast<double>(values.size());
        if (!(integral > 0.0)) throw std::domain_error("schedule: zero integral");
        if (renormalized) *renormalized = std::abs(integral - 1.0) > 1e-12;
        for (double& v : values) v /= integral;
        return Schedule(false, false, std::move(values));
    }

    // one value per line (or "t value" rows; the last column is used)
    static Schedule from_file(const std::string& path, bool* renormalized = nullptr) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("schedule: cannot open " + path);
        std::vector<double> values;
        std::string line;
        while (std::getline(in, line)) {
            std::istringstream row(line);
            double v, last = std::numeric_limits<double>::quiet_NaN();
            bool any = false;
            while (row >> v) {
                last = v;
                any = true;
            }
            if (any) values.push_back(last);
        }
        return piecewise(std::move(values), renormalized);
    }

    double operator()(double t) const {
        if (t < 0.0) return 0.0;
        if (flat_) return (extended_ || t < 1.0) ? 1.0 : 0.0;
        if (t >= 1.0) return 0.0;
        const auto i = static_cast<std::size_t>(t * static_cast<double>(values_.size()));
        return values_[i < values_.size() ? i : values_.size() - 1];
    }

    double max_value() const {
        if (flat_) return 1.0;
        double m = 0.0;
        for (double v : values_) m = std::max(m, v);
        return m;
    }

    bool is_flat() const { return flat_ && !extended_; }
    bool is_extended() const { return extended_; }

    // piecewise-constant cells of [0,1): uniform, count 1 for the flat schedule
    std::size_t cells() const { return flat_ ? 1 : values_.size(); }
    double cell_value(std::size_t i) const {
        return flat_ ? 1.0 : values_[std::min(i, values_.size() - 1)];
    }

private:
    Schedule(bool flat, bool extended, std::vector<double> values)
        : flat_(flat), extended_(extended), values_(std::move(values)) {}

    bool flat_;
    bool extended_;
    std::vector<double> values_;
};

}  // namespace hmi
