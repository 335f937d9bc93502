#include "platoon/velocity_profile.hpp"

#include <algorithm>
#include <cmath>

#include "platoon/errors.hpp"

namespace platoon {

VelocityProfile::VelocityProfile(std::vector<Knot> knots) : knots_(std::move(knots)) {
    for (std::size_t i = 0; i + 1 < knots_.size(); ++i) {
        if (knots_[i + 1].s <= knots_[i].s)
            throw RangeError("profile knots must be strictly increasing in s");
    }
}

VelocityProfile VelocityProfile::constant(double v, double s_begin, double s_end) {
    return VelocityProfile({{s_begin, v}, {s_end, v}});
}

double VelocityProfile::s_begin() const {
    if (knots_.empty()) throw RangeError("empty profile");
    return knots_.front().s;
}

double VelocityProfile::s_end() const {
    if (knots_.empty()) throw RangeError("empty profile");
    return knots_.back().s;
}

double VelocityProfile::v_at(double s) const {
    if (knots_.empty()) throw RangeError("empty profile");
    if (s <= knots_.front().s) return knots_.front().v;
    if (s >= knots_.back().s) return knots_.back().v;
    auto it = std::upper_bound(knots_.begin(), knots_.end(), s,
                               [](double val, const Knot& k) { return val < k.s; });
    const Knot& b = *it;
    const Knot& a = *(it - 1);
    double f = (s - a.s) / (b.s - a.s);
    return a.v + f * (b.v - a.v);
}

double VelocityProfile::slope_at(double s) const {
    if (knots_.size() < 2) return 0.0;
    if (s < knots_.front().s || s >= knots_.back().s) return 0.0;
    auto it = std::upper_bound(knots_.begin(), knots_.end(), s,
                               [](double val, const Knot& k) { return val < k.s; });
    const Knot& b = *it;
    const Knot& a = *(it - 1);
    return (b.v - a.v) / (b.s - a.s);
}

void VelocityProfile::push_knot(double s, double v) {
    if (!knots_.empty()) {
        if (s < knots_.back().s) throw RangeError("profile knots must not move backwards");
        if (s == knots_.back().s) {
            knots_.back().v = v;
            return;
        }
    }
    knots_.push_back({s, v});
}

void VelocityProfile::extend(const VelocityProfile& tail) {
    for (const Knot& k : tail.knots_) push_knot(k.s, k.v);
}

}  // namespace platoon
