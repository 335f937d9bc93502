#pragma once

#include <vector>

namespace platoon {

// Reference velocity as a function of route position. Piecewise linear in s;
// queries outside the knot range clamp to the nearest end value.
class VelocityProfile {
  public:
    struct Knot {
        double s = 0.0;
        double v = 0.0;
    };

    VelocityProfile() = default;
    explicit VelocityProfile(std::vector<Knot> knots);

    static VelocityProfile constant(double v, double s_begin, double s_end);

    bool empty() const { return knots_.empty(); }
    const std::vector<Knot>& knots() const { return knots_; }
    double s_begin() const;
    double s_end() const;

    double v_at(double s) const;
    // dv/ds, piecewise constant (right-continuous); zero outside the range.
    double slope_at(double s) const;

    // Appends knots at or beyond the current end (same-s knot replaces).
    void extend(const VelocityProfile& tail);
    void push_knot(double s, double v);

  private:
    std::vector<Knot> knots_;
};

}  // namespace platoon
