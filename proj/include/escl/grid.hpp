#pragma once

#include "escl/common.hpp"

namespace escl {

/// Uniform time grid on [t0, t_end] with n_steps steps.
struct TimeGrid {
    double t0 = 0.0;
    double t_end = 1.0;
    int n_steps = 1;

    TimeGrid() = default;
    TimeGrid(double t0_, double t_end_, int n_steps_) : t0(t0_), t_end(t_end_), n_steps(n_steps_) {
        if (n_steps <= 0) throw Error("TimeGrid: n_steps must be positive");
        if (!(t_end > t0)) throw Error("TimeGrid: t_end must exceed t0");
    }

    double step() const { return (t_end - t0) / n_steps; }
    double node(int i) const { return t0 + step() * i; }
    int n_nodes() const { return n_steps + 1; }
};

}  // namespace escl
