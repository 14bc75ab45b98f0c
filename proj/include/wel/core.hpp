#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace wel {

/// Raised when an operation's preconditions are not met.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised by iterative solvers that fail to reach tolerance. Carries the best
/// iterate so callers can still report residuals.
class SolverFailure : public std::runtime_error {
public:
    SolverFailure(const std::string& what, int iterations, double residual,
                  std::vector<double> best_iterate = {})
        : std::runtime_error(what + " (iterations " + std::to_string(iterations) +
                             ", relative residual " + std::to_string(residual) + ")"),
          iterations_(iterations), residual_(residual), best_(std::move(best_iterate)) {}

    int iterations() const { return iterations_; }
    double residual() const { return residual_; }
    const std::vector<double>& best_iterate() const { return best_; }

private:
    int iterations_;
    double residual_;
    std::vector<double> best_;
};

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
    constexpr Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }
    constexpr Vec2& operator*=(double s) { x *= s; y *= s; return *this; }

    friend constexpr Vec2 operator+(Vec2 a, const Vec2& b) { return a += b; }
    friend constexpr Vec2 operator-(Vec2 a, const Vec2& b) { return a -= b; }
    friend constexpr Vec2 operator*(double s, Vec2 a) { return a *= s; }
    friend constexpr Vec2 operator*(Vec2 a, double s) { return a *= s; }
    friend constexpr bool operator==(const Vec2&, const Vec2&) = default;
};

using Point = Vec2;

constexpr double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
inline double norm(const Vec2& a) { return std::hypot(a.x, a.y); }
/// Counter-clockwise rotation by 90 degrees: c -> (-c.y, c.x).
constexpr Vec2 perp(const Vec2& c) { return {-c.y, c.x}; }
constexpr double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }

inline constexpr double pi = 3.14159265358979323846;

}  // namespace wel
