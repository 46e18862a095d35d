#include "qcs/encoding.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace qcs {

namespace {

constexpr double kPi = std::numbers::pi;
// Distance kept from the poles of tan(pi(x - 1/2)) at x = 0 and x = 1.
constexpr double kEdgeClamp = 1e-12;

void check_unit_interval(const char* op, const char* name, double x) {
    if (!(x >= 0.0 && x <= 1.0))
        throw std::invalid_argument(std::string(op) + ": " + name + " = " +
                                    std::to_string(x) + " outside [0,1]");
}

void check_midpoint(const char* op, double v) {
    if (!(v > 0.0 && v < 1.0))
        throw std::invalid_argument(std::string(op) + ": midpoint " + std::to_string(v) +
                                    " outside the open interval (0,1)");
}

} // namespace

PixelMap uniform_midpoints(int n_pixels, double v) {
    if (n_pixels < 1)
        throw std::invalid_argument("uniform_midpoints: need at least one pixel");
    check_midpoint("uniform_midpoints", v);
    return PixelMap(static_cast<std::size_t>(n_pixels), v);
}

double rescale_frequency(double x, double v) {
    check_unit_interval("rescale_frequency", "value", x);
    check_midpoint("rescale_frequency", v);
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double xc = std::clamp(x, kEdgeClamp, 1.0 - kEdgeClamp);
    const double shifted = std::tan(kPi * (xc - 0.5)) - std::tan(kPi * (v - 0.5));
    return 0.5 * (1.0 + (2.0 / kPi) * std::atan(shifted));
}

double rescale_frequency_inverse(double t, double v) {
    check_unit_interval("rescale_frequency_inverse", "frequency", t);
    check_midpoint("rescale_frequency_inverse", v);
    if (t == 0.0) return 0.0;
    if (t == 1.0) return 1.0;
    const double tc = std::clamp(t, kEdgeClamp, 1.0 - kEdgeClamp);
    const double unshifted = std::tan(kPi * (tc - 0.5)) + std::tan(kPi * (v - 0.5));
    return 0.5 + std::atan(unshifted) / kPi;
}

double encoding_angle(double y, double v) { return kPi * rescale_frequency(y, v); }

StateVector encode_pixel(double y, double v) {
    StateVector state(1);
    apply_gate(state, gate_ry(encoding_angle(y, v), 0));
    return state;
}

StateVector encode_signal(const Signal& signal, const PixelMap& map) {
    if (signal.empty())
        throw std::invalid_argument("encode_signal: empty signal");
    if (signal.size() != map.size())
        throw std::invalid_argument("encode_signal: signal has " +
                                    std::to_string(signal.size()) + " pixels but map has " +
                                    std::to_string(map.size()) + " midpoints");
    const int n = static_cast<int>(signal.size());
    StateVector state(n);
    for (int q = 0; q < n; ++q)
        apply_gate(state, gate_ry(encoding_angle(signal[static_cast<std::size_t>(q)],
                                                 map[static_cast<std::size_t>(q)]),
                                  q));
    return state;
}

double decode_frequency(double p1, double v) {
    if (p1 < -1e-12 || p1 > 1.0 + 1e-12)
        throw std::invalid_argument("decode_frequency: probability " + std::to_string(p1) +
                                    " outside [0,1]");
    check_midpoint("decode_frequency", v);
    const double clamped = std::clamp(p1, 0.0, 1.0);
    const double freq = (2.0 / kPi) * std::asin(std::sqrt(clamped));
    return rescale_frequency_inverse(freq, v);
}

} // namespace qcs
