// Angle encoding of pixel values into qubit amplitudes, with a tangent-based
// midpoint rescaling that maps a chosen pixel value v to frequency 1/2, and
// the inverse map used to decode sampled frequencies back to pixel values.
#pragma once

#include <vector>

#include "qcs/qcore.hpp"

namespace qcs {

// A signal is one sample: pixel values in [0,1] after preprocessing.
using Signal = std::vector<double>;

// Per-pixel rescaling midpoints, each in the open interval (0,1).
using PixelMap = std::vector<double>;

PixelMap uniform_midpoints(int n_pixels, double v = 0.5);

// Monotone rescaling f_v: [0,1] -> [0,1] with f_v(v) = 1/2, f_v(0) = 0,
// f_v(1) = 1. Interior inputs are clamped away from the poles at 1e-12.
double rescale_frequency(double x, double v);

// Closed-form inverse of rescale_frequency in its first argument.
double rescale_frequency_inverse(double t, double v);

// cos(pi f_v(y)/2)|0> + sin(pi f_v(y)/2)|1>, realized as Ry on |0>.
StateVector encode_pixel(double y, double v);

// Product encoding: pixel i on qubit i via one Y-rotation each.
StateVector encode_signal(const Signal& signal, const PixelMap& map);

// Rotation angle used by the encoding of value y with midpoint v.
double encoding_angle(double y, double v);

// Recovers the pixel value whose encoding gives excited-state probability p1.
double decode_frequency(double p1, double v);

} // namespace qcs
