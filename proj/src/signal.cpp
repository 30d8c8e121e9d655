#include "passauth/signal.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "passauth/errors.hpp"

namespace passauth::signal {

namespace {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// Iterative radix-2 Cooley-Tukey, in place, decimation in time.
void fft_radix2(std::vector<std::complex<double>>& a) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double angle = -2.0 * std::numbers::pi / static_cast<double>(len);
        const std::complex<double> wlen(std::cos(angle), std::sin(angle));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const auto u = a[i + k];
                const auto v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

}  // namespace

std::vector<Segment> segment_stream(const Matrix& stream, std::size_t window,
                                    std::size_t shift, const std::string& user_id,
                                    const std::string& modality,
                                    std::size_t base_index) {
    if (window < 1 || shift < 1)
        throw ConfigError("segment_stream: window and shift must be >= 1");
    const std::size_t length = stream.rows();
    for (std::size_t r = 0; r < length; ++r) {
        for (std::size_t c = 0; c < stream.cols(); ++c) {
            if (!std::isfinite(stream(r, c)))
                throw MalformedInputError("segment_stream: non-finite sample at row " +
                                          std::to_string(r) + ", channel " +
                                          std::to_string(c));
        }
    }

    std::vector<Segment> segments;
    if (length < window) return segments;
    const std::size_t count = (length - window) / shift + 1;
    segments.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        const std::size_t start = k * shift;
        Segment seg;
        seg.user_id = user_id;
        seg.modality = modality;
        seg.start_index = base_index + start;
        seg.values = Matrix(window, stream.cols());
        for (std::size_t r = 0; r < window; ++r)
            for (std::size_t c = 0; c < stream.cols(); ++c)
                seg.values(r, c) = stream(start + r, c);
        segments.push_back(std::move(seg));
    }
    return segments;
}

std::vector<double> dft_magnitude(std::span<const double> input) {
    const std::size_t n = input.size();
    if (n == 0) throw MalformedInputError("dft_magnitude: empty signal");
    for (std::size_t i = 0; i < n; ++i)
        if (!std::isfinite(input[i]))
            throw MalformedInputError("dft_magnitude: non-finite value at index " +
                                      std::to_string(i));

    std::vector<double> magnitude(n);
    if (is_power_of_two(n)) {
        std::vector<std::complex<double>> a(n);
        for (std::size_t i = 0; i < n; ++i) a[i] = {input[i], 0.0};
        fft_radix2(a);
        for (std::size_t k = 0; k < n; ++k) magnitude[k] = std::abs(a[k]);
    } else {
        // Direct evaluation; streams here have T <= tens of samples.
        for (std::size_t k = 0; k < n; ++k) {
            double re = 0.0, im = 0.0;
            for (std::size_t t = 0; t < n; ++t) {
                const double angle = -2.0 * std::numbers::pi *
                                     static_cast<double>(k) * static_cast<double>(t) /
                                     static_cast<double>(n);
                re += input[t] * std::cos(angle);
                im += input[t] * std::sin(angle);
            }
            magnitude[k] = std::hypot(re, im);
        }
    }
    return magnitude;
}

FeatureSegment assemble_features(const Segment& segment, bool modality_is_movement) {
    FeatureSegment out;
    out.user_id = segment.user_id;
    out.modality = segment.modality;
    out.start_index = segment.start_index;

    const std::size_t window = segment.values.rows();
    const std::size_t channels = segment.values.cols();
    if (!modality_is_movement) {
        out.features = segment.values;
        return out;
    }

    out.features = Matrix(window, 2 * channels);
    std::vector<double> column(window);
    for (std::size_t c = 0; c < channels; ++c) {
        for (std::size_t r = 0; r < window; ++r) {
            out.features(r, c) = segment.values(r, c);
            column[r] = segment.values(r, c);
        }
        const auto spectrum = dft_magnitude(column);
        for (std::size_t r = 0; r < window; ++r)
            out.features(r, channels + c) = spectrum[r];
    }
    return out;
}

}  // namespace passauth::signal
