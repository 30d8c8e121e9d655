#ifndef PASSAUTH_SIGNAL_HPP
#define PASSAUTH_SIGNAL_HPP

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "passauth/linalg.hpp"

namespace passauth::signal {

// One fixed-size window of a modality stream: T rows (seconds) x D channels.
struct Segment {
    std::string user_id;
    std::string modality;
    std::size_t start_index = 0;
    Matrix values;
};

// Segment plus its assembled features: T x 2D for movement modalities (time
// columns followed by per-channel DFT magnitude columns), T x D otherwise.
struct FeatureSegment {
    std::string user_id;
    std::string modality;
    std::size_t start_index = 0;
    Matrix features;
};

// Slides a window of `window` rows over the stream with step `shift`.
// Yields exactly floor((L - window) / shift) + 1 segments when L >= window,
// none otherwise. Rejects non-finite samples.
std::vector<Segment> segment_stream(const Matrix& stream, std::size_t window,
                                    std::size_t shift, const std::string& user_id,
                                    const std::string& modality,
                                    std::size_t base_index = 0);

// |DFT| of a real signal, full two-sided length-T spectrum.
// Radix-2 FFT for power-of-two lengths, direct evaluation otherwise.
std::vector<double> dft_magnitude(std::span<const double> signal);

// Movement modalities get per-channel DFT magnitude columns appended after
// the time-domain columns; everything else passes through unchanged.
FeatureSegment assemble_features(const Segment& segment, bool modality_is_movement);

}  // namespace passauth::signal

#endif
