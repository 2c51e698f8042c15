#pragma once

#include "amd/image.hpp"
#include "amd/net.hpp"

namespace amd {

// Per-pixel magnitude of the class-logit gradient w.r.t. the input image,
// reduced over channels by max |gradient| and normalized to a 0..1 peak
// (an all-zero map stays zero).
struct SaliencyMap {
    int width = 0;
    int height = 0;
    std::vector<float> values;  // width * height

    float at(int x, int y) const { return values[static_cast<size_t>(y) * width + x]; }
};

SaliencyMap saliency(const Network& head, const Image& image, int class_index);

}  // namespace amd
