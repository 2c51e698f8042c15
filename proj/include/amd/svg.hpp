#pragma once

#include <array>
#include <string>
#include <vector>

#include "amd/image.hpp"
#include "amd/metrics.hpp"
#include "amd/saliency.hpp"

namespace amd {

// ROC curve with the chance diagonal and an AUC label.
std::string svg_roc(const RocCurve& curve, const std::string& title);

struct ScatterPoint {
    double x = 0.0;
    double y = 0.0;
    int cls = 0;
};

// 2-D scatter colored by class, with a legend.
std::string svg_scatter(const std::vector<ScatterPoint>& points,
                        const std::vector<std::string>& class_names,
                        const std::string& title);

// Source image and saliency map side by side, rendered as pixel rects
// (downsampled to at most 64 cells per side to bound file size).
std::string svg_image_pair(const Image& image, const SaliencyMap& map,
                           const std::string& title);

}  // namespace amd
