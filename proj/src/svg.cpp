#include "amd/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace amd {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string hex_color(float r, float g, float b) {
    char buf[8];
    auto q = [](float v) {
        return static_cast<int>(std::clamp(v, 0.0f, 1.0f) * 255.0f + 0.5f);
    };
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", q(r), q(g), q(b));
    return buf;
}

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                          "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string svg_open(int w, int h) {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(w) +
           "\" height=\"" + std::to_string(h) + "\" viewBox=\"0 0 " + std::to_string(w) +
           " " + std::to_string(h) + "\">\n";
}

std::string text(double x, double y, const std::string& s, int size = 12) {
    return "<text x=\"" + fmt(x) + "\" y=\"" + fmt(y) + "\" font-family=\"sans-serif\"" +
           " font-size=\"" + std::to_string(size) + "\">" + s + "</text>\n";
}

}  // namespace

std::string svg_roc(const RocCurve& curve, const std::string& title) {
    const int margin = 40, plot = 320;
    const int w = plot + 2 * margin, h = plot + 2 * margin;
    auto px = [&](double fpr) { return margin + fpr * plot; };
    auto py = [&](double tpr) { return margin + (1.0 - tpr) * plot; };

    std::string s = svg_open(w, h);
    s += "<rect x=\"" + std::to_string(margin) + "\" y=\"" + std::to_string(margin) +
         "\" width=\"" + std::to_string(plot) + "\" height=\"" + std::to_string(plot) +
         "\" fill=\"white\" stroke=\"black\"/>\n";
    s += "<line x1=\"" + fmt(px(0)) + "\" y1=\"" + fmt(py(0)) + "\" x2=\"" + fmt(px(1)) +
         "\" y2=\"" + fmt(py(1)) + "\" stroke=\"#bbbbbb\" stroke-dasharray=\"4 3\"/>\n";

    s += "<polyline fill=\"none\" stroke=\"#d62728\" stroke-width=\"1.5\" points=\"";
    for (const auto& [fpr, tpr] : curve.points) s += fmt(px(fpr)) + "," + fmt(py(tpr)) + " ";
    s += "\"/>\n";

    s += text(margin, margin - 10, title, 14);
    char auc[48];
    std::snprintf(auc, sizeof auc, "AUC = %.3f", curve.auc);
    s += text(margin + plot / 2.0, margin + plot - 12, auc);
    s += text(margin + plot / 2.0 - 10, h - 8, "FPR");
    s += text(8, margin + plot / 2.0, "TPR");
    s += "</svg>\n";
    return s;
}

std::string svg_scatter(const std::vector<ScatterPoint>& points,
                        const std::vector<std::string>& class_names,
                        const std::string& title) {
    const int margin = 40, plot = 420, legend = 130;
    const int w = plot + 2 * margin + legend, h = plot + 2 * margin;

    double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    if (!points.empty()) {
        xmin = xmax = points[0].x;
        ymin = ymax = points[0].y;
        for (const auto& p : points) {
            xmin = std::min(xmin, p.x);
            xmax = std::max(xmax, p.x);
            ymin = std::min(ymin, p.y);
            ymax = std::max(ymax, p.y);
        }
    }
    double xspan = std::max(xmax - xmin, 1e-12), yspan = std::max(ymax - ymin, 1e-12);
    auto px = [&](double x) { return margin + (x - xmin) / xspan * plot; };
    auto py = [&](double y) { return margin + (1.0 - (y - ymin) / yspan) * plot; };

    std::string s = svg_open(w, h);
    s += "<rect x=\"" + std::to_string(margin) + "\" y=\"" + std::to_string(margin) +
         "\" width=\"" + std::to_string(plot) + "\" height=\"" + std::to_string(plot) +
         "\" fill=\"white\" stroke=\"black\"/>\n";
    for (const auto& p : points) {
        const char* color = kPalette[p.cls % 8];
        s += "<circle cx=\"" + fmt(px(p.x)) + "\" cy=\"" + fmt(py(p.y)) +
             "\" r=\"2.5\" fill=\"" + color + "\" fill-opacity=\"0.75\"/>\n";
    }
    s += text(margin, margin - 10, title, 14);
    for (size_t c = 0; c < class_names.size(); ++c) {
        double lx = margin + plot + 20, ly = margin + 16 + 20.0 * c;
        s += "<circle cx=\"" + fmt(lx) + "\" cy=\"" + fmt(ly - 4) + "\" r=\"4\" fill=\"" +
             kPalette[c % 8] + "\"/>\n";
        s += text(lx + 10, ly, class_names[c]);
    }
    s += "</svg>\n";
    return s;
}

std::string svg_image_pair(const Image& image, const SaliencyMap& map,
                           const std::string& title) {
    const int cells = std::min(64, image.width);
    const double cell_px = 256.0 / cells;
    const int margin = 24, gap = 16;
    const int w = static_cast<int>(2 * cells * cell_px + 2 * margin + gap);
    const int h = static_cast<int>(cells * cell_px + margin + 40);

    auto sample_image = [&](int cx, int cy, int c) {
        int x = cx * image.width / cells, y = cy * image.height / cells;
        return image.at(x, y, c);
    };
    auto sample_map = [&](int cx, int cy) {
        int x = cx * map.width / cells, y = cy * map.height / cells;
        return map.at(x, y);
    };

    std::string s = svg_open(w, h);
    s += text(margin, 16, title, 14);
    for (int cy = 0; cy < cells; ++cy)
        for (int cx = 0; cx < cells; ++cx) {
            std::string color =
                hex_color(sample_image(cx, cy, 0), sample_image(cx, cy, 1),
                          sample_image(cx, cy, 2));
            s += "<rect x=\"" + fmt(margin + cx * cell_px) + "\" y=\"" +
                 fmt(24 + cy * cell_px) + "\" width=\"" + fmt(cell_px + 0.5) +
                 "\" height=\"" + fmt(cell_px + 0.5) + "\" fill=\"" + color + "\"/>\n";
        }
    const double x1 = margin + cells * cell_px + gap;
    for (int cy = 0; cy < cells; ++cy)
        for (int cx = 0; cx < cells; ++cx) {
            float v = sample_map(cx, cy);
            std::string color = hex_color(v, v, 0.15f + 0.2f * v);
            s += "<rect x=\"" + fmt(x1 + cx * cell_px) + "\" y=\"" + fmt(24 + cy * cell_px) +
                 "\" width=\"" + fmt(cell_px + 0.5) + "\" height=\"" + fmt(cell_px + 0.5) +
                 "\" fill=\"" + color + "\"/>\n";
        }
    s += text(margin, h - 8, "image");
    s += text(x1, h - 8, "saliency");
    s += "</svg>\n";
    return s;
}

}  // namespace amd
