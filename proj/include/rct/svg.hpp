#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "rct/accum.hpp"
#include "rct/core.hpp"

// SVG scatter plots of scans in vehicle coordinates, vertical axis = x
// (forward), horizontal axis = y (left), y mirrored so that left is drawn to
// the left. Deterministic, element-countable output.
//
// Colors: moving object blue, clutter red, stationary gray; points of old
// scans pale green. In confusion mode the dark shade marks correct
// predictions and the light shade marks errors.

namespace rct {

enum class PlotMode { labels, confusion };

struct PlotStyle {
    double width_px = 640.0;
    double height_px = 640.0;
    double margin_px = 46.0;
    double marker_radius = 2.5;
    double arrow_scale = 0.6;  // seconds of travel drawn per arrow
};

namespace svgdetail {

struct Palette {
    const char* dark;
    const char* light;
};

inline Palette palette(Label l) {
    switch (l) {
        case Label::moving_object: return {"#1f77b4", "#9ecae1"};
        case Label::clutter: return {"#d62728", "#ff9896"};
        case Label::stationary: return {"#4d4d4d", "#c7c7c7"};
        case Label::unlabeled: break;
    }
    return {"#000000", "#bbbbbb"};
}

inline constexpr const char* kOldScanColor = "#b8ddb0";

inline std::string fmt(double v) {
    std::ostringstream s;
    s.precision(2);
    s << std::fixed << v;
    return s.str();
}

}  // namespace svgdetail

/// Render one cloud (typically a single scan, dt = 0 everywhere) to SVG.
/// `preds` may be empty in labels mode; confusion mode requires one
/// prediction per point.
inline std::string render_cloud_svg(const Cloud& cloud, const std::vector<SensorMount>& mounts,
                                    PlotMode mode, const std::vector<Label>& preds = {},
                                    const PlotStyle& style = {}) {
    if (mode == PlotMode::confusion && preds.size() != cloud.size())
        throw ContractError("render_cloud_svg: confusion mode needs one prediction per point");

    // view bounds from data and sensor coverage
    double x_min = -5.0, x_max = 20.0, y_min = -10.0, y_max = 10.0;
    for (const auto& p : cloud) {
        x_min = std::min(x_min, p.pos.x - 2.0);
        x_max = std::max(x_max, p.pos.x + 2.0);
        y_min = std::min(y_min, p.pos.y - 2.0);
        y_max = std::max(y_max, p.pos.y + 2.0);
    }
    const double plot_w = style.width_px - 2.0 * style.margin_px;
    const double plot_h = style.height_px - 2.0 * style.margin_px;
    const double k = std::min(plot_w / (y_max - y_min), plot_h / (x_max - x_min));

    // vehicle (x, y) -> pixel; horizontal axis is y reversed, vertical is x up
    auto px = [&](Vec2 v) {
        const double sx = style.margin_px + (y_max - v.y) * k;
        const double sy = style.height_px - style.margin_px - (v.x - x_min) * k;
        return std::pair<double, double>(sx, sy);
    };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << style.width_px
        << "\" height=\"" << style.height_px << "\" viewBox=\"0 0 " << style.width_px << " "
        << style.height_px << "\">\n";
    svg << "<rect x=\"0\" y=\"0\" width=\"" << style.width_px << "\" height=\"" << style.height_px
        << "\" fill=\"#ffffff\"/>\n";
    svg << "<rect class=\"frame\" x=\"" << style.margin_px << "\" y=\"" << style.margin_px
        << "\" width=\"" << plot_w << "\" height=\"" << plot_h
        << "\" fill=\"none\" stroke=\"#333333\"/>\n";
    svg << "<text x=\"" << style.width_px / 2.0 << "\" y=\"" << style.height_px - 10.0
        << "\" text-anchor=\"middle\" font-size=\"12\">y (m)</text>\n";
    svg << "<text x=\"14\" y=\"" << style.height_px / 2.0
        << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 14 "
        << style.height_px / 2.0 << ")\">x (m)</text>\n";

    // sensor positions for reference
    for (const auto& m : mounts) {
        const auto [sx, sy] = px(m.position());
        svg << "<rect class=\"sensor\" x=\"" << svgdetail::fmt(sx - 3) << "\" y=\""
            << svgdetail::fmt(sy - 3) << "\" width=\"6\" height=\"6\" fill=\"#000000\"/>\n";
    }

    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const CloudPoint& p = cloud[i];
        const auto [cx, cy] = px(p.pos);
        const char* color;
        if (p.dt_s < 0.0) {
            color = svgdetail::kOldScanColor;
        } else if (mode == PlotMode::labels) {
            color = svgdetail::palette(p.det.label).dark;
        } else {
            const bool correct = preds[i] == p.det.label;
            const auto pal = svgdetail::palette(p.det.label);
            color = correct ? pal.dark : pal.light;
        }
        svg << "<circle class=\"det\" cx=\"" << svgdetail::fmt(cx) << "\" cy=\""
            << svgdetail::fmt(cy) << "\" r=\"" << style.marker_radius << "\" fill=\"" << color
            << "\"/>\n";
        if (mode == PlotMode::labels && p.dt_s == 0.0 && std::abs(p.det.v_comp) > 0.25) {
            // arrow along the line of sight, length proportional to v_comp
            const SensorMount* mount = nullptr;
            for (const auto& m : mounts)
                if (m.sensor_id == p.sensor_id) mount = &m;
            if (mount) {
                const Vec2 los = p.pos - mount->position();
                const double n = los.norm();
                if (n > 1e-9) {
                    const Vec2 tip = p.pos + Vec2{los.x / n, los.y / n} *
                                                 (p.det.v_comp * style.arrow_scale);
                    const auto [tx, ty] = px(tip);
                    svg << "<line class=\"vel\" x1=\"" << svgdetail::fmt(cx) << "\" y1=\""
                        << svgdetail::fmt(cy) << "\" x2=\"" << svgdetail::fmt(tx) << "\" y2=\""
                        << svgdetail::fmt(ty) << "\" stroke=\"" << color
                        << "\" stroke-width=\"1\"/>\n";
                }
            }
        }
    }
    svg << "</svg>\n";
    return svg.str();
}

/// Single-scan convenience wrapper: builds the dt = 0 cloud first.
inline std::string render_scan_svg(const Scan& scan, const std::vector<SensorMount>& mounts,
                                   PlotMode mode, const std::vector<Label>& preds = {},
                                   const PlotStyle& style = {}) {
    Cloud cloud = accumulate({}, scan, mounts);
    return render_cloud_svg(cloud, mounts, mode, preds, style);
}

}  // namespace rct
