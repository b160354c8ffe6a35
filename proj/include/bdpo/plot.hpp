// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

namespace bdpo {

// All figures are self-contained SVG; points are column vectors in data
// coordinates and [lo, hi] frames both axes.

// Scatter of terminal samples. An empty set still yields a valid axes frame.
void plot_samples_svg(const std::string& path, const Eigen::MatrixXd& points, double lo,
                      double hi, const std::string& title);

// Generation process split into panels: frames are snapshots ordered from the
// prior to the final sample; each panel covers one interval with green start
// dots, red end dots, and grey segments for the intermediate motion.
void plot_path_overlay_svg(const std::string& path, const std::vector<Eigen::MatrixXd>& frames,
                           int panels, double lo, double hi, const std::string& title);

// Heatmap of a scalar field on a grid x grid raster with optional sample
// overlay. Returns the rendered value range, which widens toward the final
// diffusion steps on a trained model.
struct ValueRange {
    double min = 0.0;
    double max = 0.0;
    double span() const { return max - min; }
};
using ScalarField = std::function<double(double x, double y)>;
ValueRange plot_value_landscape_svg(const std::string& path, const ScalarField& field, int grid,
                                    double lo, double hi, const Eigen::MatrixXd& overlay,
                                    const std::string& title);

}  // namespace bdpo
