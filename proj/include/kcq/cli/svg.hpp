#pragma once

#include <string>
#include <vector>

#include "kcq/cli/csv.hpp"

namespace kcq::cli {

/// KCQ and non-conditional mean with mean +/- 3 SD bands against time, drawn from a timeseries table.
std::string band_plot_svg(const CsvTable& timeseries, const std::string& title);

/// KCQ and non-conditional density curves from a kcq_pdf table.
std::string pdf_plot_svg(const CsvTable& pdf, const std::string& title);

}  // namespace kcq::cli
