#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "scbal/model.hpp"

namespace scbal {

/// Long-format panel: header `unit,time,outcome,treated`, one row per
/// (unit, time). `treated` is 1 on the treated unit's post-treatment rows and
/// 0 everywhere else.
inline constexpr std::string_view kPanelCsvHeader = "unit,time,outcome,treated";

struct LabeledPanel {
  Panel panel;                      // treated unit at row 0
  std::vector<std::string> labels;  // unit label of each panel row
  std::vector<std::int64_t> times;  // time value of each column, pre then post
};

/// Parses a long-format panel. When `t0` is given it names the last
/// pre-treatment time value; otherwise it is the time just before the treated
/// unit's first flagged row. Donors keep their first-appearance order.
/// Throws ValidationError for content problems and IoError when the file
/// cannot be read.
LabeledPanel parse_panel_csv(const std::filesystem::path& path,
                             std::optional<std::int64_t> t0 = std::nullopt);
LabeledPanel parse_panel_csv_text(std::string_view text,
                                  std::optional<std::int64_t> t0 = std::nullopt);

void write_panel_csv(std::ostream& out, const LabeledPanel& panel);
void write_panel_csv(const std::filesystem::path& path, const LabeledPanel& panel);

/// Default labels u<index> for units in original order, and times 0..t_max.
LabeledPanel label_panel(Panel panel, const std::vector<std::size_t>& unit_order);

/// Shortest decimal form that reads back to the same double.
std::string format_double(double value);

}  // namespace scbal
