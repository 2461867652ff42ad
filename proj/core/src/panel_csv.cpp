#include "scbal/panel_csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

namespace scbal {

namespace {

struct Cell {
  double outcome = 0.0;
  bool treated = false;
};

struct UnitRows {
  std::string label;
  std::map<std::int64_t, Cell> by_time;
};

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

[[noreturn]] void fail(std::size_t line_no, const std::string& message) {
  throw ValidationError("panel CSV line " + std::to_string(line_no) + ": " + message);
}

template <typename T>
bool parse_number(std::string_view field, T& out) {
  const char* first = field.data();
  const char* last = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last;
}

}  // namespace

std::string format_double(double value) {
  char buffer[64];
  const auto [ptr, ec] =
      std::to_chars(buffer, buffer + sizeof(buffer), value, std::chars_format::general, 17);
  if (ec != std::errc{}) throw ValidationError("cannot format floating-point value");
  return std::string(buffer, ptr);
}

LabeledPanel parse_panel_csv_text(std::string_view text, std::optional<std::int64_t> t0) {
  std::vector<UnitRows> units;
  std::unordered_map<std::string, std::size_t> index_of;
  std::map<std::int64_t, bool> grid;

  std::size_t line_no = 0;
  bool header_seen = false;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;

    if (!header_seen) {
      if (line != kPanelCsvHeader) {
        fail(line_no, "expected header '" + std::string(kPanelCsvHeader) + "', got '" +
                          std::string(line) + "'");
      }
      header_seen = true;
      continue;
    }

    const auto fields = split_fields(line);
    if (fields.size() != 4) fail(line_no, "expected 4 fields, got " + std::to_string(fields.size()));
    const std::string label(fields[0]);
    if (label.empty()) fail(line_no, "empty unit label");

    std::int64_t time = 0;
    if (!parse_number(fields[1], time)) {
      fail(line_no, "time '" + std::string(fields[1]) + "' is not an integer");
    }
    Cell cell;
    if (!parse_number(fields[2], cell.outcome) || !std::isfinite(cell.outcome)) {
      fail(line_no, "outcome '" + std::string(fields[2]) + "' is not a finite number");
    }
    if (fields[3] == "1") {
      cell.treated = true;
    } else if (fields[3] != "0") {
      fail(line_no, "treated flag '" + std::string(fields[3]) + "' must be 0 or 1");
    }

    auto [it, inserted] = index_of.try_emplace(label, units.size());
    if (inserted) units.push_back(UnitRows{label, {}});
    auto& rows = units[it->second].by_time;
    if (!rows.emplace(time, cell).second) {
      fail(line_no, "duplicate row for (unit " + label + ", time " + std::to_string(time) + ")");
    }
    grid.emplace(time, true);
  }
  if (!header_seen) throw ValidationError("panel CSV is empty");
  if (units.empty()) throw ValidationError("panel CSV has no data rows");

  std::vector<std::int64_t> times;
  for (const auto& [t, _] : grid) times.push_back(t);

  for (const auto& unit : units) {
    for (std::int64_t t : times) {
      if (!unit.by_time.contains(t)) {
        throw ValidationError("ragged time grid: missing (unit " + unit.label + ", time " +
                              std::to_string(t) + ")");
      }
    }
  }

  std::vector<std::size_t> treated_units;
  for (std::size_t u = 0; u < units.size(); ++u) {
    const auto& rows = units[u].by_time;
    if (std::any_of(rows.begin(), rows.end(), [](const auto& kv) { return kv.second.treated; })) {
      treated_units.push_back(u);
    }
  }
  if (treated_units.empty()) throw ValidationError("panel CSV has no treated unit");
  if (treated_units.size() > 1) {
    std::string names;
    for (std::size_t u : treated_units) names += (names.empty() ? "" : ", ") + units[u].label;
    throw ValidationError("panel CSV has multiple treated units: " + names);
  }
  const UnitRows& treated = units[treated_units.front()];

  // Treatment flags must switch on once and stay on.
  std::size_t first_flag = times.size();
  for (std::size_t k = 0; k < times.size(); ++k) {
    const bool flag = treated.by_time.at(times[k]).treated;
    if (flag && first_flag == times.size()) first_flag = k;
    if (!flag && first_flag != times.size()) {
      throw ValidationError("treatment flag of unit " + treated.label + " switches off at time " +
                            std::to_string(times[k]));
    }
  }

  std::size_t t0_index = 0;
  if (t0) {
    const auto it = std::find(times.begin(), times.end(), *t0);
    if (it == times.end()) {
      throw ValidationError("t0 = " + std::to_string(*t0) + " is not on the time grid");
    }
    t0_index = static_cast<std::size_t>(std::distance(times.begin(), it));
  } else {
    if (first_flag == 0) {
      throw ValidationError("unit " + treated.label +
                            " is treated from the first period; no pre-treatment periods");
    }
    t0_index = first_flag - 1;
  }
  if (t0_index + 1 >= times.size()) {
    throw ValidationError("t0 leaves no post-treatment periods");
  }
  if (units.size() < 2) throw ValidationError("panel CSV needs at least one donor unit");

  std::vector<std::size_t> order{treated_units.front()};
  for (std::size_t u = 0; u < units.size(); ++u) {
    if (u != treated_units.front()) order.push_back(u);
  }

  const auto n = static_cast<Eigen::Index>(units.size());
  const auto pre = static_cast<Eigen::Index>(t0_index + 1);
  const auto post = static_cast<Eigen::Index>(times.size()) - pre;
  LabeledPanel out;
  out.panel.x.resize(n, pre);
  out.panel.y.resize(n, post);
  out.panel.z.assign(units.size(), 0);
  out.panel.z[0] = 1;
  out.times = times;
  for (Eigen::Index r = 0; r < n; ++r) {
    const UnitRows& unit = units[order[static_cast<std::size_t>(r)]];
    out.labels.push_back(unit.label);
    for (Eigen::Index c = 0; c < pre + post; ++c) {
      const double v = unit.by_time.at(times[static_cast<std::size_t>(c)]).outcome;
      if (c < pre) {
        out.panel.x(r, c) = v;
      } else {
        out.panel.y(r, c - pre) = v;
      }
    }
  }
  return out;
}

LabeledPanel parse_panel_csv(const std::filesystem::path& path, std::optional<std::int64_t> t0) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open panel CSV " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw IoError("failed reading panel CSV " + path.string());
  return parse_panel_csv_text(buffer.str(), t0);
}

void write_panel_csv(std::ostream& out, const LabeledPanel& labeled) {
  const Panel& panel = labeled.panel;
  require_valid(panel);
  const std::size_t periods = panel.pre_periods() + panel.post_periods();
  if (labeled.labels.size() != panel.units() || labeled.times.size() != periods) {
    throw ValidationError("panel labels or times do not match the panel shape");
  }
  out << kPanelCsvHeader << '\n';
  for (std::size_t i = 0; i < panel.units(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    for (std::size_t t = 0; t < periods; ++t) {
      const bool pre = t < panel.pre_periods();
      const double v = pre ? panel.x(row, static_cast<Eigen::Index>(t))
                           : panel.y(row, static_cast<Eigen::Index>(t - panel.pre_periods()));
      const int flag = (!pre && panel.z[i] == 1) ? 1 : 0;
      out << labeled.labels[i] << ',' << labeled.times[t] << ',' << format_double(v) << ','
          << flag << '\n';
    }
  }
}

void write_panel_csv(const std::filesystem::path& path, const LabeledPanel& panel) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write panel CSV " + path.string());
  write_panel_csv(out, panel);
  if (!out) throw IoError("failed writing panel CSV " + path.string());
}

LabeledPanel label_panel(Panel panel, const std::vector<std::size_t>& unit_order) {
  LabeledPanel out;
  const std::size_t periods = panel.pre_periods() + panel.post_periods();
  if (unit_order.size() != panel.units()) {
    throw ValidationError("unit order does not match the panel's unit count");
  }
  for (std::size_t original : unit_order) out.labels.push_back("u" + std::to_string(original));
  for (std::size_t t = 0; t < periods; ++t) out.times.push_back(static_cast<std::int64_t>(t));
  out.panel = std::move(panel);
  return out;
}

}  // namespace scbal
